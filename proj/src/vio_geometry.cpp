#include "aerovio/vio_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "aerovio/errors.hpp"

namespace aerovio {

namespace {

std::string id_text(std::int64_t id) { return std::to_string(id); }

}  // namespace

StateLayout::StateLayout(std::vector<std::int64_t> landmark_ids) : ids_(std::move(landmark_ids)) {
  std::set<std::int64_t> seen;
  for (auto id : ids_) {
    if (!seen.insert(id).second) {
      throw GeometryError(GeometryErrorCode::InvalidProblem, "duplicate landmark id " + id_text(id));
    }
  }
}

std::optional<std::size_t> StateLayout::index_of(std::int64_t landmark_id) const {
  auto it = std::find(ids_.begin(), ids_.end(), landmark_id);
  if (it == ids_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ids_.begin());
}

std::optional<FrameSlot> LocalizationProblem::slot_of(std::int64_t frame_id) const {
  for (int i = 0; i < 3; ++i) {
    if (frame_ids[i] == frame_id) return static_cast<FrameSlot>(i);
  }
  return std::nullopt;
}

StateLayout layout_for(const LocalizationProblem& problem) {
  std::set<std::int64_t> ids;
  for (const auto& obs : problem.observations) ids.insert(obs.landmark_id);
  return StateLayout(std::vector<std::int64_t>(ids.begin(), ids.end()));
}

Eigen::Vector2d project_landmark(const Eigen::Vector3d& camera, const Eigen::Vector3d& landmark,
                                 const CameraIntrinsics& intrinsics) {
  const double h = camera.z() - landmark.z();
  if (!(h > 0.0)) {
    throw GeometryError(GeometryErrorCode::LandmarkAboveCamera,
                        "landmark is not below the camera (h = " + std::to_string(h) + ")");
  }
  const double scale = intrinsics.focal_length / h;
  return {scale * (camera.x() - landmark.x()), scale * (camera.y() - landmark.y())};
}

AssembledConstraint assemble_rows(const LocalizationProblem& problem, const StateLayout& layout) {
  const double fc = problem.intrinsics.focal_length;
  if (!(fc > 0.0)) throw GeometryError(GeometryErrorCode::InvalidProblem, "focal length must be positive");

  // Bucket observations per landmark and frame slot.
  const std::size_t L = layout.landmark_count();
  std::vector<std::array<std::optional<Eigen::Vector2d>, 3>> pixels(L);
  for (const auto& obs : problem.observations) {
    const auto idx = layout.index_of(obs.landmark_id);
    if (!idx) {
      throw GeometryError(GeometryErrorCode::UnknownLandmarkId,
                          "UnknownLandmarkId: " + id_text(obs.landmark_id));
    }
    const auto slot = problem.slot_of(obs.frame_id);
    if (!slot) {
      throw GeometryError(GeometryErrorCode::UnknownFrameId, "unknown frame id " + id_text(obs.frame_id));
    }
    if (!std::isfinite(obs.x_p) || !std::isfinite(obs.y_p)) {
      throw GeometryError(GeometryErrorCode::InvalidProblem, "non-finite pixel coordinate");
    }
    pixels[*idx][static_cast<int>(*slot)] = Eigen::Vector2d(obs.x_p, obs.y_p);
  }

  Eigen::Index rows = 0;
  for (std::size_t i = 0; i < L; ++i) {
    const auto id = layout.landmark_ids()[i];
    if (!pixels[i][2]) {
      throw GeometryError(GeometryErrorCode::MissingNextFrameObservation,
                          "MissingFramePlusOneObservation: landmark " + id_text(id));
    }
    if (!pixels[i][0] && !pixels[i][1]) {
      throw GeometryError(GeometryErrorCode::MissingEarlierObservation,
                          "landmark " + id_text(id) + " has no observation in frame k-1 or k");
    }
    for (const auto& p : pixels[i]) rows += p ? 2 : 0;
  }

  const Eigen::Index n = layout.size();
  AssembledConstraint out;
  out.matrix = Eigen::MatrixXd::Zero(rows, n);
  out.rhs = Eigen::VectorXd::Zero(rows);

  const std::array<Eigen::Vector2d, 2> known{problem.older_position, problem.current_position};
  const std::array<double, 2> dh_from_current{problem.dh_current_older(), 0.0};

  Eigen::Index r = 0;
  for (std::size_t i = 0; i < L; ++i) {
    const Eigen::Index col_x = layout.landmark_x(i);
    const Eigen::Index col_h = layout.height(i);
    for (int slot = 0; slot < 2; ++slot) {
      if (!pixels[i][slot]) continue;
      const Eigen::Vector2d a = *pixels[i][slot] / fc;
      // x_l + a h = x_j - a dh_k^j
      for (int axis = 0; axis < 2; ++axis, ++r) {
        out.matrix(r, col_x + axis) = 1.0;
        out.matrix(r, col_h) = a[axis];
        out.rhs(r) = known[slot][axis] - a[axis] * dh_from_current[slot];
      }
    }
    const Eigen::Vector2d a = *pixels[i][2] / fc;
    // x_{k+1} - x_l - a h = a dh_k^{k+1}
    for (int axis = 0; axis < 2; ++axis, ++r) {
      out.matrix(r, StateLayout::next_x() + axis) = 1.0;
      out.matrix(r, col_x + axis) = -1.0;
      out.matrix(r, col_h) = -a[axis];
      out.rhs(r) = a[axis] * problem.dh_current_next;
    }
  }
  out.row_norms = out.matrix.rowwise().norm();
  return out;
}

namespace {

struct Equilibrated {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd rhs;
};

Equilibrated equilibrate(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& rhs) {
  Equilibrated e{matrix, rhs};
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    const double norm = matrix.row(i).norm();
    if (norm > 0.0) {
      e.matrix.row(i) /= norm;
      e.rhs(i) /= norm;
    }
  }
  return e;
}

}  // namespace

double singularity_indicator(const LocalizationProblem& problem) {
  const StateLayout layout = layout_for(problem);
  const AssembledConstraint raw = assemble_rows(problem, layout);
  const Equilibrated e = equilibrate(raw.matrix, raw.rhs);
  if (e.matrix.rows() < e.matrix.cols()) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(e.matrix);
  return svd.singularValues().minCoeff();
}

ReducedConstraint reduce_constraint(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& rhs,
                                    double tau_rank) {
  if (matrix.rows() == 0 || matrix.cols() == 0 || rhs.size() != matrix.rows()) {
    throw GeometryError(GeometryErrorCode::InvalidProblem, "reduce_constraint: empty or mismatched system");
  }
  const Equilibrated e = equilibrate(matrix, rhs);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(e.matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;

  Eigen::Index r = 0;
  while (r < sigma.size() && sigma(r) > tau_rank * sigma_max && sigma(r) > 0.0) ++r;
  if (r == 0) throw GeometryError(GeometryErrorCode::DegenerateSystem, "DegenerateSystem: numerical rank 0");

  Eigen::MatrixXd reduced = sigma.head(r).asDiagonal() * svd.matrixV().leftCols(r).transpose();
  Eigen::VectorXd reduced_rhs = svd.matrixU().leftCols(r).transpose() * e.rhs;

  std::vector<double> discarded;
  for (Eigen::Index i = r; i < sigma.size(); ++i) discarded.push_back(sigma(i));

  const double factor_tol = tau_rank > 0.0 ? std::min(kDefaultRankTolerance, 0.5 * tau_rank) : 0.0;
  return ReducedConstraint{LinearEqualityConstraint(std::move(reduced), std::move(reduced_rhs), factor_tol),
                           r, sigma, std::move(discarded)};
}

ReducedConstraint reduce_constraint(const AssembledConstraint& raw, double tau_rank) {
  return reduce_constraint(raw.matrix, raw.rhs, tau_rank);
}

RangeObjective::RangeObjective(Eigen::Index dimension, Eigen::Index x_index, Eigen::Index y_index,
                               std::vector<RangeTerm> terms)
    : dimension_(dimension), x_index_(x_index), y_index_(y_index), terms_(std::move(terms)) {
  if (x_index < 0 || y_index < 0 || x_index >= dimension || y_index >= dimension || x_index == y_index) {
    throw std::invalid_argument("RangeObjective: position indices out of range");
  }
}

double RangeObjective::value(const Eigen::VectorXd& s) const {
  const Eigen::Vector2d p(s(x_index_), s(y_index_));
  double f = 0.0;
  for (const auto& t : terms_) {
    const double r = (p - t.center).squaredNorm() - t.target;
    f += r * r;
  }
  return f;
}

Eigen::VectorXd RangeObjective::gradient(const Eigen::VectorXd& s) const {
  const Eigen::Vector2d p(s(x_index_), s(y_index_));
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (const auto& t : terms_) {
    const Eigen::Vector2d delta = p - t.center;
    g += 4.0 * (delta.squaredNorm() - t.target) * delta;
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dimension_);
  out(x_index_) = g.x();
  out(y_index_) = g.y();
  return out;
}

Eigen::MatrixXd RangeObjective::hessian(const Eigen::VectorXd& s) const {
  const Eigen::Vector2d p(s(x_index_), s(y_index_));
  Eigen::Matrix2d H = Eigen::Matrix2d::Zero();
  for (const auto& t : terms_) {
    const Eigen::Vector2d delta = p - t.center;
    const double r = delta.squaredNorm() - t.target;
    H += 8.0 * delta * delta.transpose() + 4.0 * r * Eigen::Matrix2d::Identity();
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dimension_, dimension_);
  const std::array<Eigen::Index, 2> idx{x_index_, y_index_};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) out(idx[i], idx[j]) = H(i, j);
  }
  return out;
}

DistanceObjective build_objective(const LocalizationProblem& problem, const StateLayout& layout) {
  const double d_cur = problem.dist_current_next;
  const double d_old = problem.dist_older_next;
  if (!std::isfinite(d_cur) || !std::isfinite(d_old) || !std::isfinite(problem.dh_current_next) ||
      !std::isfinite(problem.dh_older_next)) {
    throw GeometryError(GeometryErrorCode::InvalidProblem, "INS distances and altimeter deltas are required");
  }
  bool clamped = false;
  auto target = [&clamped](double d, double dh) {
    const double r = d * d - dh * dh;
    if (r < 0.0) {
      clamped = true;
      return 0.0;
    }
    return r;
  };
  std::vector<RangeTerm> terms{
      {problem.current_position, target(d_cur, problem.dh_current_next)},
      {problem.older_position, target(d_old, problem.dh_older_next)},
  };
  return DistanceObjective{RangeObjective(layout.size(), StateLayout::next_x(), StateLayout::next_y(),
                                          std::move(terms)),
                           clamped};
}

DecisionVector dead_reckoning_hint(const LocalizationProblem& problem, const StateLayout& layout,
                                   const Eigen::Vector2d& next_xy, double height_prior) {
  const double fc = problem.intrinsics.focal_length;
  DecisionVector hint = DecisionVector::Zero(layout.size());
  hint(StateLayout::next_x()) = next_xy.x();
  hint(StateLayout::next_y()) = next_xy.y();

  const std::int64_t current_id = problem.frame_ids[1];
  const std::int64_t older_id = problem.frame_ids[0];
  for (std::size_t i = 0; i < layout.landmark_count(); ++i) {
    const auto id = layout.landmark_ids()[i];
    const PixelObservation* at_current = nullptr;
    const PixelObservation* at_older = nullptr;
    for (const auto& obs : problem.observations) {
      if (obs.landmark_id != id) continue;
      if (obs.frame_id == current_id) at_current = &obs;
      if (obs.frame_id == older_id) at_older = &obs;
    }
    hint(layout.height(i)) = height_prior;
    if (at_current) {
      hint(layout.landmark_x(i)) = problem.current_position.x() - at_current->x_p / fc * height_prior;
      hint(layout.landmark_y(i)) = problem.current_position.y() - at_current->y_p / fc * height_prior;
    } else if (at_older) {
      const double h_older = height_prior + problem.dh_current_older();
      hint(layout.landmark_x(i)) = problem.older_position.x() - at_older->x_p / fc * h_older;
      hint(layout.landmark_y(i)) = problem.older_position.y() - at_older->y_p / fc * h_older;
    }
  }
  return hint;
}

DecisionVector initial_guess(const ReducedConstraint& reduced, const DecisionVector& hint) {
  return feasible_point(reduced.constraint, hint);
}

}  // namespace aerovio
