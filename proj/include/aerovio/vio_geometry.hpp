#pragma once

// Per-frame localization problem for a nadir-looking pinhole camera.
//
// Unknown vector layout (n = 2 + 3L):
//   [x_{k+1}, y_{k+1}, x_l1, y_l1, h_1, ..., x_lL, y_lL, h_L]
// where h_n is the vertical distance from landmark n to the optical center at
// frame k. Pixel coordinates follow x_p = f (x_cam - x_l) / h.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "aerovio/constrained_solver.hpp"

namespace aerovio {

struct CameraIntrinsics {
  double focal_length = 1000.0;  ///< pixels
};

/// Which of the three frames of a localization step an observation belongs to.
enum class FrameSlot { Older = 0, Current = 1, Next = 2 };  // k-1, k, k+1

struct PixelObservation {
  std::int64_t landmark_id = 0;
  std::int64_t frame_id = 0;
  double x_p = 0.0;
  double y_p = 0.0;
};

class StateLayout {
 public:
  explicit StateLayout(std::vector<std::int64_t> landmark_ids);

  static constexpr Eigen::Index next_x() { return 0; }
  static constexpr Eigen::Index next_y() { return 1; }
  Eigen::Index landmark_x(std::size_t i) const { return 2 + 3 * static_cast<Eigen::Index>(i); }
  Eigen::Index landmark_y(std::size_t i) const { return landmark_x(i) + 1; }
  Eigen::Index height(std::size_t i) const { return landmark_x(i) + 2; }

  Eigen::Index size() const { return 2 + 3 * static_cast<Eigen::Index>(ids_.size()); }
  std::size_t landmark_count() const { return ids_.size(); }
  const std::vector<std::int64_t>& landmark_ids() const { return ids_; }
  std::optional<std::size_t> index_of(std::int64_t landmark_id) const;

 private:
  std::vector<std::int64_t> ids_;
};

struct LocalizationProblem {
  std::array<std::int64_t, 3> frame_ids{0, 1, 2};  ///< k-1, k, k+1
  Eigen::Vector2d older_position = Eigen::Vector2d::Zero();
  Eigen::Vector2d current_position = Eigen::Vector2d::Zero();
  double dh_older_next = 0.0;    ///< altimeter(k+1) - altimeter(k-1)
  double dh_current_next = 0.0;  ///< altimeter(k+1) - altimeter(k)
  double dist_older_next = 0.0;  ///< INS distance k-1 -> k+1
  double dist_current_next = 0.0;
  std::vector<PixelObservation> observations;
  CameraIntrinsics intrinsics;

  /// altimeter(k-1) - altimeter(k)
  double dh_current_older() const { return dh_current_next - dh_older_next; }
  std::optional<FrameSlot> slot_of(std::int64_t frame_id) const;
};

/// Layout over every landmark id appearing in the problem, sorted ascending.
StateLayout layout_for(const LocalizationProblem& problem);

struct AssembledConstraint {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd rhs;
  Eigen::VectorXd row_norms;  ///< Euclidean norm of each raw row (equilibration record)
};

struct ReducedConstraint {
  LinearEqualityConstraint constraint;
  Eigen::Index rank = 0;
  Eigen::VectorXd singular_values;            ///< of the equilibrated raw matrix
  std::vector<double> discarded_singular_values;
};

/// Pixel of a landmark seen from `camera` (x, y, altitude).
/// Throws GeometryError(LandmarkAboveCamera) when the landmark is not below the camera.
Eigen::Vector2d project_landmark(const Eigen::Vector3d& camera, const Eigen::Vector3d& landmark,
                                 const CameraIntrinsics& intrinsics);

/// Stacks two rows (x and y) per observation of each layout landmark, in
/// layout order and frame order k-1, k, k+1.
AssembledConstraint assemble_rows(const LocalizationProblem& problem, const StateLayout& layout);

/// Smallest singular value of the row-equilibrated constraint matrix; close to
/// zero when the altitude change between frames vanishes.
double singularity_indicator(const LocalizationProblem& problem);

/// Equilibrate rows, keep singular directions above tau_rank * sigma_max and
/// return the consistent full-row-rank system Sigma_r V_r^T s = U_r^T b.
ReducedConstraint reduce_constraint(const AssembledConstraint& raw, double tau_rank);
ReducedConstraint reduce_constraint(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& rhs,
                                    double tau_rank);

struct RangeTerm {
  Eigen::Vector2d center;
  double target = 0.0;  ///< squared horizontal range
};

/// f(s) = sum_t (|(s_ix, s_iy) - c_t|^2 - R_t)^2.
class RangeObjective final : public SmoothObjective {
 public:
  RangeObjective(Eigen::Index dimension, Eigen::Index x_index, Eigen::Index y_index,
                 std::vector<RangeTerm> terms);

  Eigen::Index dimension() const override { return dimension_; }
  double value(const Eigen::VectorXd& s) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& s) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& s) const override;

  Eigen::Index x_index() const { return x_index_; }
  Eigen::Index y_index() const { return y_index_; }
  const std::vector<RangeTerm>& terms() const { return terms_; }

 private:
  Eigen::Index dimension_;
  Eigen::Index x_index_;
  Eigen::Index y_index_;
  std::vector<RangeTerm> terms_;
};

struct DistanceObjective {
  RangeObjective objective;
  bool range_clamped = false;  ///< some d^2 - dh^2 was negative and clamped to 0
};

/// INS-distance objective on (x_{k+1}, y_{k+1}) with targets d^2 - dh^2 for
/// the k -> k+1 and k-1 -> k+1 baselines.
DistanceObjective build_objective(const LocalizationProblem& problem, const StateLayout& layout);

/// Full-length hint: frame k+1 at `next_xy`, each landmark back-projected from
/// its frame-k pixel at height `height_prior` (or from frame k-1 when unseen at k).
DecisionVector dead_reckoning_hint(const LocalizationProblem& problem, const StateLayout& layout,
                                   const Eigen::Vector2d& next_xy, double height_prior);

/// s0 = s_mn + P (hint - s_mn): the feasible point nearest to `hint`.
DecisionVector initial_guess(const ReducedConstraint& reduced, const DecisionVector& hint);

}  // namespace aerovio
