#include "aerovio/constrained_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "aerovio/errors.hpp"

namespace aerovio {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

double spectral_norm(const Eigen::MatrixXd& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetric, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd shifted(double dt, const Eigen::MatrixXd& G) {
  Eigen::MatrixXd M = G;
  M.diagonal().array() += 1.0 / dt;
  return M;
}

}  // namespace

QuadraticObjective::QuadraticObjective(Eigen::MatrixXd hessian, Eigen::VectorXd linear,
                                       double offset)
    : hessian_(std::move(hessian)), linear_(std::move(linear)), offset_(offset) {
  if (hessian_.rows() != hessian_.cols() || hessian_.rows() != linear_.size()) {
    throw std::invalid_argument("QuadraticObjective: H must be n x n and c of length n");
  }
  // Only the symmetric part contributes to the value.
  hessian_ = 0.5 * (hessian_ + hessian_.transpose()).eval();
}

double QuadraticObjective::value(const Eigen::VectorXd& s) const {
  return 0.5 * s.dot(hessian_ * s) + linear_.dot(s) + offset_;
}

Eigen::VectorXd QuadraticObjective::gradient(const Eigen::VectorXd& s) const {
  return hessian_ * s + linear_;
}

Eigen::MatrixXd QuadraticObjective::hessian(const Eigen::VectorXd&) const { return hessian_; }

LinearEqualityConstraint::LinearEqualityConstraint(Eigen::MatrixXd matrix, Eigen::VectorXd rhs,
                                                   double tau_rank)
    : matrix_(std::move(matrix)), rhs_(std::move(rhs)) {
  const Eigen::Index m = matrix_.rows();
  const Eigen::Index n = matrix_.cols();
  if (m == 0 || n == 0) throw std::invalid_argument("constraint matrix must be non-empty");
  if (rhs_.size() != m) throw std::invalid_argument("constraint rhs length must equal row count");
  if (m > n) throw RankDeficientError(static_cast<long>(n), static_cast<long>(m));
  if (!matrix_.allFinite() || !rhs_.allFinite()) {
    throw std::invalid_argument("constraint contains non-finite entries");
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(matrix_.transpose());
  const Eigen::MatrixXd& packed = qr.matrixQR();
  const double lead = std::abs(packed(0, 0));
  long rank = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::abs(packed(i, i)) > tau_rank * lead && lead > 0.0) ++rank;
  }
  if (rank < m) throw RankDeficientError(rank, static_cast<long>(m));

  range_basis_ = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
  upper_ = packed.topRows(m).triangularView<Eigen::Upper>();
  permutation_ = qr.colsPermutation();
}

Eigen::VectorXd LinearEqualityConstraint::project_to_null_space(const Eigen::VectorXd& v) const {
  return v - range_basis_ * (range_basis_.transpose() * v);
}

Eigen::MatrixXd LinearEqualityConstraint::null_space_projector() const {
  const Eigen::Index n = cols();
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n) - range_basis_ * range_basis_.transpose();
  return 0.5 * (P + P.transpose());
}

Eigen::VectorXd LinearEqualityConstraint::multiplier(const Eigen::VectorXd& g) const {
  // A^T = Q1 R Pi^T, so A^T lambda = -g in the least-squares sense gives
  // R (Pi^T lambda) = -Q1^T g.
  Eigen::VectorXd y = upper_.triangularView<Eigen::Upper>().solve(-(range_basis_.transpose() * g));
  return permutation_ * y;
}

Eigen::VectorXd LinearEqualityConstraint::nearest_feasible(const Eigen::VectorXd& point) const {
  // A^T (A A^T)^{-1} = Q1 R^{-T} Pi^T.
  Eigen::VectorXd residual = rhs_ - matrix_ * point;
  Eigen::VectorXd z =
      upper_.transpose().triangularView<Eigen::Lower>().solve(permutation_.transpose() * residual);
  return point + range_basis_ * z;
}

void SolverOptions::validate() const {
  if (!(dt0 > 0.0)) throw std::invalid_argument("dt0 must be positive");
  if (!(0.0 < eta_a && eta_a < eta1 && eta1 <= 0.5 && 0.5 < eta2 && eta2 < 1.0)) {
    throw std::invalid_argument("require 0 < eta_a < eta1 <= 1/2 < eta2 < 1");
  }
  if (!(0.0 < gamma2 && gamma2 < 1.0 && 1.0 < gamma1)) {
    throw std::invalid_argument("require 0 < gamma2 < 1 < gamma1");
  }
  if (tol_pg && !(*tol_pg > 0.0)) throw std::invalid_argument("tol_pg must be positive");
  if (max_iter < 0) throw std::invalid_argument("max_iter must be non-negative");
  if (!(0.0 < dt_min && dt_min <= dt_max)) throw std::invalid_argument("need 0 < dt_min <= dt_max");
  if (max_consecutive_rejections < 1) {
    throw std::invalid_argument("max_consecutive_rejections must be at least 1");
  }
}

std::string_view to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::Converged:
      return "Converged";
    case SolverStatus::MaxIterations:
      return "MaxIterations";
    case SolverStatus::InfeasibleConstraint:
      return "InfeasibleConstraint";
  }
  return "Unknown";
}

Projector build_projector(const LinearEqualityConstraint& constraint) {
  return Projector{constraint.null_space_projector()};
}

Eigen::VectorXd lagrange_multiplier(const LinearEqualityConstraint& constraint,
                                    const Eigen::VectorXd& g) {
  return constraint.multiplier(g);
}

DecisionVector feasible_point(const LinearEqualityConstraint& constraint,
                              const DecisionVector& hint) {
  return constraint.nearest_feasible(hint);
}

bool pd_guard(double dt, const Eigen::MatrixXd& G, const Projector& P) {
  if (!(dt > 0.0)) return false;
  Eigen::MatrixXd M = shifted(dt, G);
  if (Eigen::LLT<Eigen::MatrixXd>(M).info() != Eigen::Success) return false;
  Eigen::MatrixXd reduced = M - P.matrix.transpose() * G * P.matrix;
  reduced = 0.5 * (reduced + reduced.transpose()).eval();
  return Eigen::LLT<Eigen::MatrixXd>(reduced).info() == Eigen::Success;
}

Eigen::VectorXd predictor_step(double dt, const Eigen::MatrixXd& G, const Eigen::VectorXd& p_g) {
  Eigen::LLT<Eigen::MatrixXd> llt(shifted(dt, G));
  if (llt.info() != Eigen::Success) {
    throw NumericalFailureError("predictor_step: (1/dt) I + G is not positive definite");
  }
  return llt.solve(-p_g);
}

DecisionVector corrected_step(const DecisionVector& s, const Eigen::VectorXd& d,
                              const Projector& P) {
  return s + P.apply(d);
}

double model_decrease(const Eigen::VectorXd& g, const Eigen::MatrixXd& G,
                      const Eigen::VectorXd& step) {
  return -g.dot(step) - 0.5 * step.dot(G * step);
}

double predicted_reduction(const DecisionVector& s, const Eigen::VectorXd& d, const Projector& P,
                           const SmoothObjective& objective) {
  return model_decrease(objective.gradient(s), objective.hessian(s), P.apply(d));
}

double ratio_denominator_floor(double f) { return 1e-14 * (1.0 + std::abs(f)); }

std::optional<double> measurement_ratio(double f_old, double f_new, double pred_red,
                                        double floor) {
  if (!(pred_red > floor)) return std::nullopt;
  return (f_old - f_new) / pred_red;
}

double update_timestep(double dt, double rho, const SolverOptions& opts) {
  const double gap = std::abs(1.0 - rho);
  double next = dt;
  if (gap <= opts.eta1) {
    next = opts.gamma1 * dt;
  } else if (gap >= opts.eta2 || std::isnan(gap)) {
    next = opts.gamma2 * dt;
  }
  return std::clamp(next, opts.dt_min, opts.dt_max);
}

SolverResult minimize(const SmoothObjective& objective, const LinearEqualityConstraint& constraint,
                      const DecisionVector& s0_hint, const SolverOptions& opts) {
  opts.validate();
  const Eigen::Index n = constraint.cols();
  if (objective.dimension() != n || s0_hint.size() != n) {
    throw std::invalid_argument("minimize: objective, constraint and hint dimensions differ");
  }

  const Projector P = build_projector(constraint);

  SolverResult result;
  DecisionVector s = feasible_point(constraint, s0_hint);
  double f = objective.value(s);
  Eigen::VectorXd g = objective.gradient(s);
  Eigen::MatrixXd G = objective.hessian(s);
  Eigen::VectorXd lambda = lagrange_multiplier(constraint, g);
  Eigen::VectorXd p_g = g + constraint.matrix().transpose() * lambda;

  const double tol = opts.tol_pg.value_or(1e-8 * (1.0 + std::abs(f)));
  const double drift_tol = 1e-11 * (1.0 + constraint.rhs().norm());
  double dt = std::clamp(opts.dt0, opts.dt_min, opts.dt_max);
  int rejections = 0;
  int k = 0;
  SolverStatus status = SolverStatus::Converged;

  while (p_g.norm() > tol) {
    if (k >= opts.max_iter || rejections >= opts.max_consecutive_rejections) {
      status = SolverStatus::MaxIterations;
      break;
    }

    IterationRecord rec;
    rec.k = k;
    rec.f = f;
    rec.pg_norm = p_g.norm();
    rec.dt = dt;
    rec.rho = -1.0;
    rec.f_trial = kNaN;
    rec.pred_red = kNaN;
    rec.step_norm = kNaN;
    rec.hessian_norm = opts.record_trace ? spectral_norm(G) : kNaN;

    double rho = -1.0;
    bool terminal = false;
    DecisionVector trial;
    double f_trial = kNaN;

    Eigen::LLT<Eigen::MatrixXd> llt(shifted(dt, G));
    rec.guarded = llt.info() == Eigen::Success && pd_guard(dt, G, P);
    if (rec.guarded) {
      Eigen::VectorXd d = llt.solve(-p_g);
      // Move along P d. Re-projecting from scratch every time would inject
      // rounding noise of size eps |s| cond(A) along the normals, which swamps
      // the model decrease near convergence; re-project only on real drift.
      trial = s + constraint.project_to_null_space(d);
      if (constraint.residual_norm(trial) > drift_tol) trial = feasible_point(constraint, trial);
      const Eigen::VectorXd step = trial - s;
      f_trial = objective.value(trial);
      const double pred = model_decrease(g, G, step);
      rec.f_trial = f_trial;
      rec.pred_red = pred;
      rec.step_norm = step.norm();

      if (is_finite(trial) && std::isfinite(f_trial)) {
        if (auto ratio = measurement_ratio(f, f_trial, pred, ratio_denominator_floor(f))) {
          rho = *ratio;
        } else {
          // Model decrease is at rounding level, so f cannot rank the trial.
          // Take it if it meets the stopping test, or if it shrinks the
          // projected gradient without raising f beyond the same floor.
          const double floor = ratio_denominator_floor(f);
          const double pg_trial = P.apply(objective.gradient(trial)).norm();
          if (pg_trial <= tol || (pg_trial < p_g.norm() && f_trial <= f + floor)) terminal = true;
        }
      }
    }

    const bool accepted = terminal || rho > opts.eta_a;
    rec.rho = rho;
    rec.accepted = accepted;
    rec.floor_terminal = terminal;

    if (accepted) {
      s = std::move(trial);
      f = f_trial;
      g = objective.gradient(s);
      G = objective.hessian(s);
      lambda = lagrange_multiplier(constraint, g);
      p_g = g + constraint.matrix().transpose() * lambda;
      rejections = 0;
    } else {
      ++rejections;
    }
    rec.feasibility = constraint.residual_norm(s);
    dt = update_timestep(dt, terminal ? 1.0 : rho, opts);
    ++k;
    if (opts.record_trace) result.trace.push_back(rec);
  }

  result.s_star = std::move(s);
  result.lambda_star = std::move(lambda);
  result.f_star = f;
  result.pg_norm = p_g.norm();
  result.tol_pg = tol;
  result.iterations = k;
  result.status = status;
  return result;
}

SolverResult minimize(const SmoothObjective& objective, const Eigen::MatrixXd& A,
                      const Eigen::VectorXd& b, const DecisionVector& s0_hint,
                      const SolverOptions& opts) {
  try {
    const LinearEqualityConstraint constraint(A, b, opts.tau_rank);
    return minimize(objective, constraint, s0_hint, opts);
  } catch (const RankDeficientError&) {
    SolverResult result;
    result.s_star = s0_hint;
    result.lambda_star = Eigen::VectorXd::Zero(A.rows());
    result.f_star = objective.value(s0_hint);
    result.pg_norm = std::numeric_limits<double>::infinity();
    result.status = SolverStatus::InfeasibleConstraint;
    return result;
  }
}

}  // namespace aerovio
