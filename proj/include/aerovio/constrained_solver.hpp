#pragma once

// Minimizer for a smooth objective subject to linear equality constraints
// A s = b. The iteration follows the projected gradient flow
//
//   ds/dt = -(grad f(s) + A^T lambda),   A s = b,
//
// with a linearized implicit Euler predictor, a Euclidean projection back onto
// the constraint plane, and a trust-region style control of the time step.

#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace aerovio {

using DecisionVector = Eigen::VectorXd;

/// Relative pivot tolerance used to decide full row rank of a constraint matrix.
inline constexpr double kDefaultRankTolerance = 1e-10;

/// Twice continuously differentiable objective.
class SmoothObjective {
 public:
  virtual ~SmoothObjective() = default;

  virtual Eigen::Index dimension() const = 0;
  virtual double value(const Eigen::VectorXd& s) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& s) const = 0;
  virtual Eigen::MatrixXd hessian(const Eigen::VectorXd& s) const = 0;
};

/// f(s) = 1/2 s^T H s + c^T s + offset.
class QuadraticObjective final : public SmoothObjective {
 public:
  QuadraticObjective(Eigen::MatrixXd hessian, Eigen::VectorXd linear, double offset = 0.0);

  Eigen::Index dimension() const override { return linear_.size(); }
  double value(const Eigen::VectorXd& s) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& s) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& s) const override;

  const Eigen::MatrixXd& hessian_matrix() const { return hessian_; }
  const Eigen::VectorXd& linear_term() const { return linear_; }

 private:
  Eigen::MatrixXd hessian_;
  Eigen::VectorXd linear_;
  double offset_;
};

/// Orthogonal projector onto null(A).
struct Projector {
  Eigen::MatrixXd matrix;

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return matrix * v; }
};

/// The affine set {s : A s = b} with A of full row rank.
///
/// A column-pivoted Householder factorization of A^T backs every operation,
/// so A A^T is never formed or inverted.
class LinearEqualityConstraint {
 public:
  /// Throws RankDeficientError when the numerical rank of A is below its row
  /// count (always the case for m > n), and std::invalid_argument on
  /// inconsistent dimensions or non-finite entries.
  LinearEqualityConstraint(Eigen::MatrixXd matrix, Eigen::VectorXd rhs,
                           double tau_rank = kDefaultRankTolerance);

  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const Eigen::VectorXd& rhs() const { return rhs_; }
  Eigen::Index rows() const { return matrix_.rows(); }
  Eigen::Index cols() const { return matrix_.cols(); }

  double residual_norm(const Eigen::VectorXd& s) const { return (matrix_ * s - rhs_).norm(); }

  /// P v for the null-space projector P = I - A^T (A A^T)^{-1} A.
  Eigen::VectorXd project_to_null_space(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd null_space_projector() const;

  /// lambda minimizing ||g + A^T lambda||.
  Eigen::VectorXd multiplier(const Eigen::VectorXd& g) const;

  /// Euclidean projection of `point` onto the constraint plane.
  Eigen::VectorXd nearest_feasible(const Eigen::VectorXd& point) const;

 private:
  Eigen::MatrixXd matrix_;
  Eigen::VectorXd rhs_;
  // A^T P = Q R with Q = [range_basis_, *], P a column permutation.
  Eigen::MatrixXd range_basis_;
  Eigen::MatrixXd upper_;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic> permutation_;
};

struct SolverOptions {
  double dt0 = 1.0;
  double eta_a = 1e-6;
  double eta1 = 0.25;
  double eta2 = 0.75;
  double gamma1 = 2.0;
  double gamma2 = 0.5;
  /// Termination threshold on ||p_g||; unset means 1e-8 (1 + |f(s0)|).
  std::optional<double> tol_pg;
  int max_iter = 1000;
  double tau_rank = kDefaultRankTolerance;
  double dt_min = 1e-12;
  double dt_max = 1e8;
  int max_consecutive_rejections = 60;
  bool record_trace = false;

  /// Throws std::invalid_argument unless 0 < eta_a < eta1 <= 1/2 < eta2 < 1,
  /// 0 < gamma2 < 1 < gamma1 and the step limits are ordered.
  void validate() const;
};

enum class SolverStatus { Converged, MaxIterations, InfeasibleConstraint };

std::string_view to_string(SolverStatus status);

/// Per-iteration record. Fields describing the trial step are NaN when the
/// definiteness guard rejected the time step before a trial was formed.
struct IterationRecord {
  int k = 0;
  double f = 0.0;        ///< f(s_k) at the start of the iteration
  double pg_norm = 0.0;  ///< ||p_g(s_k)||
  double dt = 0.0;       ///< time step used for the trial
  double rho = 0.0;      ///< measurement ratio, -1 for guard failure or floored model decrease
  bool accepted = false;
  bool guarded = false;        ///< both shifted matrices were positive definite
  bool floor_terminal = false; ///< accepted with a sub-floor model decrease, on projected-gradient progress
  double f_trial = 0.0;
  double pred_red = 0.0;
  double step_norm = 0.0;      ///< ||P d_k||
  double hessian_norm = 0.0;   ///< spectral norm of G_k
  double feasibility = 0.0;    ///< ||A s_k - b|| of the iterate after this iteration
};

struct SolverResult {
  DecisionVector s_star;
  Eigen::VectorXd lambda_star;
  double f_star = 0.0;
  double pg_norm = 0.0;
  double tol_pg = 0.0;
  int iterations = 0;
  SolverStatus status = SolverStatus::MaxIterations;
  std::vector<IterationRecord> trace;
};

Projector build_projector(const LinearEqualityConstraint& constraint);

/// lambda = -(A A^T)^{-1} A g, so that g + A^T lambda = P g.
Eigen::VectorXd lagrange_multiplier(const LinearEqualityConstraint& constraint,
                                    const Eigen::VectorXd& g);

DecisionVector feasible_point(const LinearEqualityConstraint& constraint,
                              const DecisionVector& hint);

/// True iff both (1/dt) I + G and (1/dt) I + G - P^T G P admit a Cholesky factorization.
bool pd_guard(double dt, const Eigen::MatrixXd& G, const Projector& P);

/// Solves ((1/dt) I + G) d = -p_g. Throws NumericalFailureError if the
/// shifted matrix cannot be factorized.
Eigen::VectorXd predictor_step(double dt, const Eigen::MatrixXd& G, const Eigen::VectorXd& p_g);

DecisionVector corrected_step(const DecisionVector& s, const Eigen::VectorXd& d, const Projector& P);

/// q_k(s_k) - q_k(s_k + step) = -g^T step - 1/2 step^T G step.
double model_decrease(const Eigen::VectorXd& g, const Eigen::MatrixXd& G, const Eigen::VectorXd& step);

/// q_k(s_k) - q_k(s_k + P d_k) for the quadratic model of `objective` at s_k.
double predicted_reduction(const DecisionVector& s, const Eigen::VectorXd& d, const Projector& P,
                           const SmoothObjective& objective);

/// Floor below which the model decrease is treated as rounding noise.
double ratio_denominator_floor(double f);

/// (f_old - f_new) / pred_red, or nullopt when pred_red <= floor.
std::optional<double> measurement_ratio(double f_old, double f_new, double pred_red, double floor);

/// Time-step adaptation driven by |1 - rho|, clamped to [dt_min, dt_max].
double update_timestep(double dt, double rho, const SolverOptions& opts);

SolverResult minimize(const SmoothObjective& objective, const LinearEqualityConstraint& constraint,
                      const DecisionVector& s0_hint, const SolverOptions& opts = {});

/// Same as above but validates (A, b) itself; a rank failure yields status
/// InfeasibleConstraint and s_star = s0_hint.
SolverResult minimize(const SmoothObjective& objective, const Eigen::MatrixXd& A,
                      const Eigen::VectorXd& b, const DecisionVector& s0_hint,
                      const SolverOptions& opts = {});

}  // namespace aerovio
