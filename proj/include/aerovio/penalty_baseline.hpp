#pragma once

// Quadratic-penalty baseline: minimize f(s) + w ||A s - b||^2 for an
// increasing sequence of weights w. Kept only for comparison with the
// constrained solver; its effective Hessian G + 2 w A^T A becomes badly
// conditioned as w grows.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "aerovio/constrained_solver.hpp"

namespace aerovio {

struct PenaltyOptions {
  int max_iter_per_weight = 200;
  /// Stop an inner solve when the damped Newton step is below step_tol (1 + ||s||).
  double step_tol = 1e-13;
};

struct PenaltyStage {
  double weight = 0.0;
  DecisionVector s;
  double feasibility = 0.0;         ///< ||A s - b||
  double hessian_condition = 0.0;   ///< cond_2(G + 2 w A^T A) at s
  int iterations = 0;
  bool converged = false;
};

struct PenaltyResult {
  SolverResult result;  ///< final stage; status MaxIterations if any stage stalled
  std::vector<PenaltyStage> stages;
};

PenaltyResult minimize_penalty_baseline(const SmoothObjective& objective, const Eigen::MatrixXd& A,
                                        const Eigen::VectorXd& b, const DecisionVector& s0,
                                        std::span<const double> weight_schedule,
                                        const PenaltyOptions& opts = {});

}  // namespace aerovio
