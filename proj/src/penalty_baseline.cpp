#include "aerovio/penalty_baseline.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace aerovio {

namespace {

double condition_number(const Eigen::MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetric, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd abs_eig = eig.eigenvalues().cwiseAbs();
  const double lo = abs_eig.minCoeff();
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return abs_eig.maxCoeff() / lo;
}

}  // namespace

PenaltyResult minimize_penalty_baseline(const SmoothObjective& objective, const Eigen::MatrixXd& A,
                                        const Eigen::VectorXd& b, const DecisionVector& s0,
                                        std::span<const double> weight_schedule,
                                        const PenaltyOptions& opts) {
  if (A.cols() != s0.size() || A.rows() != b.size() || objective.dimension() != s0.size()) {
    throw std::invalid_argument("minimize_penalty_baseline: dimension mismatch");
  }
  if (weight_schedule.empty()) throw std::invalid_argument("empty weight schedule");

  PenaltyResult out;
  DecisionVector s = s0;
  const Eigen::MatrixXd AtA = A.transpose() * A;
  bool all_converged = true;
  int total_iterations = 0;

  for (const double w : weight_schedule) {
    auto merit = [&](const Eigen::VectorXd& x) {
      return objective.value(x) + w * (A * x - b).squaredNorm();
    };

    PenaltyStage stage;
    stage.weight = w;
    double damping = 0.0;
    double F = merit(s);
    for (int it = 0; it < opts.max_iter_per_weight; ++it) {
      const Eigen::VectorXd grad = objective.gradient(s) + 2.0 * w * A.transpose() * (A * s - b);
      const Eigen::MatrixXd H = objective.hessian(s) + 2.0 * w * AtA;
      ++stage.iterations;

      // Levenberg-damped Newton step on the penalized merit.
      bool stepped = false;
      for (int tries = 0; tries < 60 && !stepped; ++tries) {
        Eigen::MatrixXd M = H;
        M.diagonal().array() += damping;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
        const Eigen::VectorXd step = ldlt.solve(-grad);
        const bool usable = ldlt.info() == Eigen::Success && ldlt.isPositive() && step.allFinite();
        if (usable) {
          const Eigen::VectorXd candidate = s + step;
          const double F_new = merit(candidate);
          if (F_new <= F) {
            const bool small = step.norm() <= opts.step_tol * (1.0 + s.norm());
            s = candidate;
            F = F_new;
            damping *= 0.1;
            stepped = true;
            if (small) stage.converged = true;
            break;
          }
        }
        damping = damping == 0.0 ? 1e-12 * (1.0 + H.diagonal().cwiseAbs().maxCoeff())
                                 : damping * 10.0;
      }
      if (!stepped) {
        // No decrease possible at any damping: the merit is flat to rounding.
        stage.converged = true;
      }
      if (stage.converged) break;
    }

    stage.s = s;
    stage.feasibility = (A * s - b).norm();
    stage.hessian_condition = condition_number(objective.hessian(s) + 2.0 * w * AtA);
    all_converged = all_converged && stage.converged;
    total_iterations += stage.iterations;
    out.stages.push_back(stage);
  }

  SolverResult& r = out.result;
  r.s_star = s;
  r.f_star = objective.value(s);
  r.iterations = total_iterations;
  r.status = all_converged ? SolverStatus::Converged : SolverStatus::MaxIterations;
  // Multiplier estimate implied by the penalty: lambda = 2 w (A s - b).
  r.lambda_star = 2.0 * weight_schedule.back() * (A * s - b);
  r.pg_norm = (objective.gradient(s) + A.transpose() * r.lambda_star).norm();
  return out;
}

}  // namespace aerovio
