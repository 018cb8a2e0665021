#pragma once

#include <random>

#include <Eigen/Dense>

namespace aerovio::testing {

struct RandomQp {
  Eigen::MatrixXd H;
  Eigen::VectorXd c;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

inline Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = n01(rng);
  }
  return M;
}

/// Convex QP with 2 <= n <= max_n and 1 <= m < n.
inline RandomQp random_qp(std::mt19937_64& rng, int max_n = 30) {
  std::uniform_int_distribution<int> pick_n(2, max_n);
  const int n = pick_n(rng);
  std::uniform_int_distribution<int> pick_m(1, n - 1);
  const int m = pick_m(rng);
  RandomQp qp;
  const Eigen::MatrixXd M = gaussian(n, n, rng);
  qp.H = M.transpose() * M / n + 0.1 * Eigen::MatrixXd::Identity(n, n);
  qp.c = gaussian(n, 1, rng);
  qp.A = gaussian(m, n, rng);
  qp.b = gaussian(m, 1, rng);
  return qp;
}

/// Solution of the KKT system [H A^T; A 0] [s; lambda] = [-c; b] by full-pivot LU.
inline Eigen::VectorXd kkt_solution(const RandomQp& qp) {
  const Eigen::Index n = qp.H.rows();
  const Eigen::Index m = qp.A.rows();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = qp.H;
  K.topRightCorner(n, m) = qp.A.transpose();
  K.bottomLeftCorner(m, n) = qp.A;
  Eigen::VectorXd rhs(n + m);
  rhs << -qp.c, qp.b;
  return K.fullPivLu().solve(rhs).head(n);
}

}  // namespace aerovio::testing
