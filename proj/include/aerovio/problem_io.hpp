#pragma once

// Plain-text constrained problem format read by `aerovio solve`:
//
//   n m
//   <m rows of A, n numbers each>
//   <b, m numbers>
//   quadratic            | quartic_vio
//   <H, n rows of n>     | ix iy T
//   <c, n numbers>       | <T lines: cx cy R>
//   [hint
//    <n numbers>]
//
// Tokens are whitespace separated; '#' starts a comment running to the end of
// the line. Numbers are parsed independently of the C locale.

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aerovio/constrained_solver.hpp"
#include "aerovio/vio_geometry.hpp"

namespace aerovio {

enum class ObjectiveKind { Quadratic, QuarticVio };

struct SerializedProblem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  ObjectiveKind kind = ObjectiveKind::Quadratic;
  Eigen::MatrixXd H;  ///< quadratic only
  Eigen::VectorXd c;  ///< quadratic only
  Eigen::Index x_index = 0;  ///< quartic_vio only
  Eigen::Index y_index = 1;
  std::vector<RangeTerm> terms;
  std::optional<Eigen::VectorXd> hint;

  std::unique_ptr<SmoothObjective> make_objective() const;
};

/// Throws FormatError with a description of the first problem found.
SerializedProblem parse_problem(std::istream& in);
SerializedProblem load_problem(const std::string& path);

void write_problem(std::ostream& out, const SerializedProblem& problem);

}  // namespace aerovio
