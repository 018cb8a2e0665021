#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "aerovio/config.hpp"
#include "aerovio/constrained_solver.hpp"
#include "aerovio/errors.hpp"
#include "aerovio/pipeline.hpp"
#include "aerovio/sensor_sim.hpp"
#include "aerovio/vio_geometry.hpp"

namespace py = pybind11;
using namespace aerovio;

namespace {

SolverOptions options(std::optional<double> tol_pg, int max_iter) {
  SolverOptions opts;
  opts.tol_pg = tol_pg;
  opts.max_iter = max_iter;
  return opts;
}

py::dict result_dict(const SolverResult& r) {
  py::dict d;
  d["s"] = r.s_star;
  d["lambda"] = r.lambda_star;
  d["f"] = r.f_star;
  d["pg_norm"] = r.pg_norm;
  d["tol_pg"] = r.tol_pg;
  d["iterations"] = r.iterations;
  d["status"] = std::string(to_string(r.status));
  return d;
}

}  // namespace

PYBIND11_MODULE(_aerovio, m) {
  m.doc() = "Equality-constrained solver and flight simulation bindings";

  py::register_exception<RankDeficientError>(m, "RankDeficientError", PyExc_ValueError);

  m.def(
      "minimize_qp",
      [](const Eigen::MatrixXd& H, const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
         std::optional<Eigen::VectorXd> hint, std::optional<double> tol_pg, int max_iter) {
        const QuadraticObjective obj(H, c);
        const Eigen::VectorXd s0 = hint ? *hint : Eigen::VectorXd::Zero(H.rows());
        return result_dict(minimize(obj, A, b, s0, options(tol_pg, max_iter)));
      },
      py::arg("H"), py::arg("c"), py::arg("A"), py::arg("b"), py::arg("hint") = py::none(),
      py::arg("tol_pg") = py::none(), py::arg("max_iter") = 1000,
      "Minimize 1/2 s^T H s + c^T s subject to A s = b.");

  m.def(
      "minimize_range",
      [](const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::Vector2d& center, double target,
         const Eigen::VectorXd& hint, std::optional<double> tol_pg, int max_iter) {
        const RangeObjective obj(A.cols(), 0, 1, {RangeTerm{center, target}});
        return result_dict(minimize(obj, A, b, hint, options(tol_pg, max_iter)));
      },
      py::arg("A"), py::arg("b"), py::arg("center"), py::arg("target"), py::arg("hint"),
      py::arg("tol_pg") = py::none(), py::arg("max_iter") = 1000,
      "Minimize (|s[0:2] - center|^2 - target)^2 subject to A s = b.");

  m.def(
      "build_projector",
      [](const Eigen::MatrixXd& A) {
        const LinearEqualityConstraint con(A, Eigen::VectorXd::Zero(A.rows()));
        return Eigen::MatrixXd(build_projector(con).matrix);
      },
      py::arg("A"), "Orthogonal projector onto the null space of a full-row-rank A.");

  m.def(
      "reduce",
      [](const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double tau_rank) {
        const ReducedConstraint r = reduce_constraint(A, b, tau_rank);
        return py::make_tuple(Eigen::MatrixXd(r.constraint.matrix()), Eigen::VectorXd(r.constraint.rhs()));
      },
      py::arg("A"), py::arg("b"), py::arg("tau_rank") = 1e-10,
      "Equilibrate and truncate A s = b to a full-row-rank system with the same solutions.");

  m.def(
      "simulate",
      [](std::uint64_t seed, double duration, double climb_rate, bool noise) {
        RunConfig config;
        config.sim.plan.duration = duration;
        config.sim.plan.climb_rate = climb_rate;
        if (!noise) config.sim.noise = NoiseSpec::none();
        config.validate();
        RunReport r;
        {
          py::gil_scoped_release release;
          r = run(simulate_flight(config.sim, seed), config.pipeline);
        }
        py::dict d;
        d["frames"] = r.frames.size();
        d["final_err_m"] = r.proposed.final;
        d["max_err_m"] = r.proposed.max;
        d["ins_final_err_m"] = r.ins.final;
        d["failed_frames"] = r.failed_frames;
        d["singular_frames"] = r.singular_frames;
        d["errors"] = r.proposed.errors;
        return d;
      },
      py::arg("seed") = 1, py::arg("duration") = 3600.0, py::arg("climb_rate") = 0.0, py::arg("noise") = true,
      "Simulate a flight, run the odometer and return error statistics.");
}
