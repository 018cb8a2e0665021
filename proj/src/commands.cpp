#include "aerovio/commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "aerovio/config.hpp"
#include "aerovio/errors.hpp"
#include "aerovio/pipeline.hpp"
#include "aerovio/problem_io.hpp"
#include "aerovio/run_io.hpp"
#include "aerovio/sensor_sim.hpp"
#include "aerovio/vio_geometry.hpp"

namespace aerovio {

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitSolverFailed = 2;
constexpr int kExitMaxIterations = 3;

constexpr double kRequiredAccuracy = 900.0;

std::string fixed6(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 6);
  if (ec != std::errc()) return format_number(v);
  return std::string(buf, end);
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  writer(out);
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

// ---------------------------------------------------------------- simulate

struct SimulateFlags {
  std::string config_path;
  bool paper_preset = false;
  std::optional<std::uint64_t> seed;
  std::string seeds;
  std::optional<double> duration;
  std::string out;
  std::optional<int> jobs;
  bool trace = false;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  bool config_problem = false;  // InsufficientCoverage and friends
  std::string error;
  double final_err = 0.0;
  double ins_final_err = 0.0;
  std::size_t failed_frames = 0;
  std::size_t singular_frames = 0;
  double seconds = 0.0;
};

SeedOutcome simulate_seed(const RunConfig& config, std::uint64_t seed, const fs::path& dir) {
  SeedOutcome o;
  o.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    const SimulatedFlight flight = simulate_flight(config.sim, seed);
    std::vector<FrameTrace> trace;
    const RunReport report = run(flight, config.pipeline, config.trace ? &trace : nullptr);

    fs::create_directories(dir);
    write_file(dir / "trajectory.csv", [&](std::ostream& s) { write_trajectory_csv(s, flight, report); });
    write_file(dir / "frames.csv", [&](std::ostream& s) { write_frames_csv(s, flight); });
    write_file(dir / "obs.csv", [&](std::ostream& s) { write_obs_csv(s, flight); });
    if (config.trace) write_file(dir / "trace.csv", [&](std::ostream& s) { write_frame_trace_csv(s, trace); });
    write_file(dir / "summary.txt", [&](std::ostream& s) { write_summary(s, summarize(seed, flight, report)); });

    o.ok = true;
    o.final_err = report.proposed.final;
    o.ins_final_err = report.ins.final;
    o.failed_frames = report.failed_frames;
    o.singular_frames = report.singular_frames;
  } catch (const InsufficientCoverageError& e) {
    o.config_problem = true;
    o.error = std::string("InsufficientCoverage: ") + e.what();
  } catch (const ConfigError& e) {
    o.config_problem = true;
    o.error = e.what();
  } catch (const std::exception& e) {
    o.error = e.what();
  }
  o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return o;
}

Summary aggregate_summary(const std::vector<SeedOutcome>& outcomes) {
  std::vector<double> finals;
  double ins_min = std::numeric_limits<double>::infinity();
  double ratio_min = std::numeric_limits<double>::infinity();
  std::size_t failed = 0;
  std::size_t singular = 0;
  std::size_t within = 0;
  std::string seeds;
  for (const auto& o : outcomes) {
    seeds += (seeds.empty() ? "" : " ") + std::to_string(o.seed);
    if (!o.ok) continue;
    finals.push_back(o.final_err);
    ins_min = std::min(ins_min, o.ins_final_err);
    ratio_min = std::min(ratio_min, o.final_err > 0.0 ? o.ins_final_err / o.final_err
                                                      : std::numeric_limits<double>::infinity());
    failed += o.failed_frames;
    singular += o.singular_frames;
    if (o.final_err < kRequiredAccuracy) ++within;
  }
  double median = std::numeric_limits<double>::quiet_NaN();
  double mean = median;
  double max = median;
  if (!finals.empty()) {
    std::vector<double> sorted = finals;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    mean = 0.0;
    for (double v : sorted) mean += v;
    mean /= static_cast<double>(n);
    max = sorted.back();
  }
  return {
      {"seeds", seeds},
      {"runs", std::to_string(outcomes.size())},
      {"completed_runs", std::to_string(finals.size())},
      {"median_final_err_m", format_number(median)},
      {"mean_final_err_m", format_number(mean)},
      {"max_final_err_m", format_number(max)},
      {"min_ins_final_err_m", format_number(finals.empty() ? std::numeric_limits<double>::quiet_NaN() : ins_min)},
      {"min_ins_over_proposed", format_number(finals.empty() ? std::numeric_limits<double>::quiet_NaN() : ratio_min)},
      {"runs_within_900_m", std::to_string(within)},
      {"failed_frames", std::to_string(failed)},
      {"singular_frames", std::to_string(singular)},
  };
}

int cmd_simulate(const SimulateFlags& flags, std::ostream& out, std::ostream& err, const EnvLookup& env) {
  RunConfig config;
  try {
    if (flags.paper_preset) apply_paper_preset(config);
    if (!flags.config_path.empty()) apply_config_file(config, flags.config_path);
    apply_environment(config, env);
    if (flags.seed) config.seeds = {*flags.seed};
    if (!flags.seeds.empty()) config.seeds = parse_seed_list(flags.seeds);
    if (flags.duration) config.sim.plan.duration = *flags.duration;
    if (!flags.out.empty()) config.out_dir = flags.out;
    if (flags.jobs) config.jobs = *flags.jobs;
    if (flags.trace) config.trace = true;
    config.validate();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitError;
  }

  const fs::path root(config.out_dir);
  const bool multi = config.seeds.size() > 1;
  try {
    fs::create_directories(root);
    write_file(root / "config.ini", [&](std::ostream& s) { write_config(s, config); });
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }

  std::vector<SeedOutcome> outcomes(config.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < config.seeds.size(); i = next++) {
      const std::uint64_t seed = config.seeds[i];
      outcomes[i] = simulate_seed(config, seed, multi ? root / ("seed_" + std::to_string(seed)) : root);
    }
  };
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), config.seeds.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int code = kExitOk;
  for (const auto& o : outcomes) {
    if (!o.ok) {
      err << "seed " << o.seed << ": " << o.error << '\n';
      code = kExitError;
      continue;
    }
    out << "seed " << o.seed << ": final error " << format_number(o.final_err) << " m, INS "
        << format_number(o.ins_final_err) << " m, " << o.singular_frames << " singular / " << o.failed_frames
        << " failed frames, " << fixed6(o.seconds) << " s\n";
    if (o.failed_frames > 0 && code == kExitOk) code = kExitSolverFailed;
  }
  if (multi) {
    try {
      write_file(root / "summary.txt", [&](std::ostream& s) { write_summary(s, aggregate_summary(outcomes)); });
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitError;
    }
  }
  return code;
}

// ---------------------------------------------------------------- solve

struct SolveFlags {
  std::string problem;
  std::string trace;
  std::optional<int> max_iter;
  std::optional<double> tol;
  bool reduce = false;
  double tau_rank = 1e-10;
};

int cmd_solve(const SolveFlags& flags, std::ostream& out, std::ostream& err) {
  SerializedProblem problem;
  try {
    problem = load_problem(flags.problem);
  } catch (const FormatError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitError;
  }

  SolverOptions opts;
  opts.record_trace = !flags.trace.empty();
  opts.tau_rank = flags.tau_rank;
  if (flags.max_iter) opts.max_iter = *flags.max_iter;
  if (flags.tol) opts.tol_pg = *flags.tol;

  const Eigen::Index n = problem.A.cols();
  const DecisionVector hint = problem.hint.value_or(DecisionVector::Zero(n));
  SolverResult result;
  try {
    opts.validate();
    const auto objective = problem.make_objective();
    if (flags.reduce) {
      const ReducedConstraint reduced = reduce_constraint(problem.A, problem.b, flags.tau_rank);
      out << "rank: " << reduced.rank << " of " << problem.A.rows() << " rows\n";
      result = minimize(*objective, reduced.constraint, hint, opts);
    } else {
      const LinearEqualityConstraint constraint(problem.A, problem.b, flags.tau_rank);
      result = minimize(*objective, constraint, hint, opts);
    }
  } catch (const RankDeficientError& e) {
    err << e.what() << " (use --reduce to solve the reduced system)\n";
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }

  if (!flags.trace.empty()) {
    if (flags.trace == "-") {
      write_trace_csv(out, result.trace);
    } else {
      try {
        write_file(flags.trace, [&](std::ostream& s) { write_trace_csv(s, result.trace); });
      } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
      }
    }
  }

  out << "status: " << to_string(result.status) << '\n';
  out << "iterations: " << result.iterations << '\n';
  out << "f: " << format_number(result.f_star) << '\n';
  out << "pg_norm: " << format_number(result.pg_norm) << '\n';
  out << "residual: " << format_number((problem.A * result.s_star - problem.b).norm()) << '\n';
  out << "s*:";
  for (Eigen::Index i = 0; i < result.s_star.size(); ++i) out << ' ' << fixed6(result.s_star(i));
  out << '\n';

  if (result.status == SolverStatus::MaxIterations) {
    err << "MaxIterations: best iterate printed\n";
    return kExitMaxIterations;
  }
  return result.status == SolverStatus::Converged ? kExitOk : kExitError;
}

// ---------------------------------------------------------------- report

struct ReportFlags {
  std::vector<std::string> dirs;
  std::string out;
};

int cmd_report(const ReportFlags& flags, std::ostream& out, std::ostream& err) {
  std::vector<RunArtifacts> runs;
  try {
    for (const auto& d : flags.dirs) {
      if (!fs::is_directory(d)) throw FormatError("not a directory: " + d);
      const auto found = find_runs(d);
      if (found.empty()) throw FormatError("no run artifacts (summary.txt + trajectory.csv) under " + d);
      for (const auto& r : found) runs.push_back(load_run(r));
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }

  const ReportTables tables = build_report(std::move(runs), kRequiredAccuracy);
  const fs::path dest = flags.out.empty() ? fs::path(flags.dirs.front()) : fs::path(flags.out);
  try {
    fs::create_directories(dest);
    write_file(dest / "report.csv", [&](std::ostream& s) { s << tables.table; });
    write_file(dest / "report_long.csv", [&](std::ostream& s) { s << tables.long_form; });
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  out << tables.table;
  return kExitOk;
}

}  // namespace

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
  CLI::App app{"Monocular vision + altimeter + INS-distance odometry on synthetic flights", "aerovio"};
  app.require_subcommand(1);

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate flights and run the odometer on them");
  simulate->add_option("--config", sim.config_path, "INI configuration file");
  simulate->add_flag("--paper-preset", sim.paper_preset, "1200 m, 235 m/s, one hour, default error budget");
  auto* seed_opt = simulate->add_option("--seed", sim.seed, "Single seed");
  simulate->add_option("--seeds", sim.seeds, "Seed list, e.g. \"1-10\" or \"1,4,9\"")->excludes(seed_opt);
  simulate->add_option("--duration", sim.duration, "Flight duration in seconds");
  simulate->add_option("--out", sim.out, "Output directory");
  simulate->add_option("--jobs", sim.jobs, "Worker threads");
  simulate->add_flag("--trace", sim.trace, "Also write per-iteration solver traces");

  SolveFlags solve;
  auto* solve_cmd = app.add_subcommand("solve", "Solve a serialized equality-constrained problem");
  solve_cmd->add_option("problem", solve.problem, "Problem file")->required();
  solve_cmd->add_option("--trace", solve.trace, "Per-iteration CSV, '-' for stdout");
  solve_cmd->add_option("--max-iter", solve.max_iter, "Iteration cap");
  solve_cmd->add_option("--tol", solve.tol, "Termination threshold on ||p_g||");
  solve_cmd->add_flag("--reduce", solve.reduce, "Reduce a rank-deficient system by truncated SVD first");
  solve_cmd->add_option("--tau-rank", solve.tau_rank, "Relative rank tolerance")->capture_default_str();

  ReportFlags report;
  auto* report_cmd = app.add_subcommand("report", "Compare proposed-method and INS errors over run directories");
  report_cmd->add_option("dirs", report.dirs, "Run directories or their parents")->required();
  report_cmd->add_option("--out", report.out, "Where to write report.csv and report_long.csv");

  std::vector<std::string> argv_storage{"aerovio"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  if (simulate->parsed()) return cmd_simulate(sim, out, err, env);
  if (solve_cmd->parsed()) return cmd_solve(solve, out, err);
  return cmd_report(report, out, err);
}

}  // namespace aerovio
