#include "aerovio/run_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "aerovio/errors.hpp"

namespace aerovio {

namespace fs = std::filesystem;

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

double parse_number(std::string_view token) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (token.empty() || res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw FormatError("not a number: '" + std::string(token) + "'");
  }
  return value;
}

namespace {

std::string csv_line(std::initializer_list<std::string> fields) {
  std::string line;
  bool first = true;
  for (const auto& f : fields) {
    if (!first) line += ',';
    line += f;
    first = false;
  }
  line += '\n';
  return line;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const SimulatedFlight& flight, const RunReport& report) {
  if (report.frames.size() != flight.frames.size() || report.ins_track.size() != flight.frames.size()) {
    throw LengthMismatchError("trajectory: report and flight lengths differ");
  }
  out << kTrajectoryHeader << '\n';
  for (std::size_t j = 0; j < report.frames.size(); ++j) {
    const FrameEstimate& f = report.frames[j];
    const Eigen::Vector2d truth = flight.frames[j].truth.head<2>();
    out << csv_line({std::to_string(f.frame_id), format_number(f.t), format_number(f.estimate.x()),
                     format_number(f.estimate.y()), format_number(truth.x()), format_number(truth.y()),
                     format_number(report.proposed.errors[j]), format_number(report.ins.errors[j]),
                     f.singular ? "1" : "0", std::to_string(f.iterations)});
  }
}

void write_frames_csv(std::ostream& out, const SimulatedFlight& flight) {
  out << kFramesHeader << '\n';
  for (const SensorFrame& f : flight.frames) {
    out << csv_line({std::to_string(f.frame_id), format_number(f.altimeter_reading), format_number(f.d_prev),
                     format_number(f.d_prevprev), format_number(f.truth.x()), format_number(f.truth.y()),
                     format_number(f.truth.z())});
  }
}

void write_obs_csv(std::ostream& out, const SimulatedFlight& flight) {
  out << kObsHeader << '\n';
  for (const SensorFrame& f : flight.frames) {
    for (const PixelObservation& o : f.observations) {
      out << csv_line({std::to_string(o.frame_id), std::to_string(o.landmark_id), format_number(o.x_p),
                       format_number(o.y_p)});
    }
  }
}

void write_trace_csv(std::ostream& out, const std::vector<IterationRecord>& trace) {
  out << kTraceHeader << '\n';
  for (const IterationRecord& r : trace) {
    out << csv_line({std::to_string(r.k), format_number(r.f), format_number(r.pg_norm), format_number(r.dt),
                     format_number(r.rho), r.accepted ? "1" : "0"});
  }
}

void write_frame_trace_csv(std::ostream& out, const std::vector<FrameTrace>& trace) {
  out << kFrameTraceHeader << '\n';
  for (const FrameTrace& ft : trace) {
    const IterationRecord& r = ft.record;
    out << csv_line({std::to_string(ft.frame_id), std::to_string(r.k), format_number(r.f), format_number(r.pg_norm),
                     format_number(r.dt), format_number(r.rho), r.accepted ? "1" : "0"});
  }
}

Summary summarize(std::uint64_t seed, const SimulatedFlight& flight, const RunReport& report) {
  const double duration = flight.frames.empty() ? 0.0 : flight.frames.back().t - flight.frames.front().t;
  const double ratio = report.proposed.final > 0.0 ? report.ins.final / report.proposed.final
                                                   : std::numeric_limits<double>::infinity();
  auto count = [](std::size_t v) { return std::to_string(v); };
  return {
      {"seed", std::to_string(seed)},
      {"frames", count(report.frames.size())},
      {"duration_s", format_number(duration)},
      {"final_err_m", format_number(report.proposed.final)},
      {"max_err_m", format_number(report.proposed.max)},
      {"mean_err_m", format_number(report.proposed.mean)},
      {"drift_rate_m_per_h", format_number(report.proposed.drift_rate)},
      {"ins_final_err_m", format_number(report.ins.final)},
      {"ins_drift_rate_m_per_h", format_number(report.ins.drift_rate)},
      {"ins_over_proposed", format_number(ratio)},
      {"singular_frames", count(report.singular_frames)},
      {"failed_frames", count(report.failed_frames)},
      {"fallback_frames", count(report.fallback_frames)},
      {"few_landmark_frames", count(report.few_landmark_frames)},
      {"clamped_range_frames", count(report.clamped_frames)},
      {"mean_solver_iters", format_number(report.mean_iterations)},
      {"altimeter_distance_coeff", format_number(flight.altimeter_distance_coeff)},
      {"ins_scale_bias", format_number(flight.ins_scale_bias)},
      {"ins_heading_bias_deg", format_number(flight.ins.heading_bias / kDegree)},
      {"ins_attitude_error_deg", format_number(flight.ins.attitude_error / kDegree)},
      {"ins_speed_scale", format_number(flight.ins.speed_scale)},
  };
}

void write_summary(std::ostream& out, const Summary& summary) {
  for (const auto& [key, value] : summary) out << key << " = " << value << '\n';
}

std::map<std::string, std::string> read_summary(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string trimmed = strip(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw FormatError("summary line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = strip(trimmed.substr(0, eq));
    if (key.empty()) throw FormatError("summary line " + std::to_string(line_no) + ": empty key");
    out[key] = strip(trimmed.substr(eq + 1));
  }
  return out;
}

std::vector<TrajectoryRow> read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || strip(line) != kTrajectoryHeader) {
    throw FormatError("trajectory.csv: missing or unexpected header");
  }
  std::vector<TrajectoryRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    const auto f = split_csv(strip(line));
    if (f.size() != 10) {
      throw FormatError("trajectory.csv line " + std::to_string(line_no) + ": expected 10 fields");
    }
    try {
      TrajectoryRow r;
      r.frame_id = static_cast<std::int64_t>(parse_number(f[0]));
      r.t = parse_number(f[1]);
      r.est_x = parse_number(f[2]);
      r.est_y = parse_number(f[3]);
      r.truth_x = parse_number(f[4]);
      r.truth_y = parse_number(f[5]);
      r.err_m = parse_number(f[6]);
      r.ins_err_m = parse_number(f[7]);
      r.singular_flag = static_cast<int>(parse_number(f[8]));
      r.solver_iters = static_cast<int>(parse_number(f[9]));
      rows.push_back(r);
    } catch (const FormatError& e) {
      throw FormatError("trajectory.csv line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

RunArtifacts load_run(const fs::path& dir) {
  RunArtifacts run;
  run.dir = dir;
  std::ifstream summary(dir / "summary.txt");
  if (!summary) throw FormatError("missing " + (dir / "summary.txt").string());
  run.summary = read_summary(summary);
  auto seed = run.summary.find("seed");
  if (seed == run.summary.end()) throw FormatError((dir / "summary.txt").string() + ": no seed entry");
  try {
    run.seed = static_cast<std::uint64_t>(std::stoull(seed->second));
  } catch (const std::exception&) {
    throw FormatError((dir / "summary.txt").string() + ": bad seed '" + seed->second + "'");
  }

  std::ifstream trajectory(dir / "trajectory.csv");
  if (!trajectory) throw FormatError("missing " + (dir / "trajectory.csv").string());
  try {
    run.trajectory = read_trajectory_csv(trajectory);
  } catch (const FormatError& e) {
    throw FormatError(dir.string() + ": " + e.what());
  }
  if (run.trajectory.empty()) throw FormatError((dir / "trajectory.csv").string() + ": no rows");
  return run;
}

std::vector<fs::path> find_runs(const fs::path& root) {
  if (!fs::is_directory(root)) throw FormatError("not a directory: " + root.string());
  auto is_run = [](const fs::path& d) { return fs::exists(d / "summary.txt") && fs::exists(d / "trajectory.csv"); };
  if (is_run(root)) return {root};
  std::vector<fs::path> runs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && is_run(entry.path())) runs.push_back(entry.path());
  }
  std::sort(runs.begin(), runs.end());
  return runs;
}

ReportTables build_report(std::vector<RunArtifacts> runs, double required_accuracy) {
  std::stable_sort(runs.begin(), runs.end(),
                   [](const RunArtifacts& a, const RunArtifacts& b) { return a.seed < b.seed; });

  std::ostringstream table;
  table << "seed,final_err_m,ins_final_err_m,ins_over_proposed,drift_rate_m_per_h,max_err_m,mean_err_m,"
           "singular_frames,failed_frames,pass\n";
  std::ostringstream long_form;
  long_form << "t,series,value\n";

  double sum_final = 0.0, sum_ins = 0.0, sum_ratio = 0.0, sum_drift = 0.0, sum_max = 0.0, sum_mean = 0.0;
  double sum_singular = 0.0, sum_failed = 0.0;
  bool all_pass = true;
  for (const RunArtifacts& run : runs) {
    const auto& rows = run.trajectory;
    const double final_err = rows.back().err_m;
    const double ins_err = rows.back().ins_err_m;
    const double duration = rows.back().t - rows.front().t;
    const double drift = duration > 0.0 ? final_err * 3600.0 / duration : 0.0;
    double max_err = 0.0, mean_err = 0.0;
    int singular = 0;
    for (const auto& r : rows) {
      max_err = std::max(max_err, r.err_m);
      mean_err += r.err_m;
      singular += r.singular_flag;
    }
    mean_err /= static_cast<double>(rows.size());
    const double ratio = final_err > 0.0 ? ins_err / final_err : std::numeric_limits<double>::infinity();
    double failed = 0.0;
    if (auto it = run.summary.find("failed_frames"); it != run.summary.end()) {
      try {
        failed = parse_number(it->second);
      } catch (const FormatError&) {
        throw FormatError(run.dir.string() + ": bad failed_frames entry");
      }
    }
    const bool pass = final_err < required_accuracy;
    all_pass = all_pass && pass;

    table << csv_line({std::to_string(run.seed), format_number(final_err), format_number(ins_err),
                       format_number(ratio), format_number(drift), format_number(max_err), format_number(mean_err),
                       std::to_string(singular), format_number(failed), pass ? "pass" : "fail"});
    sum_final += final_err;
    sum_ins += ins_err;
    sum_ratio += ratio;
    sum_drift += drift;
    sum_max += max_err;
    sum_mean += mean_err;
    sum_singular += singular;
    sum_failed += failed;

    const std::string tag = "_seed_" + std::to_string(run.seed);
    for (const auto& r : rows) {
      long_form << csv_line({format_number(r.t), "proposed" + tag, format_number(r.err_m)});
      long_form << csv_line({format_number(r.t), "ins" + tag, format_number(r.ins_err_m)});
    }
  }
  if (!runs.empty()) {
    const double k = static_cast<double>(runs.size());
    table << csv_line({"aggregate", format_number(sum_final / k), format_number(sum_ins / k),
                       format_number(sum_ratio / k), format_number(sum_drift / k), format_number(sum_max / k),
                       format_number(sum_mean / k), format_number(sum_singular / k), format_number(sum_failed / k),
                       all_pass ? "pass" : "fail"});
  }
  return {table.str(), long_form.str()};
}

}  // namespace aerovio
