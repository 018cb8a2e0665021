#pragma once

// CSV and key = value artifacts written by `aerovio simulate` and read back
// by `aerovio report`. Column order is part of the file contract.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "aerovio/constrained_solver.hpp"
#include "aerovio/pipeline.hpp"
#include "aerovio/sensor_sim.hpp"

namespace aerovio {

/// %.9g-style text (9 significant digits, trailing zeros dropped), "nan"/"inf"
/// for non-finite values. Independent of the C locale.
std::string format_number(double value);

/// Strict locale-independent parse of a full token; throws FormatError.
double parse_number(std::string_view token);

inline constexpr std::string_view kTrajectoryHeader =
    "frame_id,t,est_x,est_y,truth_x,truth_y,err_m,ins_err_m,singular_flag,solver_iters";
inline constexpr std::string_view kFramesHeader =
    "frame_id,alt_reading,d_prev,d_prevprev,truth_x,truth_y,truth_alt";
inline constexpr std::string_view kObsHeader = "frame_id,landmark_id,x_p,y_p";
inline constexpr std::string_view kTraceHeader = "k,f,pg_norm,dt,rho,accepted";
inline constexpr std::string_view kFrameTraceHeader = "frame_id,k,f,pg_norm,dt,rho,accepted";

void write_trajectory_csv(std::ostream& out, const SimulatedFlight& flight, const RunReport& report);
void write_frames_csv(std::ostream& out, const SimulatedFlight& flight);
void write_obs_csv(std::ostream& out, const SimulatedFlight& flight);
void write_trace_csv(std::ostream& out, const std::vector<IterationRecord>& trace);
void write_frame_trace_csv(std::ostream& out, const std::vector<FrameTrace>& trace);

using Summary = std::vector<std::pair<std::string, std::string>>;

Summary summarize(std::uint64_t seed, const SimulatedFlight& flight, const RunReport& report);
void write_summary(std::ostream& out, const Summary& summary);
std::map<std::string, std::string> read_summary(std::istream& in);

struct TrajectoryRow {
  std::int64_t frame_id = 0;
  double t = 0.0;
  double est_x = 0.0;
  double est_y = 0.0;
  double truth_x = 0.0;
  double truth_y = 0.0;
  double err_m = 0.0;
  double ins_err_m = 0.0;
  int singular_flag = 0;
  int solver_iters = 0;
};

/// Throws FormatError on a wrong header or malformed row.
std::vector<TrajectoryRow> read_trajectory_csv(std::istream& in);

/// One run directory as consumed by the report: summary.txt + trajectory.csv.
struct RunArtifacts {
  std::filesystem::path dir;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> summary;
  std::vector<TrajectoryRow> trajectory;
};

/// Throws FormatError when a file is missing or corrupt.
RunArtifacts load_run(const std::filesystem::path& dir);

/// Run directories below `root`: root itself if it holds a summary.txt with a
/// trajectory.csv, otherwise its immediate subdirectories that do.
std::vector<std::filesystem::path> find_runs(const std::filesystem::path& root);

struct ReportTables {
  std::string table;  ///< report.csv
  std::string long_form;  ///< report_long.csv
};

/// Comparison table (one row per run sorted by seed, then an aggregate row)
/// and a long-format (t, series, value) table for plotting.
ReportTables build_report(std::vector<RunArtifacts> runs, double required_accuracy = 900.0);

}  // namespace aerovio
