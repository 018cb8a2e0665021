#pragma once

// Frame-by-frame odometry: every new frame k+1 is localized from the two
// previous estimates, the altimeter, the INS distances and the landmarks
// shared with frame k.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "aerovio/constrained_solver.hpp"
#include "aerovio/sensor_sim.hpp"
#include "aerovio/vio_geometry.hpp"

namespace aerovio {

struct PipelineConfig {
  std::size_t landmark_count = 5;
  double tau_rank = 1e-3;
  /// Also stack the frame k-1 pixel rows of each selected landmark.
  bool match_older_frame = false;
  /// Horizontal position accuracy that stops the solver. It is turned into
  /// tol_pg = 8 (R_1 + R_2) position_tolerance, R_i the squared range targets,
  /// unless solver.tol_pg is set explicitly.
  double position_tolerance = 1e-8;
  CameraIntrinsics intrinsics;
  SolverOptions solver;

  void validate() const;
};

struct OdometerState {
  std::int64_t older_id = 0;
  std::int64_t current_id = 1;
  Eigen::Vector2d older = Eigen::Vector2d::Zero();
  Eigen::Vector2d current = Eigen::Vector2d::Zero();
};

struct FrameEstimate {
  std::int64_t frame_id = 0;
  double t = 0.0;
  Eigen::Vector2d estimate = Eigen::Vector2d::Zero();
  Eigen::Vector2d prediction = Eigen::Vector2d::Zero();  ///< INS dead-reckoning hint
  SolverStatus status = SolverStatus::Converged;
  int iterations = 0;
  std::size_t landmarks_used = 0;
  Eigen::Index rank = 0;
  Eigen::Index unknowns = 0;
  double singularity = 0.0;    ///< smallest singular value of the equilibrated stacked rows
  bool singular = false;       ///< reduced rank below the number of unknowns
  bool fallback = false;       ///< estimate is the INS prediction
  bool few_landmarks = false;  ///< fewer than the configured landmark count were usable
  bool range_clamped = false;
  std::optional<double> error;  ///< horizontal error vs truth, simulation only
};

/// Greedy max-min spread over the frame k+1 pixels; the first pick is the
/// pixel farthest from the image center, ties go to the smaller id.
std::vector<std::int64_t> select_landmarks(const std::vector<PixelObservation>& next_pixels,
                                           std::span<const std::int64_t> candidates, std::size_t count);

/// Localization problem for frame `next` given the two earlier sensor frames.
/// Landmarks must be seen in `next` and `current` (or `older` when older-frame
/// matching is enabled). Returns nullopt when fewer than two qualify.
std::optional<LocalizationProblem> build_problem(const OdometerState& state, const SensorFrame& older,
                                                 const SensorFrame& current, const SensorFrame& next,
                                                 const PipelineConfig& config);

/// INS dead-reckoning prediction of frame k+1: continue along the last
/// estimated direction for the horizontal range implied by the INS distance.
Eigen::Vector2d predict_next(const OdometerState& state, const SensorFrame& current, const SensorFrame& next);

/// One localization step, solved in a local frame centred on the frame-k
/// estimate. Advances `state` to (current, next).
FrameEstimate step(OdometerState& state, const SensorFrame& older, const SensorFrame& current,
                   const SensorFrame& next, const PipelineConfig& config,
                   std::vector<IterationRecord>* trace = nullptr);

struct ErrorSummary {
  std::vector<double> errors;
  double max = 0.0;
  double mean = 0.0;
  double final = 0.0;
  double drift_rate = 0.0;  ///< final error scaled to one hour, m/h
};

/// Throws LengthMismatchError when the sequences differ in length.
ErrorSummary error_metrics(std::span<const Eigen::Vector2d> estimates, std::span<const Eigen::Vector2d> truth,
                           double duration);

struct RunReport {
  std::vector<FrameEstimate> frames;
  std::vector<Eigen::Vector2d> ins_track;
  ErrorSummary proposed;
  ErrorSummary ins;
  std::size_t singular_frames = 0;
  std::size_t failed_frames = 0;       ///< solver did not converge
  std::size_t fallback_frames = 0;
  std::size_t few_landmark_frames = 0;
  std::size_t clamped_frames = 0;
  double mean_iterations = 0.0;
};

struct FrameTrace {
  std::int64_t frame_id = 0;
  IterationRecord record;
};

/// Runs the odometer over a simulated flight. Frames 0 and 1 are taken from
/// the truth; every later frame uses only sensor data and earlier estimates.
RunReport run(const SimulatedFlight& flight, const PipelineConfig& config,
              std::vector<FrameTrace>* trace = nullptr);

}  // namespace aerovio
