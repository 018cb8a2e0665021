#include "aerovio/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "aerovio/errors.hpp"

namespace aerovio {

void PipelineConfig::validate() const {
  if (landmark_count < 2) throw ConfigError("geometry.landmarks: must be at least 2");
  if (!(tau_rank >= 0.0 && tau_rank < 1.0)) throw ConfigError("geometry.tau_rank: must be in [0, 1)");
  if (!(position_tolerance > 0.0) || !std::isfinite(position_tolerance)) {
    throw ConfigError("solver.position_tolerance: must be positive");
  }
  if (!(intrinsics.focal_length > 0.0)) throw ConfigError("camera.focal_length: must be positive");
  try {
    solver.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("solver: ") + e.what());
  }
}

std::vector<std::int64_t> select_landmarks(const std::vector<PixelObservation>& next_pixels,
                                           std::span<const std::int64_t> candidates, std::size_t count) {
  struct Candidate {
    std::int64_t id;
    Eigen::Vector2d pixel;
  };
  std::vector<Candidate> pool;
  for (const auto id : candidates) {
    auto it = std::find_if(next_pixels.begin(), next_pixels.end(),
                           [id](const PixelObservation& o) { return o.landmark_id == id; });
    if (it != next_pixels.end()) pool.push_back({id, Eigen::Vector2d(it->x_p, it->y_p)});
  }
  std::sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) { return a.id < b.id; });
  pool.erase(std::unique(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) { return a.id == b.id; }),
             pool.end());

  std::vector<std::int64_t> chosen;
  if (pool.empty() || count == 0) return chosen;

  std::vector<double> min_dist(pool.size(), std::numeric_limits<double>::infinity());
  std::vector<bool> used(pool.size(), false);
  auto pick = [&](std::size_t i) {
    used[i] = true;
    chosen.push_back(pool[i].id);
    for (std::size_t j = 0; j < pool.size(); ++j) {
      min_dist[j] = std::min(min_dist[j], (pool[j].pixel - pool[i].pixel).norm());
    }
  };

  std::size_t first = 0;
  for (std::size_t i = 1; i < pool.size(); ++i) {
    if (pool[i].pixel.norm() > pool[first].pixel.norm()) first = i;
  }
  pick(first);
  while (chosen.size() < std::min(count, pool.size())) {
    std::size_t best = pool.size();
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (used[i]) continue;
      if (best == pool.size() || min_dist[i] > min_dist[best]) best = i;
    }
    pick(best);
  }
  return chosen;
}

namespace {

std::set<std::int64_t> ids_of(const SensorFrame& frame) {
  std::set<std::int64_t> ids;
  for (const auto& o : frame.observations) ids.insert(o.landmark_id);
  return ids;
}

}  // namespace

std::optional<LocalizationProblem> build_problem(const OdometerState& state, const SensorFrame& older,
                                                 const SensorFrame& current, const SensorFrame& next,
                                                 const PipelineConfig& config) {
  const std::set<std::int64_t> in_current = ids_of(current);
  const std::set<std::int64_t> in_older = config.match_older_frame ? ids_of(older) : std::set<std::int64_t>{};
  std::vector<std::int64_t> candidates;
  for (const auto& o : next.observations) {
    if (in_current.count(o.landmark_id) || in_older.count(o.landmark_id)) candidates.push_back(o.landmark_id);
  }
  const std::vector<std::int64_t> chosen = select_landmarks(next.observations, candidates, config.landmark_count);
  if (chosen.size() < 2) return std::nullopt;
  const std::set<std::int64_t> selected(chosen.begin(), chosen.end());

  LocalizationProblem problem;
  problem.frame_ids = {older.frame_id, current.frame_id, next.frame_id};
  problem.older_position = state.older;
  problem.current_position = state.current;
  problem.dh_current_next = next.altimeter_reading - current.altimeter_reading;
  problem.dh_older_next = next.altimeter_reading - older.altimeter_reading;
  problem.dist_current_next = next.d_prev;
  problem.dist_older_next = next.d_prevprev;
  problem.intrinsics = config.intrinsics;

  auto take = [&](const SensorFrame& frame) {
    for (const auto& o : frame.observations) {
      if (selected.count(o.landmark_id)) problem.observations.push_back(o);
    }
  };
  if (config.match_older_frame) take(older);
  take(current);
  take(next);
  return problem;
}

Eigen::Vector2d predict_next(const OdometerState& state, const SensorFrame& current, const SensorFrame& next) {
  const Eigen::Vector2d delta = state.current - state.older;
  const double norm = delta.norm();
  if (!(norm > 0.0) || !std::isfinite(next.d_prev)) return state.current;
  const double dh = next.altimeter_reading - current.altimeter_reading;
  const double range = std::sqrt(std::max(next.d_prev * next.d_prev - dh * dh, 0.0));
  return state.current + (range / norm) * delta;
}

FrameEstimate step(OdometerState& state, const SensorFrame& older, const SensorFrame& current,
                   const SensorFrame& next, const PipelineConfig& config, std::vector<IterationRecord>* trace) {
  FrameEstimate out;
  out.frame_id = next.frame_id;
  out.t = next.t;
  out.prediction = predict_next(state, current, next);
  out.estimate = out.prediction;

  // Absolute coordinates grow to hundreds of kilometres; solving relative to
  // frame k keeps the rounding floor of the gradient independent of that.
  const Eigen::Vector2d origin = state.current;
  OdometerState local = state;
  local.older -= origin;
  local.current.setZero();

  std::optional<LocalizationProblem> problem = build_problem(local, older, current, next, config);
  if (!problem) {
    out.fallback = true;
    out.few_landmarks = true;
    out.status = SolverStatus::InfeasibleConstraint;
  } else {
    try {
      const StateLayout layout = layout_for(*problem);
      out.landmarks_used = layout.landmark_count();
      out.few_landmarks = out.landmarks_used < config.landmark_count;
      out.unknowns = layout.size();

      const AssembledConstraint raw = assemble_rows(*problem, layout);
      const ReducedConstraint reduced = reduce_constraint(raw, config.tau_rank);
      out.rank = reduced.rank;
      out.singular = reduced.rank < layout.size();
      out.singularity = raw.matrix.rows() >= raw.matrix.cols() ? reduced.singular_values.minCoeff() : 0.0;

      const DistanceObjective objective = build_objective(*problem, layout);
      out.range_clamped = objective.range_clamped;

      const DecisionVector hint =
          dead_reckoning_hint(*problem, layout, out.prediction - origin, current.altimeter_reading);
      const DecisionVector s0 = initial_guess(reduced, hint);

      SolverOptions opts = config.solver;
      opts.record_trace = opts.record_trace || trace != nullptr;
      if (!opts.tol_pg) {
        double range_scale = 0.0;
        for (const auto& term : objective.objective.terms()) range_scale += term.target;
        opts.tol_pg = 8.0 * std::max(range_scale, 1.0) * config.position_tolerance;
      }
      SolverResult result = minimize(objective.objective, reduced.constraint, s0, opts);
      out.status = result.status;
      out.iterations = result.iterations;
      if (trace) trace->insert(trace->end(), result.trace.begin(), result.trace.end());

      const Eigen::Vector2d solved(result.s_star(StateLayout::next_x()), result.s_star(StateLayout::next_y()));
      if (result.status == SolverStatus::Converged && solved.allFinite()) {
        out.estimate = origin + solved;
      } else {
        out.fallback = true;
      }
    } catch (const GeometryError&) {
      out.fallback = true;
      out.status = SolverStatus::InfeasibleConstraint;
    } catch (const RankDeficientError&) {
      out.fallback = true;
      out.status = SolverStatus::InfeasibleConstraint;
    } catch (const NumericalFailureError&) {
      out.fallback = true;
      out.status = SolverStatus::InfeasibleConstraint;
    }
  }

  state.older_id = state.current_id;
  state.older = state.current;
  state.current_id = next.frame_id;
  state.current = out.estimate;
  return out;
}

ErrorSummary error_metrics(std::span<const Eigen::Vector2d> estimates, std::span<const Eigen::Vector2d> truth,
                           double duration) {
  if (estimates.size() != truth.size()) {
    throw LengthMismatchError("LengthMismatch: " + std::to_string(estimates.size()) + " estimates vs " +
                              std::to_string(truth.size()) + " truth samples");
  }
  ErrorSummary out;
  out.errors.reserve(estimates.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double e = (estimates[i] - truth[i]).norm();
    out.errors.push_back(e);
    out.max = std::max(out.max, e);
    sum += e;
  }
  if (!out.errors.empty()) {
    out.mean = sum / static_cast<double>(out.errors.size());
    out.final = out.errors.back();
  }
  out.drift_rate = duration > 0.0 ? out.final * 3600.0 / duration : 0.0;
  return out;
}

RunReport run(const SimulatedFlight& flight, const PipelineConfig& config, std::vector<FrameTrace>* trace) {
  config.validate();
  const auto& frames = flight.frames;
  RunReport report;
  report.frames.reserve(frames.size());

  for (std::size_t j = 0; j < std::min<std::size_t>(2, frames.size()); ++j) {
    FrameEstimate init;
    init.frame_id = frames[j].frame_id;
    init.t = frames[j].t;
    init.estimate = frames[j].truth.head<2>();
    init.prediction = init.estimate;
    report.frames.push_back(init);
  }

  if (frames.size() >= 3) {
    OdometerState state;
    state.older_id = frames[0].frame_id;
    state.current_id = frames[1].frame_id;
    state.older = report.frames[0].estimate;
    state.current = report.frames[1].estimate;
    std::vector<IterationRecord> records;
    for (std::size_t j = 2; j < frames.size(); ++j) {
      records.clear();
      report.frames.push_back(
          step(state, frames[j - 2], frames[j - 1], frames[j], config, trace ? &records : nullptr));
      if (trace) {
        for (const auto& r : records) trace->push_back({frames[j].frame_id, r});
      }
    }
  }

  std::vector<Eigen::Vector2d> estimates;
  std::vector<Eigen::Vector2d> truth;
  for (std::size_t j = 0; j < report.frames.size(); ++j) {
    estimates.push_back(report.frames[j].estimate);
    truth.push_back(frames[j].truth.head<2>());
  }
  const double duration = frames.empty() ? 0.0 : frames.back().t - frames.front().t;
  report.proposed = error_metrics(estimates, truth, duration);
  report.ins_track = flight.ins.track;
  report.ins = error_metrics(report.ins_track, truth, duration);

  double iterations = 0.0;
  std::size_t solved = 0;
  for (std::size_t j = 0; j < report.frames.size(); ++j) {
    FrameEstimate& f = report.frames[j];
    f.error = report.proposed.errors[j];
    if (j < 2) continue;
    ++solved;
    iterations += f.iterations;
    report.singular_frames += f.singular ? 1 : 0;
    report.failed_frames += f.status != SolverStatus::Converged ? 1 : 0;
    report.fallback_frames += f.fallback ? 1 : 0;
    report.few_landmark_frames += f.few_landmarks ? 1 : 0;
    report.clamped_frames += f.range_clamped ? 1 : 0;
  }
  report.mean_iterations = solved > 0 ? iterations / static_cast<double>(solved) : 0.0;
  return report;
}

}  // namespace aerovio
