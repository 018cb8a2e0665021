#include "aerovio/sensor_sim.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <stdexcept>
#include <string>

#include "aerovio/errors.hpp"

namespace aerovio {

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field + ": " + what);
}

bool finite_nonnegative(double v) { return std::isfinite(v) && v >= 0.0; }

Eigen::Vector2d heading_unit(double heading) { return {std::cos(heading), std::sin(heading)}; }

}  // namespace

void FlightPlan::validate() const {
  require(std::isfinite(duration) && duration > 0.0, "flight.duration", "must be positive");
  require(std::isfinite(speed) && speed > 0.0, "flight.speed", "must be positive");
  require(std::isfinite(altitude) && altitude > 0.0, "flight.altitude", "must be positive");
  require(std::isfinite(heading), "flight.heading", "must be finite");
  require(std::isfinite(frame_interval) && frame_interval > 0.0, "flight.frame_interval", "must be positive");
  require(std::isfinite(climb_rate), "flight.climb_rate", "must be finite");
  require(altitude + std::min(0.0, climb_rate * duration) > 0.0, "flight.climb_rate",
          "flight would descend below zero altitude");
}

bool FlightPlan::within_paper_envelope() const {
  const double end_altitude = altitude + climb_rate * duration;
  return speed >= 210.0 && speed <= 260.0 && altitude >= 1000.0 && altitude <= 1500.0 &&
         end_altitude >= 1000.0 && end_altitude <= 1500.0;
}

std::size_t FlightPlan::frame_count() const {
  return static_cast<std::size_t>(std::floor(duration / frame_interval + 1e-9)) + 1;
}

NoiseSpec NoiseSpec::none() {
  NoiseSpec n;
  n.los_sigma = 0.0;
  n.los_angle_max = 0.0;
  n.altimeter_sigma = 0.0;
  n.altimeter_distance_coeff = 0.0;
  n.ins_distance_bias = 0.0;
  n.ins_random_walk = 0.0;
  n.ins_heading_error = 0.0;
  n.ins_attitude_error = 0.0;
  return n;
}

void NoiseSpec::validate() const {
  require(finite_nonnegative(los_sigma), "noise.los_sigma_deg", "must be nonnegative");
  require(finite_nonnegative(los_angle_max) && los_angle_max < 0.5 * 3.14159265358979323846,
          "noise.los_angle_max_deg", "must be in [0, 90)");
  require(finite_nonnegative(altimeter_sigma), "noise.altimeter_sigma", "must be nonnegative");
  require(finite_nonnegative(altimeter_distance_coeff), "noise.altimeter_distance_coeff", "must be nonnegative");
  require(finite_nonnegative(ins_distance_bias), "noise.ins_distance_bias", "must be nonnegative");
  require(finite_nonnegative(ins_random_walk), "noise.ins_random_walk", "must be nonnegative");
  require(finite_nonnegative(ins_heading_error), "noise.ins_heading_error_deg", "must be nonnegative");
  require(finite_nonnegative(ins_attitude_error), "noise.ins_attitude_error_deg", "must be nonnegative");
  require(std::isfinite(ins_attitude_min_fraction) && ins_attitude_min_fraction >= 0.0 &&
              ins_attitude_min_fraction <= 1.0,
          "noise.ins_attitude_min_fraction", "must be in [0, 1]");
  require(finite_nonnegative(ins_tilt_velocity_gain), "noise.ins_tilt_velocity_gain", "must be nonnegative");
}

bool NoiseSpec::within_paper_envelope() const {
  const double tiny = 1e-12;
  return los_angle_max <= 0.2 * kDegree + tiny && altimeter_distance_coeff <= 1e-4 + tiny &&
         ins_heading_error <= 0.4 * kDegree + tiny && ins_attitude_error <= 0.06 * kDegree + tiny;
}

void LandmarkFieldSpec::validate() const {
  require(std::isfinite(density) && density > 0.0, "landmarks.density", "must be positive");
  require(finite_nonnegative(relief_sigma), "landmarks.relief_sigma", "must be nonnegative");
  require(finite_nonnegative(clearance), "landmarks.clearance", "must be nonnegative");
  require(finite_nonnegative(margin), "landmarks.margin", "must be nonnegative");
}

double GroundTruth::min_altitude() const {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) lo = std::min(lo, s.position.z());
  return lo;
}

std::mt19937_64 channel_rng(std::uint64_t seed, RngChannel channel) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(channel)};
  return std::mt19937_64(seq);
}

GroundTruth gen_trajectory(const FlightPlan& plan) {
  const Eigen::Vector2d u = heading_unit(plan.heading);
  const std::size_t count = plan.duration > 0.0 ? plan.frame_count() : 1;
  GroundTruth truth;
  truth.samples.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    const double t = static_cast<double>(j) * plan.frame_interval;
    const double s = plan.speed * t;
    TruthSample sample;
    sample.t = t;
    sample.distance = s;
    sample.position << s * u.x(), s * u.y(), plan.altitude + plan.climb_rate * t;
    truth.samples.push_back(sample);
  }
  return truth;
}

LandmarkField::LandmarkField(std::vector<Landmark> landmarks, Eigen::Vector2d origin, Eigen::Vector2d along,
                             double cell, std::vector<std::size_t> column_starts)
    : landmarks_(std::move(landmarks)),
      origin_(std::move(origin)),
      along_(along.normalized()),
      cell_(cell),
      column_starts_(std::move(column_starts)) {
  if (!(cell_ > 0.0)) throw std::invalid_argument("LandmarkField: cell size must be positive");
  if (column_starts_.empty() || column_starts_.back() != landmarks_.size()) {
    throw std::invalid_argument("LandmarkField: column index does not cover the landmarks");
  }
  z_min_ = std::numeric_limits<double>::infinity();
  for (const auto& l : landmarks_) z_min_ = std::min(z_min_, l.position.z());
}

std::vector<const Landmark*> LandmarkField::visible_from(const Eigen::Vector3d& camera,
                                                         const Imager& imager) const {
  std::vector<const Landmark*> out;
  const std::size_t columns = column_starts_.empty() ? 0 : column_starts_.size() - 1;
  if (columns == 0 || landmarks_.empty()) return out;

  // Ground footprint radius for the deepest landmark, covering any image rotation.
  const double depth = camera.z() - z_min_;
  if (!(depth > 0.0)) return out;
  const double half_extent = 0.5 * std::hypot(imager.width, imager.height);
  const double radius = depth * half_extent / imager.intrinsics.focal_length;

  const double a = along_.dot(camera.head<2>() - origin_);
  const double lo = std::floor((a - radius) / cell_);
  const double hi = std::floor((a + radius) / cell_);
  if (hi < 0.0 || lo >= static_cast<double>(columns)) return out;
  const std::size_t c0 = static_cast<std::size_t>(std::max(lo, 0.0));
  const std::size_t c1 = static_cast<std::size_t>(std::min(hi, static_cast<double>(columns - 1)));

  for (std::size_t i = column_starts_[c0]; i < column_starts_[c1 + 1]; ++i) {
    const Landmark& l = landmarks_[i];
    const double h = camera.z() - l.position.z();
    if (!(h > 0.0)) continue;
    const Eigen::Vector2d pixel = project_landmark(camera, l.position, imager.intrinsics);
    if (imager.contains(pixel)) out.push_back(&l);
  }
  return out;
}

LandmarkField gen_landmarks(const GroundTruth& truth, const FlightPlan& plan, const LandmarkFieldSpec& spec,
                            const Imager& imager, std::size_t required_landmarks, std::uint64_t seed) {
  spec.validate();
  if (truth.samples.empty()) throw std::invalid_argument("gen_landmarks: empty trajectory");

  const Eigen::Vector2d along = heading_unit(plan.heading);
  const Eigen::Vector2d cross(-along.y(), along.x());
  const Eigen::Vector2d start = truth.samples.front().position.head<2>();
  const double length = truth.samples.back().distance;

  const double z_max = truth.min_altitude() - spec.clearance;
  double max_altitude = 0.0;
  for (const auto& s : truth.samples) max_altitude = std::max(max_altitude, s.position.z());
  const double deepest = std::min(z_max, -4.0 * spec.relief_sigma);
  const double half_width = (max_altitude - deepest) * 0.5 * std::hypot(imager.width, imager.height) /
                            imager.intrinsics.focal_length;

  const double cell = std::sqrt(1e6 / spec.density);
  const double a0 = -spec.margin;
  const double c0 = -(half_width + spec.margin);
  const auto columns = static_cast<std::size_t>(std::ceil((length + 2.0 * spec.margin) / cell));
  const auto rows = static_cast<std::size_t>(std::ceil(2.0 * (half_width + spec.margin) / cell));

  std::mt19937_64 rng = channel_rng(seed, RngChannel::Landmarks);
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  std::normal_distribution<double> relief(0.0, 1.0);

  std::vector<Landmark> landmarks;
  landmarks.reserve(columns * rows);
  std::vector<std::size_t> column_starts{0};
  std::int64_t next_id = 0;
  for (std::size_t i = 0; i < columns; ++i) {
    for (std::size_t j = 0; j < rows; ++j) {
      const double a = a0 + (static_cast<double>(i) + jitter(rng)) * cell;
      const double c = c0 + (static_cast<double>(j) + jitter(rng)) * cell;
      const double z = std::min(spec.relief_sigma * relief(rng), z_max);
      Landmark l;
      l.id = next_id++;
      l.position << (start + a * along + c * cross), z;
      landmarks.push_back(l);
    }
    column_starts.push_back(landmarks.size());
  }

  LandmarkField field(std::move(landmarks), start + a0 * along, along, cell, std::move(column_starts));
  const std::size_t coverage = min_triple_coverage(truth, field, imager);
  if (coverage < required_landmarks) {
    throw InsufficientCoverageError("InsufficientCoverage: some frame triple shares only " +
                                    std::to_string(coverage) + " landmarks, " +
                                    std::to_string(required_landmarks) + " required");
  }
  return field;
}

std::size_t min_triple_coverage(const GroundTruth& truth, const LandmarkField& field, const Imager& imager) {
  auto visible_ids = [&](std::size_t j) {
    std::vector<std::int64_t> ids;
    for (const Landmark* l : field.visible_from(truth.samples[j].position, imager)) ids.push_back(l->id);
    std::sort(ids.begin(), ids.end());
    return ids;
  };
  const std::size_t count = truth.samples.size();
  if (count < 3) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (std::size_t j = 0; j < count; ++j) best = std::min(best, visible_ids(j).size());
    return count == 0 ? 0 : best;
  }
  std::size_t worst = std::numeric_limits<std::size_t>::max();
  std::vector<std::int64_t> older = visible_ids(0);
  std::vector<std::int64_t> current = visible_ids(1);
  for (std::size_t j = 2; j < count; ++j) {
    std::vector<std::int64_t> next = visible_ids(j);
    std::vector<std::int64_t> pair;
    std::set_intersection(older.begin(), older.end(), current.begin(), current.end(), std::back_inserter(pair));
    std::vector<std::int64_t> triple;
    std::set_intersection(pair.begin(), pair.end(), next.begin(), next.end(), std::back_inserter(triple));
    worst = std::min(worst, triple.size());
    older = std::move(current);
    current = std::move(next);
  }
  return worst;
}

double draw_los_angle(const NoiseSpec& noise, std::mt19937_64& rng) {
  if (!(noise.los_sigma > 0.0) || !(noise.los_angle_max > 0.0)) return 0.0;
  std::normal_distribution<double> normal(0.0, noise.los_sigma);
  for (;;) {
    const double theta = std::abs(normal(rng));
    if (theta <= noise.los_angle_max) return theta;
  }
}

std::vector<PixelObservation> observe(std::int64_t frame_id, const Eigen::Vector3d& camera,
                                      const LandmarkField& field, const Imager& imager,
                                      const NoiseSpec& noise, std::mt19937_64& rng) {
  const double fc = imager.intrinsics.focal_length;
  const bool noisy = noise.los_sigma > 0.0 && noise.los_angle_max > 0.0;
  std::uniform_real_distribution<double> direction(0.0, 2.0 * 3.14159265358979323846);

  std::vector<PixelObservation> out;
  for (const Landmark* l : field.visible_from(camera, imager)) {
    Eigen::Vector2d pixel = project_landmark(camera, l->position, imager.intrinsics);
    if (noisy) {
      const double theta = draw_los_angle(noise, rng);
      const double phi = direction(rng);
      pixel += fc * std::tan(theta) * Eigen::Vector2d(std::cos(phi), std::sin(phi));
    }
    out.push_back(PixelObservation{l->id, frame_id, pixel.x(), pixel.y()});
  }
  return out;
}

AltimeterModel::AltimeterModel(const NoiseSpec& noise, std::mt19937_64& rng)
    : sigma_(noise.altimeter_sigma), distance_coeff_(0.0) {
  if (noise.altimeter_distance_coeff > 0.0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    distance_coeff_ = u(rng) * noise.altimeter_distance_coeff;
  }
}

double AltimeterModel::read(const TruthSample& sample, std::mt19937_64& rng) const {
  double reading = sample.position.z() + distance_coeff_ * sample.distance;
  if (sigma_ > 0.0) {
    std::normal_distribution<double> normal(0.0, sigma_);
    reading += normal(rng);
  }
  return reading;
}

InsDistanceModel::InsDistanceModel(const GroundTruth& truth, const NoiseSpec& noise, std::mt19937_64& rng)
    : scale_bias_(0.0), walk_(truth.samples.size(), 0.0) {
  if (noise.ins_distance_bias > 0.0) {
    std::uniform_real_distribution<double> u(-noise.ins_distance_bias, noise.ins_distance_bias);
    scale_bias_ = u(rng);
  }
  if (noise.ins_random_walk > 0.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t j = 1; j < walk_.size(); ++j) {
      const double dt = truth.samples[j].t - truth.samples[j - 1].t;
      walk_[j] = walk_[j - 1] + noise.ins_random_walk * std::sqrt(dt) * normal(rng);
    }
  }
}

double InsDistanceModel::distance(const GroundTruth& truth, std::size_t i, std::size_t j) const {
  const double d = (truth.samples.at(j).position - truth.samples.at(i).position).norm();
  return d * (1.0 + scale_bias_) + (walk_.at(j) - walk_.at(i));
}

InsDeadReckoning ins_dead_reckon(const GroundTruth& truth, const NoiseSpec& noise, std::mt19937_64& rng) {
  InsDeadReckoning out;
  if (noise.ins_heading_error > 0.0) {
    std::uniform_real_distribution<double> u(-noise.ins_heading_error, noise.ins_heading_error);
    out.heading_bias = u(rng);
  }
  if (noise.ins_attitude_error > 0.0) {
    std::uniform_real_distribution<double> magnitude(noise.ins_attitude_min_fraction * noise.ins_attitude_error,
                                                     noise.ins_attitude_error);
    std::bernoulli_distribution negative(0.5);
    const double m = magnitude(rng);
    out.attitude_error = negative(rng) ? -m : m;
  }

  const auto& samples = truth.samples;
  if (samples.size() >= 2 && out.attitude_error != 0.0) {
    const double dt = samples[1].t - samples[0].t;
    const double speed = (samples[1].position.head<2>() - samples[0].position.head<2>()).norm() / dt;
    if (speed > 0.0) out.speed_scale = out.attitude_error * noise.ins_tilt_velocity_gain / speed;
  }

  const Eigen::Rotation2Dd rotation(out.heading_bias);
  const double scale = 1.0 + out.speed_scale;
  out.track.reserve(samples.size());
  if (samples.empty()) return out;
  out.track.push_back(samples.front().position.head<2>());
  for (std::size_t j = 1; j < samples.size(); ++j) {
    const Eigen::Vector2d step = samples[j].position.head<2>() - samples[j - 1].position.head<2>();
    out.track.push_back(out.track.back() + scale * (rotation * step));
  }
  return out;
}

SimulatedFlight simulate_flight(const SimulationSpec& spec, std::uint64_t seed) {
  spec.plan.validate();
  spec.noise.validate();
  spec.field.validate();
  if (!(spec.imager.intrinsics.focal_length > 0.0) || !(spec.imager.width > 0.0) || !(spec.imager.height > 0.0)) {
    throw ConfigError("camera: focal length and imager size must be positive");
  }

  SimulatedFlight flight;
  flight.truth = gen_trajectory(spec.plan);
  flight.field = gen_landmarks(flight.truth, spec.plan, spec.field, spec.imager, spec.required_landmarks, seed);

  std::mt19937_64 los_rng = channel_rng(seed, RngChannel::LineOfSight);
  std::mt19937_64 alt_rng = channel_rng(seed, RngChannel::Altimeter);
  std::mt19937_64 dist_rng = channel_rng(seed, RngChannel::InsDistance);
  std::mt19937_64 dr_rng = channel_rng(seed, RngChannel::InsDeadReckoning);

  const AltimeterModel altimeter(spec.noise, alt_rng);
  const InsDistanceModel ins_distance(flight.truth, spec.noise, dist_rng);
  flight.altimeter_distance_coeff = altimeter.distance_coefficient();
  flight.ins_scale_bias = ins_distance.scale_bias();

  const auto& samples = flight.truth.samples;
  flight.frames.reserve(samples.size());
  for (std::size_t j = 0; j < samples.size(); ++j) {
    SensorFrame frame;
    frame.frame_id = static_cast<std::int64_t>(j);
    frame.t = samples[j].t;
    frame.truth = samples[j].position;
    frame.altimeter_reading = altimeter.read(samples[j], alt_rng);
    if (j >= 1) frame.d_prev = ins_distance.distance(flight.truth, j - 1, j);
    if (j >= 2) frame.d_prevprev = ins_distance.distance(flight.truth, j - 2, j);
    frame.observations = observe(frame.frame_id, samples[j].position, flight.field, spec.imager, spec.noise, los_rng);
    flight.frames.push_back(std::move(frame));
  }
  flight.ins = ins_dead_reckon(flight.truth, spec.noise, dr_rng);
  return flight;
}

}  // namespace aerovio
