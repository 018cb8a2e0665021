#pragma once

// Synthetic straight-line flight over a random landmark field, with the
// camera, altimeter and INS channels corrupted according to a NoiseSpec.
// Positions live in a flat local level frame: x east, y north, z up.

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "aerovio/vio_geometry.hpp"

namespace aerovio {

inline constexpr double kDegree = 3.14159265358979323846 / 180.0;

struct FlightPlan {
  double duration = 3600.0;      ///< s
  double speed = 235.0;          ///< m/s, horizontal
  double altitude = 1200.0;      ///< m, at t = 0
  double heading = 0.0;          ///< rad, measured from +x towards +y
  double frame_interval = 1.0;   ///< s
  double climb_rate = 0.0;       ///< m/s; zero is level flight

  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// Preset envelope: 210-260 m/s, altitude within 1000-1500 m throughout.
  bool within_paper_envelope() const;
  std::size_t frame_count() const;
};

struct NoiseSpec {
  double los_sigma = 0.1 * kDegree;         ///< rad, sigma of the folded normal LOS error
  double los_angle_max = 0.2 * kDegree;     ///< rad, hard cap on the LOS error
  double altimeter_sigma = 1.0;             ///< m
  double altimeter_distance_coeff = 1e-4;   ///< bound on the distance-proportional altimeter error
  double ins_distance_bias = 1e-4;          ///< bound on the INS distance scale error
  double ins_random_walk = 0.02;            ///< m / sqrt(s)
  double ins_heading_error = 0.4 * kDegree; ///< rad, bound on the dead-reckoning heading bias
  double ins_attitude_error = 0.06 * kDegree;  ///< rad, bound on the tilt error
  /// Lower end of the attitude error magnitude as a fraction of ins_attitude_error.
  double ins_attitude_min_fraction = 1.0 / 3.0;
  /// Velocity error per radian of tilt, sqrt(g R_earth) in m/s.
  double ins_tilt_velocity_gain = 7906.3;

  static NoiseSpec none();
  void validate() const;
  bool within_paper_envelope() const;
};

struct LandmarkFieldSpec {
  double density = 10.0;        ///< landmarks per km^2
  double relief_sigma = 30.0;   ///< m
  double clearance = 100.0;     ///< minimum vertical gap below the lowest flight altitude
  double margin = 3000.0;       ///< m, field extent beyond the footprint of the flight

  void validate() const;
};

struct Imager {
  CameraIntrinsics intrinsics;
  double width = 2000.0;   ///< px
  double height = 2000.0;  ///< px

  bool contains(const Eigen::Vector2d& pixel) const {
    return std::abs(pixel.x()) <= 0.5 * width && std::abs(pixel.y()) <= 0.5 * height;
  }
};

struct TruthSample {
  double t = 0.0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double distance = 0.0;  ///< horizontal distance flown since t = 0
};

struct GroundTruth {
  std::vector<TruthSample> samples;
  double min_altitude() const;
};

struct Landmark {
  std::int64_t id = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
};

/// Landmarks on a jittered grid aligned with the flight direction. Columns of
/// the grid are stored contiguously so visibility queries only touch the
/// along-track band under the camera.
class LandmarkField {
 public:
  LandmarkField() = default;
  LandmarkField(std::vector<Landmark> landmarks, Eigen::Vector2d origin, Eigen::Vector2d along,
                double cell, std::vector<std::size_t> column_starts);

  const std::vector<Landmark>& landmarks() const { return landmarks_; }
  std::size_t size() const { return landmarks_.size(); }

  /// Landmarks inside the camera footprint (true pixels inside the imager).
  std::vector<const Landmark*> visible_from(const Eigen::Vector3d& camera, const Imager& imager) const;

 private:
  std::vector<Landmark> landmarks_;
  Eigen::Vector2d origin_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d along_ = Eigen::Vector2d::UnitX();
  double cell_ = 1.0;
  std::vector<std::size_t> column_starts_;  // size = columns + 1
  double z_min_ = 0.0;
};

/// Independent, reproducible random stream per sensor channel.
enum class RngChannel : std::uint32_t {
  Landmarks = 1,
  LineOfSight = 2,
  Altimeter = 3,
  InsDistance = 4,
  InsDeadReckoning = 5,
};

std::mt19937_64 channel_rng(std::uint64_t seed, RngChannel channel);

GroundTruth gen_trajectory(const FlightPlan& plan);

/// Throws InsufficientCoverageError if some frame triple shares fewer than
/// `required_landmarks` landmarks visible in all three frames.
LandmarkField gen_landmarks(const GroundTruth& truth, const FlightPlan& plan, const LandmarkFieldSpec& spec,
                            const Imager& imager, std::size_t required_landmarks, std::uint64_t seed);

/// Smallest number of landmarks visible in all of frames j-2, j-1, j over the run.
std::size_t min_triple_coverage(const GroundTruth& truth, const LandmarkField& field, const Imager& imager);

/// LOS error angle: folded normal with sigma `noise.los_sigma`, redrawn until
/// it does not exceed `noise.los_angle_max`.
double draw_los_angle(const NoiseSpec& noise, std::mt19937_64& rng);

/// Pixel observations of every visible landmark. Visibility is decided on the
/// true pixel; the reported pixel is displaced by f tan(theta) in a uniformly
/// random direction.
std::vector<PixelObservation> observe(std::int64_t frame_id, const Eigen::Vector3d& camera,
                                      const LandmarkField& field, const Imager& imager,
                                      const NoiseSpec& noise, std::mt19937_64& rng);

class AltimeterModel {
 public:
  /// Draws the per-run distance error coefficient u * coeff with u ~ U(-1, 1).
  AltimeterModel(const NoiseSpec& noise, std::mt19937_64& rng);

  double read(const TruthSample& sample, std::mt19937_64& rng) const;
  double distance_coefficient() const { return distance_coeff_; }

 private:
  double sigma_;
  double distance_coeff_;
};

class InsDistanceModel {
 public:
  /// Draws the per-run scale bias and a random-walk path sampled at every frame.
  InsDistanceModel(const GroundTruth& truth, const NoiseSpec& noise, std::mt19937_64& rng);

  /// Measured straight-line distance between frames i and j.
  double distance(const GroundTruth& truth, std::size_t i, std::size_t j) const;
  double scale_bias() const { return scale_bias_; }

 private:
  double scale_bias_;
  std::vector<double> walk_;
};

struct InsDeadReckoning {
  double heading_bias = 0.0;    ///< rad
  double attitude_error = 0.0;  ///< rad, signed
  double speed_scale = 0.0;     ///< relative speed error implied by the tilt
  std::vector<Eigen::Vector2d> track;
};

/// Pure-INS baseline: integrates the true horizontal displacement rotated by
/// the heading bias and scaled by (1 + speed_scale), starting at the truth.
InsDeadReckoning ins_dead_reckon(const GroundTruth& truth, const NoiseSpec& noise, std::mt19937_64& rng);

struct SensorFrame {
  std::int64_t frame_id = 0;
  double t = 0.0;
  double altimeter_reading = 0.0;
  double d_prev = std::numeric_limits<double>::quiet_NaN();      ///< INS distance from frame id-1
  double d_prevprev = std::numeric_limits<double>::quiet_NaN();  ///< INS distance from frame id-2
  std::vector<PixelObservation> observations;
  Eigen::Vector3d truth = Eigen::Vector3d::Zero();  ///< scoring only
};

struct SimulationSpec {
  FlightPlan plan;
  NoiseSpec noise;
  LandmarkFieldSpec field;
  Imager imager;
  std::size_t required_landmarks = 5;
};

struct SimulatedFlight {
  GroundTruth truth;
  LandmarkField field;
  std::vector<SensorFrame> frames;
  InsDeadReckoning ins;
  double altimeter_distance_coeff = 0.0;
  double ins_scale_bias = 0.0;
};

SimulatedFlight simulate_flight(const SimulationSpec& spec, std::uint64_t seed);

}  // namespace aerovio
