#include <cmath>
#include <random>

#include <doctest.h>

#include "aerovio/errors.hpp"
#include "aerovio/sensor_sim.hpp"

using namespace aerovio;

namespace {

double sample_variance(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return var / static_cast<double>(v.size() - 1);
}

LandmarkField single_landmark(const Eigen::Vector3d& position) {
  return LandmarkField({Landmark{42, position}}, position.head<2>(), Eigen::Vector2d::UnitX(), 1000.0, {0, 1});
}

GroundTruth short_truth(std::size_t frames) {
  FlightPlan plan;
  plan.duration = static_cast<double>(frames - 1);
  return gen_trajectory(plan);
}

}  // namespace

TEST_CASE("one-hour trajectory at 235 m/s") {
  FlightPlan plan;
  const GroundTruth truth = gen_trajectory(plan);
  REQUIRE(truth.samples.size() == 3601);
  CHECK(truth.samples.back().distance == doctest::Approx(846000.0));
  CHECK(truth.samples.back().position.x() == doctest::Approx(846000.0));
  for (std::size_t j = 1; j < truth.samples.size(); ++j) {
    const double step = (truth.samples[j].position - truth.samples[j - 1].position).norm();
    CHECK(std::abs(step - 235.0) <= 1e-9);
  }
  CHECK(truth.min_altitude() == 1200.0);
}

TEST_CASE("zero duration is a single sample at the origin") {
  FlightPlan plan;
  plan.duration = 0.0;
  const GroundTruth truth = gen_trajectory(plan);
  REQUIRE(truth.samples.size() == 1);
  CHECK(truth.samples[0].position.head<2>().norm() == 0.0);
}

TEST_CASE("heading and climb") {
  FlightPlan plan;
  plan.duration = 10.0;
  plan.heading = 90.0 * kDegree;
  plan.climb_rate = 2.0;
  const GroundTruth truth = gen_trajectory(plan);
  CHECK(truth.samples[10].position.x() == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(truth.samples[10].position.y() == doctest::Approx(2350.0));
  CHECK(truth.samples[10].position.z() == doctest::Approx(1220.0));
}

TEST_CASE("flight plan validation names the field") {
  FlightPlan plan;
  plan.speed = -1.0;
  CHECK_THROWS_WITH_AS(plan.validate(), "flight.speed: must be positive", ConfigError);
  plan = {};
  CHECK(plan.within_paper_envelope());
  plan.altitude = 2000.0;
  CHECK_FALSE(plan.within_paper_envelope());
}

TEST_CASE("landmark field coverage and bounds") {
  FlightPlan plan;
  const GroundTruth truth = gen_trajectory(plan);
  const Imager imager;
  const LandmarkFieldSpec spec;
  const LandmarkField field = gen_landmarks(truth, plan, spec, imager, 5, 1);
  CHECK(min_triple_coverage(truth, field, imager) >= 5);
  for (const auto& l : field.landmarks()) CHECK(l.position.z() <= 1200.0 - 100.0);

  SUBCASE("flat ground") {
    LandmarkFieldSpec flat;
    flat.relief_sigma = 0.0;
    const LandmarkField f = gen_landmarks(short_truth(20), plan, flat, imager, 5, 2);
    for (const auto& l : f.landmarks()) CHECK(l.position.z() == 0.0);
  }
  SUBCASE("too sparse") {
    LandmarkFieldSpec sparse;
    sparse.density = 0.01;
    CHECK_THROWS_AS(gen_landmarks(short_truth(20), plan, sparse, imager, 5, 3), InsufficientCoverageError);
  }
}

TEST_CASE("visibility agrees with a brute-force projection") {
  FlightPlan plan;
  const GroundTruth truth = short_truth(30);
  const Imager imager;
  const LandmarkField field = gen_landmarks(truth, plan, LandmarkFieldSpec{}, imager, 5, 4);
  for (std::size_t j = 0; j < truth.samples.size(); j += 7) {
    const Eigen::Vector3d cam = truth.samples[j].position;
    std::size_t brute = 0;
    for (const auto& l : field.landmarks()) {
      if (imager.contains(project_landmark(cam, l.position, imager.intrinsics))) ++brute;
    }
    CHECK(field.visible_from(cam, imager).size() == brute);
  }
}

TEST_CASE("line-of-sight error is capped and isotropic") {
  const NoiseSpec noise;
  std::mt19937_64 rng(99);
  const Imager imager;
  const Eigen::Vector3d landmark(100.0, -50.0, 20.0);
  const Eigen::Vector3d camera(0.0, 0.0, 1200.0);
  const LandmarkField field = single_landmark(landmark);
  const Eigen::Vector2d exact = project_landmark(camera, landmark, imager.intrinsics);
  const double cap = imager.intrinsics.focal_length * std::tan(0.2 * kDegree);

  const int draws = 100000;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  double sum_sq = 0.0;
  double largest = 0.0;
  for (int i = 0; i < draws; ++i) {
    const auto obs = observe(0, camera, field, imager, noise, rng);
    REQUIRE(obs.size() == 1);
    const Eigen::Vector2d d = Eigen::Vector2d(obs[0].x_p, obs[0].y_p) - exact;
    sum += d;
    sum_sq += d.squaredNorm();
    largest = std::max(largest, d.norm());
  }
  CHECK(largest <= cap + 1e-12);
  // Per-axis standard error of the mean is sqrt(E|d|^2 / 2 / N).
  const double se = std::sqrt(sum_sq / 2.0 / draws / draws);
  CHECK(std::abs(sum.x() / draws) <= 3.0 * se);
  CHECK(std::abs(sum.y() / draws) <= 3.0 * se);
}

TEST_CASE("LOS angles are folded normal draws below the cap") {
  const NoiseSpec noise;
  std::mt19937_64 rng(5);
  int above_sigma = 0;
  for (int i = 0; i < 100000; ++i) {
    const double theta = draw_los_angle(noise, rng);
    CHECK(theta >= 0.0);
    CHECK(theta <= noise.los_angle_max);
    if (theta > noise.los_sigma) ++above_sigma;
  }
  // P(|N| > 1 | |N| <= 2) = (0.9545 - 0.6827) / 0.9545 = 0.2848
  CHECK(above_sigma / 100000.0 == doctest::Approx(0.2848).epsilon(0.03));
  CHECK(draw_los_angle(NoiseSpec::none(), rng) == 0.0);
}

TEST_CASE("noise-free channels reproduce the truth") {
  const NoiseSpec none = NoiseSpec::none();
  std::mt19937_64 rng(1);
  const Imager imager;
  const Eigen::Vector3d landmark(300.0, 200.0, -10.0);
  const Eigen::Vector3d camera(10.0, 5.0, 1200.0);
  const auto obs = observe(3, camera, single_landmark(landmark), imager, none, rng);
  REQUIRE(obs.size() == 1);
  const Eigen::Vector2d exact = project_landmark(camera, landmark, imager.intrinsics);
  CHECK(obs[0].x_p == exact.x());
  CHECK(obs[0].y_p == exact.y());
  CHECK(obs[0].frame_id == 3);
  CHECK(obs[0].landmark_id == 42);

  const GroundTruth truth = short_truth(50);
  const AltimeterModel alt(none, rng);
  CHECK(alt.read(truth.samples[20], rng) == truth.samples[20].position.z());
  const InsDistanceModel dist(truth, none, rng);
  CHECK(dist.distance(truth, 3, 5) == doctest::Approx(470.0));
  const InsDeadReckoning dr = ins_dead_reckon(truth, none, rng);
  for (std::size_t j = 0; j < truth.samples.size(); ++j) {
    CHECK((dr.track[j] - truth.samples[j].position.head<2>()).norm() <= 1e-9);
  }
}

TEST_CASE("altimeter error budget") {
  NoiseSpec noise;
  std::mt19937_64 rng(7);
  TruthSample far;
  far.position = {846000.0, 0.0, 1200.0};
  far.distance = 846000.0;

  SUBCASE("distance term stays within coefficient times distance") {
    noise.altimeter_sigma = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const AltimeterModel alt(noise, rng);
      CHECK(std::abs(alt.read(far, rng) - 1200.0) <= 84.6 + 1e-9);
    }
  }
  SUBCASE("differences of two readings have sigma sqrt(2)") {
    noise.altimeter_distance_coeff = 0.0;
    const AltimeterModel alt(noise, rng);
    std::vector<double> dh;
    for (int i = 0; i < 100000; ++i) dh.push_back(alt.read(far, rng) - alt.read(far, rng));
    CHECK(std::sqrt(sample_variance(dh)) == doctest::Approx(std::sqrt(2.0)).epsilon(0.01));
  }
}

TEST_CASE("INS distance error") {
  NoiseSpec noise;
  const GroundTruth truth = short_truth(3);
  std::mt19937_64 rng(8);

  SUBCASE("random walk variance doubles with a two-frame baseline") {
    noise.ins_distance_bias = 0.0;
    std::vector<double> one, two;
    for (int i = 0; i < 50000; ++i) {
      const InsDistanceModel m(truth, noise, rng);
      one.push_back(m.distance(truth, 1, 2) - 235.0);
      two.push_back(m.distance(truth, 0, 2) - 470.0);
    }
    CHECK(sample_variance(two) / sample_variance(one) == doctest::Approx(2.0).epsilon(0.04));
    CHECK(sample_variance(one) == doctest::Approx(0.02 * 0.02).epsilon(0.04));
  }
  SUBCASE("one-frame distance stays in [234.9, 235.1]") {
    for (int i = 0; i < 20000; ++i) {
      const InsDistanceModel m(truth, noise, rng);
      const double d = m.distance(truth, 1, 2);
      CHECK(d >= 234.9);
      CHECK(d <= 235.1);
      CHECK(std::abs(m.scale_bias()) <= 1e-4);
    }
  }
}

TEST_CASE("dead reckoning with a pure heading bias") {
  NoiseSpec noise = NoiseSpec::none();
  noise.ins_heading_error = 0.4 * kDegree;
  const GroundTruth truth = gen_trajectory(FlightPlan{});
  std::mt19937_64 rng(9);
  for (int i = 0; i < 20; ++i) {
    const InsDeadReckoning dr = ins_dead_reckon(truth, noise, rng);
    CHECK(std::abs(dr.heading_bias) <= 0.4 * kDegree);
    const Eigen::Vector2d end = dr.track.back();
    CHECK(end.y() == doctest::Approx(846000.0 * std::sin(dr.heading_bias)).epsilon(1e-9));
    CHECK(std::abs(end.y()) <= 5906.0);
  }
  // At the bound itself the cross-track error is 846000 sin(0.4 deg).
  CHECK(846000.0 * std::sin(0.4 * kDegree) == doctest::Approx(5906.0).epsilon(1e-3));
}

TEST_CASE("calibrated INS baseline exceeds 9 km after one hour") {
  const NoiseSpec noise;
  const GroundTruth truth = gen_trajectory(FlightPlan{});
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    std::mt19937_64 rng = channel_rng(seed, RngChannel::InsDeadReckoning);
    const InsDeadReckoning dr = ins_dead_reckon(truth, noise, rng);
    CHECK((dr.track.back() - truth.samples.back().position.head<2>()).norm() > 9000.0);
    CHECK(std::abs(dr.attitude_error) <= 0.06 * kDegree);
  }
}

TEST_CASE("simulation is deterministic per seed") {
  SimulationSpec spec;
  spec.plan.duration = 30.0;
  const SimulatedFlight a = simulate_flight(spec, 11);
  const SimulatedFlight b = simulate_flight(spec, 11);
  const SimulatedFlight c = simulate_flight(spec, 12);
  REQUIRE(a.frames.size() == 31);
  bool differs = false;
  for (std::size_t j = 0; j < a.frames.size(); ++j) {
    CHECK(a.frames[j].altimeter_reading == b.frames[j].altimeter_reading);
    REQUIRE(a.frames[j].observations.size() == b.frames[j].observations.size());
    for (std::size_t i = 0; i < a.frames[j].observations.size(); ++i) {
      CHECK(a.frames[j].observations[i].x_p == b.frames[j].observations[i].x_p);
    }
    CHECK((a.ins.track[j] - b.ins.track[j]).norm() == 0.0);
    differs = differs || a.frames[j].altimeter_reading != c.frames[j].altimeter_reading;
  }
  CHECK(differs);
  CHECK(std::isnan(a.frames[0].d_prev));
  CHECK(std::isnan(a.frames[1].d_prevprev));
  CHECK(a.frames[2].d_prevprev > 0.0);
  for (const auto& f : a.frames) CHECK(f.observations.size() >= 5);
}
