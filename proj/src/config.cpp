#include "aerovio/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "aerovio/errors.hpp"
#include "aerovio/run_io.hpp"

namespace aerovio {

namespace {

using Inputs = std::vector<std::string>;
using Setter = std::function<void(RunConfig&, const Inputs&, const std::string&)>;

const std::string& single(const Inputs& in, const std::string& key) {
  if (in.size() != 1) throw ConfigError(key + ": expected a single value");
  return in.front();
}

double real(const Inputs& in, const std::string& key) {
  try {
    return parse_number(single(in, key));
  } catch (const FormatError&) {
    throw ConfigError(key + ": not a number: '" + in.front() + "'");
  }
}

long integer(const Inputs& in, const std::string& key) {
  const double v = real(in, key);
  if (v != std::floor(v) || std::abs(v) > 1e15) throw ConfigError(key + ": expected an integer");
  return static_cast<long>(v);
}

bool boolean(const Inputs& in, const std::string& key) {
  std::string v = single(in, key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true or false");
}

template <typename F>
Setter number(F assign, double scale = 1.0) {
  return [assign, scale](RunConfig& c, const Inputs& in, const std::string& key) { assign(c, real(in, key) * scale); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["flight.duration"] = number([](RunConfig& c, double v) { c.sim.plan.duration = v; });
    t["flight.speed"] = number([](RunConfig& c, double v) { c.sim.plan.speed = v; });
    t["flight.altitude"] = number([](RunConfig& c, double v) { c.sim.plan.altitude = v; });
    t["flight.heading_deg"] = number([](RunConfig& c, double v) { c.sim.plan.heading = v; }, kDegree);
    t["flight.frame_interval"] = number([](RunConfig& c, double v) { c.sim.plan.frame_interval = v; });
    t["flight.climb_rate"] = number([](RunConfig& c, double v) { c.sim.plan.climb_rate = v; });

    t["noise.enabled"] = [](RunConfig& c, const Inputs& in, const std::string& key) {
      if (!boolean(in, key)) c.sim.noise = NoiseSpec::none();
    };
    t["noise.los_sigma_deg"] = number([](RunConfig& c, double v) { c.sim.noise.los_sigma = v; }, kDegree);
    t["noise.los_angle_max_deg"] = number([](RunConfig& c, double v) { c.sim.noise.los_angle_max = v; }, kDegree);
    t["noise.altimeter_sigma"] = number([](RunConfig& c, double v) { c.sim.noise.altimeter_sigma = v; });
    t["noise.altimeter_distance_coeff"] =
        number([](RunConfig& c, double v) { c.sim.noise.altimeter_distance_coeff = v; });
    t["noise.ins_distance_bias"] = number([](RunConfig& c, double v) { c.sim.noise.ins_distance_bias = v; });
    t["noise.ins_random_walk"] = number([](RunConfig& c, double v) { c.sim.noise.ins_random_walk = v; });
    t["noise.ins_heading_error_deg"] =
        number([](RunConfig& c, double v) { c.sim.noise.ins_heading_error = v; }, kDegree);
    t["noise.ins_attitude_error_deg"] =
        number([](RunConfig& c, double v) { c.sim.noise.ins_attitude_error = v; }, kDegree);
    t["noise.ins_attitude_min_fraction"] =
        number([](RunConfig& c, double v) { c.sim.noise.ins_attitude_min_fraction = v; });
    t["noise.ins_tilt_velocity_gain"] =
        number([](RunConfig& c, double v) { c.sim.noise.ins_tilt_velocity_gain = v; });

    t["landmarks.density"] = number([](RunConfig& c, double v) { c.sim.field.density = v; });
    t["landmarks.relief_sigma"] = number([](RunConfig& c, double v) { c.sim.field.relief_sigma = v; });
    t["landmarks.clearance"] = number([](RunConfig& c, double v) { c.sim.field.clearance = v; });
    t["landmarks.margin"] = number([](RunConfig& c, double v) { c.sim.field.margin = v; });

    t["camera.focal_length"] = number([](RunConfig& c, double v) {
      c.sim.imager.intrinsics.focal_length = v;
      c.pipeline.intrinsics.focal_length = v;
    });
    t["camera.width"] = number([](RunConfig& c, double v) { c.sim.imager.width = v; });
    t["camera.height"] = number([](RunConfig& c, double v) { c.sim.imager.height = v; });

    t["geometry.landmarks"] = [](RunConfig& c, const Inputs& in, const std::string& key) {
      const long v = integer(in, key);
      if (v < 2) throw ConfigError(key + ": must be at least 2");
      c.pipeline.landmark_count = static_cast<std::size_t>(v);
      c.sim.required_landmarks = static_cast<std::size_t>(v);
    };
    t["geometry.tau_rank"] = number([](RunConfig& c, double v) { c.pipeline.tau_rank = v; });
    t["geometry.match_older_frame"] = [](RunConfig& c, const Inputs& in, const std::string& key) {
      c.pipeline.match_older_frame = boolean(in, key);
    };

    t["solver.dt0"] = number([](RunConfig& c, double v) { c.pipeline.solver.dt0 = v; });
    t["solver.eta_a"] = number([](RunConfig& c, double v) { c.pipeline.solver.eta_a = v; });
    t["solver.eta1"] = number([](RunConfig& c, double v) { c.pipeline.solver.eta1 = v; });
    t["solver.eta2"] = number([](RunConfig& c, double v) { c.pipeline.solver.eta2 = v; });
    t["solver.gamma1"] = number([](RunConfig& c, double v) { c.pipeline.solver.gamma1 = v; });
    t["solver.gamma2"] = number([](RunConfig& c, double v) { c.pipeline.solver.gamma2 = v; });
    t["solver.tol_pg"] = number([](RunConfig& c, double v) { c.pipeline.solver.tol_pg = v; });
    t["solver.dt_min"] = number([](RunConfig& c, double v) { c.pipeline.solver.dt_min = v; });
    t["solver.dt_max"] = number([](RunConfig& c, double v) { c.pipeline.solver.dt_max = v; });
    t["solver.position_tolerance"] = number([](RunConfig& c, double v) { c.pipeline.position_tolerance = v; });
    t["solver.max_iter"] = [](RunConfig& c, const Inputs& in, const std::string& key) {
      c.pipeline.solver.max_iter = static_cast<int>(integer(in, key));
    };
    t["solver.max_consecutive_rejections"] = [](RunConfig& c, const Inputs& in, const std::string& key) {
      c.pipeline.solver.max_consecutive_rejections = static_cast<int>(integer(in, key));
    };

    t["run.seeds"] = [](RunConfig& c, const Inputs& in, const std::string& key) {
      std::string joined;
      for (const auto& s : in) joined += s + " ";
      try {
        c.seeds = parse_seed_list(joined);
      } catch (const ConfigError& e) {
        throw ConfigError(key + ": " + e.what());
      }
    };
    t["run.out"] = [](RunConfig& c, const Inputs& in, const std::string& key) { c.out_dir = single(in, key); };
    t["run.jobs"] = [](RunConfig& c, const Inputs& in, const std::string& key) {
      c.jobs = static_cast<int>(integer(in, key));
    };
    t["run.trace"] = [](RunConfig& c, const Inputs& in, const std::string& key) { c.trace = boolean(in, key); };
    return t;
  }();
  return table;
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (!quoted && (line[i] == '#' || (line[i] == ';' && i == line.find_first_not_of(" \t")))) {
      return line.substr(0, i);
    }
  }
  return line;
}

}  // namespace

void RunConfig::validate() const {
  sim.plan.validate();
  sim.noise.validate();
  sim.field.validate();
  if (!(sim.imager.width > 0.0) || !(sim.imager.height > 0.0)) throw ConfigError("camera.width/height: must be positive");
  pipeline.validate();
  if (seeds.empty()) throw ConfigError("run.seeds: at least one seed is required");
  if (jobs < 1) throw ConfigError("run.jobs: must be at least 1");
  if (out_dir.empty()) throw ConfigError("run.out: must not be empty");
  if (paper_preset) {
    if (!sim.plan.within_paper_envelope()) {
      throw ConfigError("flight: speed must lie in [210, 260] m/s and altitude in [1000, 1500] m with --paper-preset");
    }
    if (!sim.noise.within_paper_envelope()) {
      throw ConfigError("noise: errors exceed the Table 1 bounds allowed with --paper-preset");
    }
  }
}

void apply_paper_preset(RunConfig& config) {
  config.paper_preset = true;
  config.sim.plan = FlightPlan{};
  config.sim.plan.duration = 3600.0;
  config.sim.plan.speed = 235.0;
  config.sim.plan.altitude = 1200.0;
  config.sim.plan.climb_rate = 0.0;
  config.sim.noise = NoiseSpec{};
}

void apply_config(RunConfig& config, std::istream& in) {
  std::ostringstream cleaned;
  std::string line;
  while (std::getline(in, line)) cleaned << strip_comment(line) << '\n';
  std::istringstream source(cleaned.str());

  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(source);
  } catch (const CLI::Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  const auto& table = setters();
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    const std::string key = item.fullname();
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError(key + ": unknown configuration key");
    it->second(config, item.inputs, key);
  }
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found or unreadable: " + path);
  apply_config(config, in);
}

void apply_environment(RunConfig& config,
                       const std::function<std::optional<std::string>(const std::string&)>& lookup) {
  if (auto out = lookup("AEROVIO_OUT_DIR"); out && !out->empty()) config.out_dir = *out;
  if (auto seed = lookup("AEROVIO_SEED"); seed && !seed->empty()) {
    try {
      config.seeds = parse_seed_list(*seed);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("AEROVIO_SEED: ") + e.what());
    }
  }
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::string normalized = text;
  std::replace(normalized.begin(), normalized.end(), ',', ' ');
  std::istringstream in(normalized);
  std::vector<std::uint64_t> seeds;
  std::string token;
  auto to_seed = [](const std::string& s) -> std::uint64_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("invalid seed '" + s + "'");
    }
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw ConfigError("invalid seed '" + s + "'");
    }
  };
  while (in >> token) {
    const auto dash = token.find('-');
    if (dash == std::string::npos) {
      seeds.push_back(to_seed(token));
      continue;
    }
    const std::uint64_t lo = to_seed(token.substr(0, dash));
    const std::uint64_t hi = to_seed(token.substr(dash + 1));
    if (hi < lo || hi - lo > 100000) throw ConfigError("invalid seed range '" + token + "'");
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
  }
  if (seeds.empty()) throw ConfigError("empty seed list");
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
  return seeds;
}

void write_config(std::ostream& out, const RunConfig& c) {
  auto num = [](double v) { return format_number(v); };
  const auto& p = c.sim.plan;
  const auto& n = c.sim.noise;
  const auto& s = c.pipeline.solver;
  out << "[flight]\n"
      << "duration = " << num(p.duration) << "\nspeed = " << num(p.speed) << "\naltitude = " << num(p.altitude)
      << "\nheading_deg = " << num(p.heading / kDegree) << "\nframe_interval = " << num(p.frame_interval)
      << "\nclimb_rate = " << num(p.climb_rate) << "\n\n[noise]\n"
      << "los_sigma_deg = " << num(n.los_sigma / kDegree) << "\nlos_angle_max_deg = " << num(n.los_angle_max / kDegree)
      << "\naltimeter_sigma = " << num(n.altimeter_sigma)
      << "\naltimeter_distance_coeff = " << num(n.altimeter_distance_coeff)
      << "\nins_distance_bias = " << num(n.ins_distance_bias) << "\nins_random_walk = " << num(n.ins_random_walk)
      << "\nins_heading_error_deg = " << num(n.ins_heading_error / kDegree)
      << "\nins_attitude_error_deg = " << num(n.ins_attitude_error / kDegree)
      << "\nins_attitude_min_fraction = " << num(n.ins_attitude_min_fraction)
      << "\nins_tilt_velocity_gain = " << num(n.ins_tilt_velocity_gain) << "\n\n[landmarks]\n"
      << "density = " << num(c.sim.field.density) << "\nrelief_sigma = " << num(c.sim.field.relief_sigma)
      << "\nclearance = " << num(c.sim.field.clearance) << "\nmargin = " << num(c.sim.field.margin)
      << "\n\n[camera]\n"
      << "focal_length = " << num(c.sim.imager.intrinsics.focal_length) << "\nwidth = " << num(c.sim.imager.width)
      << "\nheight = " << num(c.sim.imager.height) << "\n\n[geometry]\n"
      << "landmarks = " << c.pipeline.landmark_count << "\ntau_rank = " << num(c.pipeline.tau_rank)
      << "\nmatch_older_frame = " << (c.pipeline.match_older_frame ? "true" : "false") << "\n\n[solver]\n"
      << "dt0 = " << num(s.dt0) << "\neta_a = " << num(s.eta_a) << "\neta1 = " << num(s.eta1)
      << "\neta2 = " << num(s.eta2) << "\ngamma1 = " << num(s.gamma1) << "\ngamma2 = " << num(s.gamma2) << '\n';
  if (s.tol_pg) out << "tol_pg = " << num(*s.tol_pg) << '\n';
  out << "position_tolerance = " << num(c.pipeline.position_tolerance) << "\nmax_iter = " << s.max_iter
      << "\ndt_min = " << num(s.dt_min) << "\ndt_max = " << num(s.dt_max)
      << "\nmax_consecutive_rejections = " << s.max_consecutive_rejections << "\n\n[run]\nseeds =";
  for (auto seed : c.seeds) out << ' ' << seed;
  out << "\nout = \"" << c.out_dir << "\"\njobs = " << c.jobs << "\ntrace = " << (c.trace ? "true" : "false")
      << '\n';
}

}  // namespace aerovio
