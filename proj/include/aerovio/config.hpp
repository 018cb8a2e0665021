#pragma once

// Run configuration for `aerovio simulate`.
//
// The file is INI-style with sections [flight], [noise], [landmarks],
// [camera], [geometry], [solver] and [run]; see config/example.ini for every
// key with its default. Angles in the file are in degrees. Precedence, from
// weakest to strongest: built-in defaults, --paper-preset, the config file,
// the AEROVIO_OUT_DIR / AEROVIO_SEED environment variables, command-line flags.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "aerovio/pipeline.hpp"
#include "aerovio/sensor_sim.hpp"

namespace aerovio {

struct RunConfig {
  SimulationSpec sim;
  PipelineConfig pipeline;
  std::vector<std::uint64_t> seeds{1};
  std::string out_dir = "out";
  int jobs = 1;
  bool trace = false;
  bool paper_preset = false;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Reference scenario: 1200 m, 235 m/s, one hour, full sensor error budget.
void apply_paper_preset(RunConfig& config);

/// Applies every key of an INI document on top of `config`. Unknown keys and
/// malformed values throw ConfigError with the dotted field path.
void apply_config(RunConfig& config, std::istream& in);
void apply_config_file(RunConfig& config, const std::string& path);

/// Environment overrides; `lookup` returns the variable's value if set.
void apply_environment(RunConfig& config,
                       const std::function<std::optional<std::string>(const std::string&)>& lookup);

/// "1 2 3", "1,2,3" and ranges "1-10" (inclusive) are accepted.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// The effective configuration as an INI document accepted by apply_config.
void write_config(std::ostream& out, const RunConfig& config);

}  // namespace aerovio
