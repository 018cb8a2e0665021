#pragma once

// The `aerovio` command line: simulate, solve and report. run_cli is the
// whole program minus process setup, so tests can drive it in-process.

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace aerovio {

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Reads the real process environment.
std::optional<std::string> process_env(const std::string& name);

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& env = process_env);

}  // namespace aerovio
