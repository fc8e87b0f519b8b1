#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "experiments/config.hpp"

namespace experiments {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitNumerical = 2,
  kExitAcceptance = 3,
};

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the config key `seed`
  std::optional<std::filesystem::path> out;  // overrides `out`; default out/<subcommand>
  int threads = 1;
  std::ostream* console = nullptr;  // human-readable report lines
};

const std::vector<std::string>& subcommands();

// Validates the config for the subcommand, runs it and writes its CSV files
// and summary.json. Returns the process exit code; never throws.
int run_subcommand(const std::string& name, Config config, const RunOptions& opts);

}  // namespace experiments
