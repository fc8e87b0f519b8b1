#include <iostream>

#include <CLI11.hpp>

#include "experiments/commands.hpp"
#include "experiments/report.hpp"

int main(int argc, char** argv) {
  using namespace experiments;
  CLI::App app{"Numerical experiments for the pinned membrane model"};
  std::string sub;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 1;
  std::string names;
  for (const auto& s : subcommands()) names += (names.empty() ? "" : ", ") + s;
  app.add_option("subcommand", sub, "one of: " + names)->required();
  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--out", out, "output directory (default out/<subcommand>)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.set_version_flag("--version", version_string());
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  Config config;
  if (!config_path.empty()) {
    try {
      config = Config::load(config_path);
    } catch (const ConfigError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitConfig;
    }
  }
  RunOptions opts;
  opts.seed = seed;
  if (!out.empty()) opts.out = out;
  opts.threads = threads;
  opts.console = &std::cout;
  return run_subcommand(sub, std::move(config), opts);
}
