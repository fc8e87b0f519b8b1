#include <iostream>

#include <CLI11.hpp>

#include "experiments/commands.hpp"
#include "experiments/criteria.hpp"

// Prints one PASS/FAIL line per acceptance criterion; exit 3 if any fails.
int main(int argc, char** argv) {
  using namespace experiments;
  CLI::App app{"Acceptance criteria"};
  std::vector<int> ids;
  std::uint64_t seed = CriterionContext{}.seed;
  int threads = 1;
  std::string out = "out/acceptance";
  app.add_option("--criterion", ids, "criterion number(s); default all")->check(CLI::Range(1, 15));
  app.add_option("--seed", seed, "master seed");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "output directory");
  CLI11_PARSE(app, argc, argv);

  Config config;
  if (!ids.empty()) {
    std::string list;
    for (int id : ids) list += (list.empty() ? "" : ",") + std::to_string(id);
    config.set("criteria", list);
  }
  RunOptions opts;
  opts.seed = seed;
  opts.out = out;
  opts.threads = threads;
  opts.console = &std::cout;
  return run_subcommand("acceptance", std::move(config), opts);
}
