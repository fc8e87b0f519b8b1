#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "experiments/commands.hpp"
#include "experiments/config.hpp"
#include "experiments/report.hpp"

using namespace experiments;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("membrane_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int run(const std::string& sub, const std::string& cfg_text, const fs::path& out, std::string* console = nullptr,
        std::uint64_t seed = 1) {
  std::istringstream is(cfg_text);
  Config cfg = Config::parse(is, "test");
  std::ostringstream os;
  RunOptions o;
  o.seed = seed;
  o.out = out;
  o.console = &os;
  const int code = run_subcommand(sub, cfg, o);
  if (console) *console = os.str();
  return code;
}

}  // namespace

TEST(Config, ParseCommentsAndTypes) {
  std::istringstream is("# header\n dim = 4 \nepsilon=0.01, 0.001 # grid\nname=abc\nflag=yes\nsite=1 -2 3\nbig=inf\n");
  const Config c = Config::parse(is, "t");
  EXPECT_EQ(c.get_int("dim"), 4);
  EXPECT_EQ(c.get_doubles("epsilon"), (std::vector<double>{0.01, 0.001}));
  EXPECT_EQ(c.get_string("name"), "abc");
  EXPECT_TRUE(c.get_bool("flag"));
  EXPECT_EQ(c.get_site("site", 3), (membrane::Site{1, -2, 3}));
  EXPECT_TRUE(std::isinf(c.get_double("big")));
  EXPECT_EQ(c.get_int("missing", 7), 7);
  EXPECT_THROW(c.get_int("missing"), ConfigError);
  EXPECT_THROW(c.get_int("name"), ConfigError);
  EXPECT_THROW(c.get_site("site", 2), ConfigError);
}

TEST(Config, MalformedLineRejected) {
  std::istringstream is("dim 4\n");
  EXPECT_THROW(Config::parse(is, "t"), ConfigError);
}

TEST(Config, RoundTripIsLossless) {
  std::istringstream is("b=2\na=0.10000000000000001\nc=x y z\n");
  const Config c = Config::parse(is, "t");
  std::istringstream again(c.serialize());
  const Config d = Config::parse(again, "t");
  EXPECT_EQ(c.values(), d.values());
  EXPECT_EQ(c.hash(), d.hash());
  EXPECT_EQ(c.hash().size(), 16u);
}

TEST(Config, EnvironmentOverrides) {
  Config c;
  c.set("burn_in", "10");
  ::setenv("MEMBRANE_BURN_IN", "25", 1);
  ::setenv("MEMBRANE_NEW_KEY", "v", 1);
  c.apply_environment();
  ::unsetenv("MEMBRANE_BURN_IN");
  ::unsetenv("MEMBRANE_NEW_KEY");
  EXPECT_EQ(c.get_int("burn_in"), 25);
  EXPECT_EQ(c.get_string("new_key"), "v");
  EXPECT_EQ(env_name("burn-in"), "MEMBRANE_BURN_IN");
}

TEST(Cli, FkgReportsAllPairs) {
  std::string console;
  const auto out = scratch("fkg");
  EXPECT_EQ(run("fkg", "", out, &console), kExitOk);
  EXPECT_NE(console.find("0 violations / 65536 pairs"), std::string::npos) << console;
  EXPECT_TRUE(fs::exists(out / "fkg.csv"));
  EXPECT_TRUE(fs::exists(out / "summary.json"));
}

TEST(Cli, TailboundDefaultGridPasses) {
  std::string console;
  EXPECT_EQ(run("tailbound", "", scratch("tailbound"), &console), kExitOk);
  EXPECT_NE(console.find("10500 of 10500"), std::string::npos) << console;
}

TEST(Cli, VarianceSweepNeedsThreeEpsilons) {
  EXPECT_EQ(run("variance-sweep", "epsilon=0.01\n", scratch("vs")), kExitConfig);
}

TEST(Cli, InvalidConfigValues) {
  EXPECT_EQ(run("zeta", "side=30\n", scratch("zeta_big")), kExitConfig);
  EXPECT_EQ(run("zeta", "dim=abc\n", scratch("zeta_bad")), kExitConfig);
  EXPECT_EQ(run("interpolation", "side=26\n", scratch("interp_even")), kExitConfig);
  EXPECT_EQ(run("no-such-command", "", scratch("none")), kExitConfig);
}

TEST(Cli, CutoffRefusalIsNumericalFailure) {
  std::string console;
  EXPECT_EQ(run("cutoff", "epsilon=1\n", scratch("cutoff_refused"), &console), kExitNumerical);
  EXPECT_NE(console.find("refused"), std::string::npos) << console;
}

TEST(Cli, OutputsCarryHeaderAndAreDeterministic) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  ASSERT_EQ(run("holefiller", "instances=20\n", a), kExitOk);
  ASSERT_EQ(run("holefiller", "instances=20\n", b), kExitOk);
  const std::string ca = slurp(a / "holefiller.csv"), cb = slurp(b / "holefiller.csv");
  EXPECT_EQ(ca, cb);
  EXPECT_EQ(ca.rfind("# membrane_version=" + version_string(), 0), 0u);
  EXPECT_NE(ca.find("# config_hash="), std::string::npos);
  const auto c = scratch("det_c");
  ASSERT_EQ(run("holefiller", "instances=20\n", c, nullptr, 2), kExitOk);
  EXPECT_NE(slurp(c / "holefiller.csv"), ca);
}

TEST(Cli, SubcommandListIsComplete) {
  const std::vector<std::string> expected{"acceptance", "counterexample", "covariance-decay", "cutoff", "domination",
                                          "fkg", "green", "hardy-rellich", "hierarchy", "holefiller",
                                          "interpolation", "mass", "tailbound", "variance-sweep", "zeta"};
  EXPECT_EQ(subcommands(), expected);
}

TEST(Csv, NumbersUseSeventeenDigits) {
  EXPECT_EQ(num(0.1), "0.10000000000000001");
  EXPECT_EQ(num(2.0), "2");
}
