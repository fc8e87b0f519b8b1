#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "membrane/box.hpp"
#include "membrane/green_solver.hpp"
#include "membrane/pinned_measure.hpp"
#include "membrane/square_well.hpp"
#include "membrane/tail_bound.hpp"

using namespace membrane;

namespace {

std::vector<Site> path(std::int64_t first, std::int64_t n) {
  std::vector<Site> s;
  for (std::int64_t k = 0; k < n; ++k) s.push_back(Site{first + k});
  return s;
}

// 1 / (1 + sqrt(2 pi / 6)), the single-site pin probability at eps = 1
const double kSingleSite = 1 / (1 + std::sqrt(2 * std::numbers::pi / 6));

}  // namespace

TEST(ZetaExact, SingleSite) {
  const auto z = zeta_exact(1, {Site{0}}, 1.0);
  EXPECT_NEAR(z.probability(1), kSingleSite, 1e-14);
  EXPECT_NEAR(z.probability(1), 0.49424, 5e-6);
  EXPECT_NEAR(z.probability(0) + z.probability(1), 1.0, 1e-15);
  // the conditional formula with G(0,0) = 1/6 gives the same number
  EXPECT_NEAR(conditional_pin_probability(1.0 / 6.0, 1.0), z.probability(1), 1e-14);
}

TEST(ZetaExact, SmallEpsilonConcentratesOnEmptySet) {
  const auto z = zeta_exact(2, centred_block(2, 3).sites(), 1e-12);
  EXPECT_GT(z.probability(0), 1 - 1e-10);
}

TEST(ZetaExact, WeightsMatchIndependentAssembly) {
  const auto sites = path(0, 6);
  const double eps = 0.7;
  const auto z = zeta_exact(1, sites, eps);
  std::vector<double> w(z.subsets());
  double total = 0;
  for (Mask a = 0; a < z.subsets(); ++a) {
    std::vector<Site> free_sites;
    for (std::size_t k = 0; k < sites.size(); ++k)
      if (!(a >> k & 1u)) free_sites.push_back(sites[k]);
    w[a] = std::pow(eps, std::popcount(a)) * std::exp(GreenSolver::assemble(1, free_sites).log_partition().value);
    total += w[a];
  }
  for (Mask a = 0; a < z.subsets(); ++a) EXPECT_NEAR(z.probability(a), w[a] / total, 1e-12);
}

TEST(ZetaExact, InvariantUnderSiteOrder) {
  auto sites = centred_block(2, 3).sites();
  const auto z1 = zeta_exact(2, sites, 0.5);
  std::reverse(sites.begin(), sites.end());
  const auto z2 = zeta_exact(2, sites, 0.5);
  const std::size_t n = sites.size();
  for (Mask a = 0; a < z1.subsets(); ++a) {
    Mask b = 0;
    for (std::size_t k = 0; k < n; ++k)
      if (a >> k & 1u) b |= Mask{1} << (n - 1 - k);
    EXPECT_NEAR(z1.probability(a), z2.probability(b), 1e-12);
  }
}

TEST(ZetaExact, TooLargeRejected) { EXPECT_THROW(zeta_exact(1, path(0, 21), 1.0), std::invalid_argument); }

TEST(ConditionalPin, Examples) {
  EXPECT_NEAR(conditional_pin_probability(1 / (2 * std::numbers::pi), 1.0), 0.5, 1e-15);
  const auto g = GreenSolver::assemble(1, {Site{0}});
  EXPECT_NEAR(conditional_pin_probability(g, Site{0}, 1.0), kSingleSite, 1e-14);
  // linear in eps as eps -> 0
  const double c = std::sqrt(2 * std::numbers::pi / 6);
  EXPECT_NEAR(conditional_pin_probability(1.0 / 6, 1e-9) / 1e-9, 1 / c, 1e-6);
  EXPECT_LT(conditional_pin_probability(0.2, 0.5), conditional_pin_probability(0.2, 0.6));
  EXPECT_GT(conditional_pin_probability(0.2, 0.5), conditional_pin_probability(0.3, 0.5));
}

TEST(Fkg, ComparablePairsAreEqualities) {
  const auto z = zeta_exact(1, path(0, 4), 1.0);
  for (Mask a = 0; a < 16; ++a)
    for (Mask b = 0; b < 16; ++b)
      if ((a & b) == a)
        EXPECT_DOUBLE_EQ(z.probability(a | b) * z.probability(a & b), z.probability(a) * z.probability(b));
}

TEST(Fkg, EightSitePathHasNoViolations) {
  for (double eps : {0.1, 1.0, 10.0}) {
    const auto rep = fkg_lattice_check(zeta_exact(1, path(0, 8), eps));
    EXPECT_EQ(rep.pairs_checked, 65536u);
    EXPECT_TRUE(rep.violations.empty()) << eps;
  }
}

TEST(Fkg, HandBuiltCounterexampleIsCaught) {
  // mass on the two incomparable singletons only
  const std::vector<double> prob{0.0, 0.5, 0.5, 0.0};
  const auto rep = fkg_lattice_check(prob, 2);
  ASSERT_FALSE(rep.violations.empty());
  const auto& v = rep.violations.front();
  EXPECT_EQ(v.a | v.b, 3u);
  EXPECT_EQ(v.a & v.b, 0u);
}

TEST(Fkg, SampledModeRejected) {
  const auto s = PinnedSetDistribution::from_samples(1, path(0, 2), 1.0, {0, 1, 3});
  EXPECT_THROW(fkg_lattice_check(s), std::invalid_argument);
}

TEST(Domination, BernoulliAgainstBernoulli) {
  const auto b = bernoulli_distribution(1, path(0, 4), 0.3);
  EXPECT_TRUE(strong_domination_check(b, 0.2, DominationDirection::dominates).holds());
  EXPECT_TRUE(strong_domination_check(b, 0.3, DominationDirection::dominates).holds());
  EXPECT_FALSE(strong_domination_check(b, 0.4, DominationDirection::dominates).holds());
  EXPECT_TRUE(strong_domination_check(b, 0.4, DominationDirection::dominated).holds());
  EXPECT_FALSE(strong_domination_check(b, 0.2, DominationDirection::dominated).holds());
}

TEST(Domination, DominatedByBernoulliOne) {
  const auto z = zeta_exact(2, centred_block(2, 3).sites(), 2.0);
  const auto rep = strong_domination_check(z, 1.0, DominationDirection::dominated);
  EXPECT_TRUE(rep.holds());
  EXPECT_TRUE(rep.exhaustive);
  EXPECT_EQ(rep.pairs_checked, 9u * 256u);
}

TEST(Domination, ConditionalsMatchFormula) {
  // zeta(x pinned | rest = E) = (1 + sqrt(2 pi G_{Lambda \ E}(x,x)) / eps)^{-1}
  const auto sites = path(0, 5);
  const double eps = 0.3;
  const auto z = zeta_exact(1, sites, eps);
  for (Mask e = 0; e < 32; ++e)
    for (std::size_t x = 0; x < 5; ++x) {
      if (e >> x & 1u) continue;
      std::vector<Site> free_sites;
      for (std::size_t k = 0; k < 5; ++k)
        if (!(e >> k & 1u)) free_sites.push_back(sites[k]);
      const auto g = GreenSolver::assemble(1, free_sites);
      EXPECT_NEAR(z.conditional_pin_probability(x, e), conditional_pin_probability(g, sites[x], eps), 1e-12);
    }
}

TEST(Domination, FiveDimensionalBracketsScaleWithEpsilon) {
  const auto sites = block(Site(5), 2).sites();  // 32 sites would be too many; use a slice
  std::vector<Site> toy(sites.begin(), sites.begin() + 8);
  for (double eps : {1e-3, 1e-4}) {
    const auto z = zeta_exact(5, toy, eps);
    const auto rep = strong_domination_check(z, 0.0, DominationDirection::dominates);
    EXPECT_GT(rep.min_conditional / eps, 0.1);
    EXPECT_LT(rep.max_conditional / eps, 10.0);
  }
}

TEST(EmptyProbability, Examples) {
  const auto z = zeta_exact(1, path(0, 6), 1.0);
  EXPECT_NEAR(empty_probability(z, 0).value, 1.0, 1e-14);
  const Mask e = 0b010110;
  double direct = 0;
  for (Mask a = 0; a < 64; ++a)
    if ((a & e) == 0) direct += z.probability(a);
  EXPECT_NEAR(empty_probability(z, e).value, direct, 1e-14);
  const auto t = subset_sum_table(z);
  EXPECT_NEAR(t[z.full() & ~e], direct, 1e-14);
}

TEST(EmptyProbability, Supermultiplicative) {
  const auto z = zeta_exact(2, block(Site(2), 3).sites(), 0.8);
  const Mask full = z.full();
  for (Mask e = 0; e <= full; e += 7)
    for (Mask f = 0; f <= full; f += 5) {
      if (e & f) continue;
      EXPECT_GE(empty_probability(z, e | f).value,
                empty_probability(z, e).value * empty_probability(z, f).value * (1 - 1e-12));
    }
}

TEST(VolumeMonotonicity, ConstantFunctionIsEquality) {
  const auto small = zeta_exact(1, path(0, 4), 1.0);
  const auto large = zeta_exact(1, path(-1, 6), 1.0);
  const auto r = volume_monotonicity_check(small, large, [](Mask) { return 1.0; });
  EXPECT_TRUE(r.ok);
  EXPECT_NEAR(r.small_volume, r.large_volume, 1e-14);
}

TEST(VolumeMonotonicity, SitePinnedIndicatorOnNestedPaths) {
  const auto small = zeta_exact(1, path(0, 4), 1.0);
  const auto large = zeta_exact(1, path(-1, 6), 1.0);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto r = volume_monotonicity_check(small, large, [k](Mask a) { return (a >> k & 1u) ? 1.0 : 0.0; });
    EXPECT_TRUE(r.ok) << k;
    EXPECT_GT(r.small_volume, r.large_volume);
  }
  // |A n Q| for Q = the middle two sites
  const auto r = volume_monotonicity_check(small, large, [](Mask a) { return static_cast<double>(std::popcount(a & 0b0110u)); });
  EXPECT_TRUE(r.ok);
}

TEST(VolumeMonotonicity, DecreasingFunctionRejected) {
  const auto small = zeta_exact(1, path(0, 4), 1.0);
  const auto large = zeta_exact(1, path(-1, 6), 1.0);
  EXPECT_THROW(volume_monotonicity_check(small, large, [](Mask a) { return -static_cast<double>(std::popcount(a)); }),
               std::invalid_argument);
}

TEST(PinnedDensity, Examples) {
  EXPECT_NEAR(pinned_density(zeta_exact(1, {Site{0}}, 1.0)).value, kSingleSite, 1e-14);
  EXPECT_LT(pinned_density(zeta_exact(1, path(0, 5), 1e-10)).value, 1e-9);
  double prev = 0;
  for (double eps : {0.01, 0.1, 0.5, 1.0, 2.0, 10.0}) {
    const double rho = pinned_density(zeta_exact(2, block(Site(2), 3).sites(), eps)).value;
    EXPECT_GE(rho, prev);
    prev = rho;
  }
}

TEST(WriteTable, OneLinePerSubset) {
  const auto z = zeta_exact(1, path(0, 2), 1.0);
  std::ostringstream os;
  write_table(os, z);
  std::istringstream is(os.str());
  std::string line;
  int n = 0;
  while (std::getline(is, line))
    if (!line.empty() && line[0] != '#') ++n;
  EXPECT_EQ(n, 4);
}

TEST(TailBound, WorkedExample) {
  const auto t = binomial_tail_bound_check(10, Rational(1, 10), Rational(1, 2));
  double lhs = 0;
  for (int j = 5; j <= 10; ++j) lhs += std::tgamma(11.0) / (std::tgamma(j + 1.0) * std::tgamma(11.0 - j)) * std::pow(0.1, j);
  EXPECT_NEAR(t.lhs_value, lhs, 1e-15);
  EXPECT_NEAR(t.rhs_value, std::pow(0.4, 5), 1e-15);
  EXPECT_TRUE(t.ok);
}

TEST(TailBound, EdgeCases) {
  const auto zero = binomial_tail_bound_check(7, Rational(0), Rational(1, 4));
  EXPECT_EQ(zero.lhs, 0);
  EXPECT_TRUE(zero.ok);
  for (int n = 1; n <= 20; ++n) EXPECT_TRUE(binomial_tail_bound_check(n, Rational(1, 2), Rational(1, 2)).ok) << n;
  EXPECT_THROW(binomial_tail_bound_check(5, Rational(1, 3), Rational(1, 4)), std::invalid_argument);
  EXPECT_THROW(binomial_tail_bound_check(5, Rational(1, 4), Rational(3, 4)), std::invalid_argument);
  EXPECT_THROW(binomial_tail_bound_check(0, Rational(1, 4), Rational(1, 4)), std::invalid_argument);
}

TEST(SquareWell, LimitsForNTen) {
  const auto r = square_well_counterexample(10, 1e-4);
  const double expected[] = {0.04, 2, 0.38, 0.38};
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(r.scaled[k], expected[k], 0.01 * expected[k]) << k;
  EXPECT_FALSE(r.small_t_warning);
  EXPECT_TRUE(square_well_counterexample(10, 0.01).small_t_warning);
}

TEST(SquareWell, RatioApproachesOneHalf) {
  double prev = 1;
  for (double n : {4.0, 10.0, 100.0, 1000.0}) {
    const auto r = square_well_counterexample(n, 1e-4 / n);
    EXPECT_LT(r.ratio, 1.0);
    EXPECT_LT(r.ratio, prev);
    prev = r.ratio;
  }
  EXPECT_NEAR(prev, 0.5, 0.01);
}

// Areas are homogeneous of degree 2 in t, so area / t^2 equals the limits exactly.
TEST(SquareWell, PolygonAreasMatchClosedForms) {
  const double n = 4, t = 1e-3;
  const std::pair<double, double> x1{1, 0}, x2{0, 1}, nx1{n, 0}, nx2{0, n}, sum{1, 1}, diff{1, -1};
  EXPECT_NEAR(strip_intersection_area({x1, x2, nx1, nx2, sum, diff}, t) / (t * t), 4 / (n * n), 1e-12);
  EXPECT_NEAR(strip_intersection_area({sum, diff}, t) / (t * t), 2.0, 1e-12);
  EXPECT_NEAR(strip_intersection_area({nx1, sum, diff}, t) / (t * t), 4 / n - 2 / (n * n), 1e-12);
  EXPECT_NEAR(strip_intersection_area({nx2, sum, diff}, t) / (t * t), 4 / n - 2 / (n * n), 1e-12);
}
