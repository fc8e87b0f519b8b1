#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "membrane/box.hpp"
#include "membrane/green_solver.hpp"
#include "membrane/operators.hpp"

using namespace membrane;

namespace {

Eigen::MatrixXd dense(const GreenSolver& g) { return Eigen::MatrixXd(g.matrix()); }

std::vector<Site> random_subset(const SiteBox& b, double keep, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(keep);
  std::vector<Site> out;
  b.for_each([&](const Site& y) {
    if (coin(rng)) out.push_back(y);
  });
  if (out.empty()) out.push_back(b.lo);
  return out;
}

constexpr double kTwoPi = 2 * std::numbers::pi;

}  // namespace

TEST(Assemble, SingleSiteOneDimension) {
  const auto g = GreenSolver::assemble(1, {Site{0}});
  EXPECT_EQ(dense(g)(0, 0), 6.0);
}

TEST(Assemble, SingleSiteFourDimensions) {
  const auto g = GreenSolver::assemble(4, {Site(4)});
  EXPECT_EQ(dense(g)(0, 0), 72.0);
}

TEST(Assemble, TwoSitesOneDimension) {
  const auto g = GreenSolver::assemble(1, {Site{0}, Site{1}});
  Eigen::Matrix2d b;
  b << 6, -4, -4, 6;
  EXPECT_EQ(dense(g), Eigen::MatrixXd(b));
}

TEST(Assemble, MatchesOperatorOnIndicators) {
  // B[x][y] = bilap(delta_y)(x), computed without the stencil table
  const auto sites = random_subset(centred_block(2, 5), 0.6, 3);
  const auto g = GreenSolver::assemble(2, sites);
  const Eigen::MatrixXd b = dense(g);
  for (std::size_t i = 0; i < sites.size(); ++i) {
    LatticeField delta(2);
    delta.set(sites[i], 1.0);
    for (std::size_t j = 0; j < sites.size(); ++j)
      EXPECT_EQ(b(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)), bilaplacian_apply(delta, sites[j]));
  }
}

TEST(Green, SingleSite) {
  const auto g = GreenSolver::assemble(1, {Site{0}});
  EXPECT_NEAR(g.variance(Site{0}), 1.0 / 6.0, 1e-15);
}

TEST(Green, TwoSites) {
  const auto g = GreenSolver::assemble(1, {Site{0}, Site{1}});
  EXPECT_NEAR(g.covariance(Site{0}, Site{0}), 0.3, 1e-15);
  EXPECT_NEAR(g.covariance(Site{0}, Site{1}), 0.2, 1e-15);
  EXPECT_NEAR(g.variance(Site{1}), 0.3, 1e-15);
  const LatticeField col = g.green_column(Site{1});
  EXPECT_NEAR(col(Site{0}), 0.2, 1e-15);
  EXPECT_EQ(col(Site{2}), 0.0);
}

TEST(Green, SymmetricAndResidualSmall) {
  for (int d : {1, 2, 3}) {
    const auto sites = random_subset(centred_block(d, d == 1 ? 30 : (d == 2 ? 8 : 5)), 0.7, 11 + d);
    const auto g = GreenSolver::assemble(d, sites);
    const Eigen::MatrixXd b = dense(g);
    for (std::size_t k = 0; k < sites.size(); k += 3) {
      const Eigen::VectorXd col = g.green_vector(sites[k]);
      Eigen::VectorXd e = Eigen::VectorXd::Zero(col.size());
      e[static_cast<Eigen::Index>(k)] = 1;
      EXPECT_LE((b * col - e).lpNorm<Eigen::Infinity>(), 1e-9 * col.lpNorm<Eigen::Infinity>());
      for (std::size_t m = 0; m < sites.size(); m += 5)
        EXPECT_NEAR(g.covariance(sites[k], sites[m]), g.covariance(sites[m], sites[k]), 1e-9);
    }
  }
}

TEST(Green, PinnedAndExteriorQueriesAreZero) {
  const auto g = GreenSolver::assemble(1, {Site{0}, Site{1}});
  EXPECT_EQ(g.variance(Site{5}), 0.0);
  EXPECT_EQ(g.covariance(Site{0}, Site{5}), 0.0);
  EXPECT_THROW(g.green_column(Site{5}), std::invalid_argument);
}

TEST(Green, CauchySchwarz) {
  const auto sites = random_subset(centred_block(2, 7), 0.8, 5);
  const auto g = GreenSolver::assemble(2, sites);
  for (const Site& x : sites)
    for (const Site& y : sites)
      EXPECT_LE(std::abs(g.covariance(x, y)), std::sqrt(g.variance(x) * g.variance(y)) + 1e-12);
}

TEST(Green, IterativeBackendAgreesWithDirect) {
  const auto sites = centred_block(2, 12).sites();
  const auto direct = GreenSolver::assemble(2, sites);
  SolverOptions o;
  o.direct_limit = 0;
  const auto cg = GreenSolver::assemble(2, sites, o);
  EXPECT_TRUE(direct.direct());
  EXPECT_FALSE(cg.direct());
  for (const Site& x : {Site{0, 0}, Site{3, -2}, Site{-5, 6}})
    EXPECT_NEAR(cg.variance(x), direct.variance(x), 1e-9 * direct.variance(x));
  EXPECT_NEAR(cg.log_partition().value, direct.log_partition().value, 1e-8 * std::abs(direct.log_partition().value));
}

TEST(LogPartition, EmptyDomain) {
  const auto g = GreenSolver::assemble(2, {});
  EXPECT_EQ(g.size(), 0u);
  EXPECT_EQ(g.log_partition().value, 0.0);
}

TEST(LogPartition, SingleSite) {
  const auto g = GreenSolver::assemble(1, {Site{0}});
  EXPECT_NEAR(g.log_partition().value, 0.5 * (std::log(kTwoPi) - std::log(6.0)), 1e-15);
}

TEST(LogPartition, RatioIdentityTwoSites) {
  const double z1 = GreenSolver::assemble(1, {Site{0}}).log_partition().value;
  const double z2 = GreenSolver::assemble(1, {Site{0}, Site{1}}).log_partition().value;
  // det B = 20 for the pair
  EXPECT_NEAR(z2, std::log(kTwoPi) - 0.5 * std::log(20.0), 1e-14);
  EXPECT_NEAR(std::exp(z1 - z2), 1 / std::sqrt(kTwoPi * 0.3), 1e-12);
  EXPECT_NEAR(std::exp(z1 - z2), 0.7284, 1e-4);
}

TEST(LogPartition, RatioIdentityRandom) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const int d = 1 + static_cast<int>(s % 3);
    auto sites = random_subset(centred_block(d, d == 1 ? 10 : 3), 0.7, 100 + s);
    const auto big = GreenSolver::assemble(d, sites);
    const Site x = sites[s % sites.size()];
    std::erase(sites, x);
    const auto small = GreenSolver::assemble(d, sites);
    const double lhs = std::exp(small.log_partition().value - big.log_partition().value);
    const double rhs = 1 / std::sqrt(kTwoPi * big.variance(x));
    EXPECT_NEAR(lhs / rhs, 1.0, 1e-9);
  }
}

TEST(ConditionOnPin, TwoSiteExample) {
  const auto g = GreenSolver::assemble(1, {Site{0}, Site{1}});
  const DenseGreen p = g.condition_on_pin(Site{1});
  EXPECT_NEAR(p.variance(Site{0}), 1.0 / 6.0, 1e-15);
  EXPECT_EQ(p.variance(Site{1}), 0.0);
  EXPECT_NEAR(p.log_partition(), GreenSolver::assemble(1, {Site{0}}).log_partition().value, 1e-14);
}

TEST(ConditionOnPin, PinAllGivesEmpty) {
  const auto g = GreenSolver::assemble(2, centred_block(2, 2).sites());
  DenseGreen p = DenseGreen::from_solver(g);
  for (const Site& x : centred_block(2, 2).sites()) p = p.pin(x);
  EXPECT_EQ(p.size(), 0u);
  EXPECT_NEAR(p.log_partition(), 0.0, 1e-12);
}

TEST(ConditionOnPin, MatchesReassembly) {
  auto sites = random_subset(centred_block(2, 5), 0.8, 9);
  const auto g = GreenSolver::assemble(2, sites);
  const Site x = sites[sites.size() / 2];
  const DenseGreen p = g.condition_on_pin(x);
  std::erase(sites, x);
  const auto r = GreenSolver::assemble(2, sites);
  for (const Site& a : sites)
    for (const Site& b : sites) EXPECT_NEAR(p.covariance(a, b), r.covariance(a, b), 1e-9);
  EXPECT_NEAR(p.log_partition(), r.log_partition().value, 1e-9);
  EXPECT_THROW(p.pin(x), std::invalid_argument);
}

TEST(DenseLogDet, MatchesClosedForm) {
  Eigen::Matrix2d b;
  b << 6, -4, -4, 6;
  EXPECT_NEAR(dense_log_det(b), std::log(20.0), 1e-14);
}
