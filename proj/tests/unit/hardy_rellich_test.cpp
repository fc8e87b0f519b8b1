#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "membrane/box.hpp"
#include "membrane/hardy_rellich.hpp"
#include "membrane/operators.hpp"

using namespace membrane;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::size_t cone_along_first_axis(const ConeSet& c) {
  for (std::size_t i = 0; i < c.count(); ++i)
    if (std::abs(c.theta[i][0] - 1) < 1e-12) return i;
  return c.count();
}

}  // namespace

TEST(SimplexDirections, TwoDimensions) {
  const ConeSet c = simplex_directions(2);
  ASSERT_EQ(c.count(), 3u);
  std::vector<std::vector<double>> expected{{1, 0}, {-0.5, std::sqrt(3) / 2}, {-0.5, -std::sqrt(3) / 2}};
  for (const auto& e : expected) {
    bool found = false;
    for (const auto& t : c.theta) found = found || (std::abs(t[0] - e[0]) < 1e-12 && std::abs(t[1] - e[1]) < 1e-12);
    EXPECT_TRUE(found);
  }
}

TEST(SimplexDirections, OneDimension) {
  const ConeSet c = simplex_directions(1);
  ASSERT_EQ(c.count(), 2u);
  EXPECT_DOUBLE_EQ(c.theta[0][0] * c.theta[1][0], -1.0);
}

TEST(SimplexDirections, UnitLengthAndEqualAngles) {
  for (int d = 1; d <= 6; ++d) {
    const ConeSet c = simplex_directions(d);
    ASSERT_EQ(c.count(), static_cast<std::size_t>(d + 1));
    for (std::size_t i = 0; i < c.count(); ++i) {
      EXPECT_NEAR(dot(c.theta[i], c.theta[i]), 1.0, 1e-12);
      for (std::size_t j = 0; j < i; ++j) EXPECT_NEAR(dot(c.theta[i], c.theta[j]), -1.0 / d, 1e-12);
    }
    EXPECT_GT(c.kappa, 0);
    EXPECT_LT(max_cross_cone_dot(c, 2000, 3), 0) << d;
  }
}

TEST(ConeDistances, EmptyPinnedSet) {
  const auto cones = simplex_directions(2);
  const auto r = cone_distances(Site{0, 0}, PinnedExt::explicit_set({}), cones, 10);
  for (auto v : r.per_cone) EXPECT_EQ(v, kInfiniteDistance);
  EXPECT_EQ(r.d_star, kInfiniteDistance);
}

TEST(ConeDistances, PointOnConeAxis) {
  const auto cones = simplex_directions(2);
  const std::size_t i = cone_along_first_axis(cones);
  ASSERT_LT(i, cones.count());
  const auto r = cone_distances(Site{0, 0}, PinnedExt::explicit_set({Site{3, 0}}), cones, 10);
  EXPECT_EQ(r.per_cone[i], 3);
  EXPECT_EQ(r.d_star, kInfiniteDistance);
}

TEST(ConeDistances, ComplementOfBallIsPinned) {
  for (int d : {1, 2, 3}) {
    const auto cones = simplex_directions(d);
    const std::int64_t radius = 6;
    const auto ext = PinnedExt::from_box(centred_block(d, 2 * radius + 1), {});
    const auto r = cone_distances(Site(d), ext, cones, 8 * radius);
    EXPECT_LE(r.d_star, d * (radius + 1) + 2 * d) << d;
    EXPECT_GT(r.d_star, radius) << d;
  }
}

TEST(ConeDistances, MonotoneInPinnedSet) {
  std::mt19937_64 rng(2);
  const auto cones = simplex_directions(2);
  const ConeOffsets off(cones, 20);
  const SiteBox lambda = centred_block(2, 15);
  std::vector<Site> a;
  for (const Site& y : lambda.sites())
    if (rng() % 10 == 0) a.push_back(y);
  const auto small = PinnedExt::from_box(lambda, a);
  const auto large = small.with_pinned({Site{1, 1}, Site{-2, 3}, Site{4, -1}});
  for (const Site& x : centred_block(2, 9).sites()) {
    const auto s = cone_distances(x, small, off), l = cone_distances(x, large, off);
    for (std::size_t i = 0; i < cones.count(); ++i) EXPECT_LE(l.per_cone[i], s.per_cone[i]);
  }
}

TEST(LocalPoincare, ZeroField) {
  const auto cones = simplex_directions(2);
  const SiteBox lambda = centred_block(2, 7);
  const auto r = local_poincare_ratio(LatticeField(2), PinnedExt::from_box(lambda, {}), {lambda}, 4, ConeOffsets(cones, 4));
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_EQ(r.ratio, 0.0);
}

TEST(LocalPoincare, NonzeroOnPinnedSetRejected) {
  const auto cones = simplex_directions(2);
  const SiteBox lambda = centred_block(2, 7);
  LatticeField u(2);
  u.set(Site{0, 0}, 1.0);
  EXPECT_THROW(local_poincare_ratio(u, PinnedExt::from_box(lambda, {Site{0, 0}}), {lambda}, 4, ConeOffsets(cones, 4)),
               std::invalid_argument);
}

TEST(LocalPoincare, IndicatorIgnoresFarSites) {
  // no pinning inside a large block and R small: d_* > R at the centre
  const auto cones = simplex_directions(2);
  const SiteBox lambda = centred_block(2, 41);
  LatticeField u(2);
  centred_block(2, 3).for_each([&](const Site& y) { u.set(y, 1.0); });
  const auto r = local_poincare_ratio(u, PinnedExt::from_box(lambda, {}), {centred_block(2, 3)}, 3, ConeOffsets(cones, 3));
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_GT(r.rhs, 0.0);
}

TEST(LocalPoincare, NormalisationMatchesDefinition) {
  const auto cones = simplex_directions(4);
  const SiteBox lambda = centred_block(4, 3);
  LatticeField u(4);
  u.set(Site(4), 1.0);
  const std::int64_t big_r = 4;
  const auto r = local_poincare_ratio(u, PinnedExt::from_box(lambda, {}), {lambda}, big_r, ConeOffsets(cones, big_r));
  const auto dist = cone_distances(Site(4), PinnedExt::from_box(lambda, {}), cones, big_r);
  EXPECT_EQ(r.lhs, dist.d_star <= big_r ? 1.0 : 0.0);
  // ||hess delta||^2 is sum over the stencil of squared mixed differences
  double energy = 0;
  lambda.expanded(big_r).for_each([&](const Site& x) { energy += hessian_sq(u, x); });
  EXPECT_NEAR(r.rhs, std::pow(4.0, 4) * (1 + std::log(4.0)) * energy, 1e-9 * r.rhs);
}

TEST(Interpolation, ConstantFieldHasNoGradient) {
  const int d = 2;
  const std::int64_t side = interpolation_min_side(d) | 1;
  const BoxSpec q = BoxSpec::of_side(Site(d), side);
  LatticeField u(d);
  q.sites_box().expanded(2).for_each([&](const Site& y) { u.set(y, 3.0); });
  const auto r = interpolation_ratio(u, q, q.sites());
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_EQ(r.ratio, 0.0);
}

TEST(Interpolation, AffineFieldWithSlabRemoved) {
  const int d = 2;
  const std::int64_t side = interpolation_min_side(d) | 1;
  const BoxSpec q = BoxSpec::of_side(Site(d), side);
  LatticeField u(d);
  q.sites_box().expanded(2).for_each([&](const Site& y) { u.set(y, 0.5 * y[0] - 0.25 * y[1] + 1); });
  std::vector<Site> b;
  for (const Site& y : q.sites())
    if (y[0] != 0) b.push_back(y);
  const auto r = interpolation_ratio(u, q, b);
  double lhs = 0, mass = 0;
  for (const Site& y : q.sites()) lhs += gradient_sq(u, y);
  for (const Site& y : b) mass += u(y) * u(y);
  EXPECT_NEAR(r.lhs, lhs, 1e-9 * lhs);
  // the Hessian of an affine field vanishes, so only the mass term remains
  const double big_r = static_cast<double>(side);
  EXPECT_NEAR(r.rhs, mass / (big_r * big_r), 1e-9 * r.rhs);
  EXPECT_TRUE(std::isfinite(r.ratio));
}

TEST(Interpolation, PreconditionsEnforced) {
  const int d = 2;
  const std::int64_t side = interpolation_min_side(d) | 1;
  LatticeField u(d);
  const BoxSpec q = BoxSpec::of_side(Site(d), side);
  const auto all = q.sites();
  std::vector<Site> few(all.begin(), all.begin() + 3);
  EXPECT_THROW(interpolation_ratio(u, q, few), std::invalid_argument);
  EXPECT_THROW(interpolation_ratio(u, BoxSpec::of_side(Site(d), 5), BoxSpec::of_side(Site(d), 5).sites()),
               std::invalid_argument);
  const BoxSpec even = BoxSpec::of_side(Site(d), side + 1);
  EXPECT_THROW(interpolation_ratio(u, even, even.sites()), std::invalid_argument);
}
