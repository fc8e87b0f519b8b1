#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "membrane/box.hpp"
#include "membrane/cutoff.hpp"
#include "membrane/errors.hpp"
#include "membrane/hardy_rellich.hpp"
#include "membrane/hierarchy.hpp"
#include "membrane/hole_filler.hpp"
#include "membrane/operators.hpp"

using namespace membrane;

namespace {

// Two-dimensional geometry with j_* = 1 and room for level-0 corrections:
// ell(0) = 21, ell(1) = 2709, macro side 21735.
CutoffParams plane_params() {
  CutoffParams p;
  p.K = 3;
  p.L = 3;
  p.M = 129;
  p.scales = Scales::from_lengths(2, 7, 2415);
  return p;
}

Polymer origin_region(const CutoffParams& p) {
  Polymer u(BoxGrid(p.dim(), p.macro_side()));
  u.insert(Site(p.dim()));
  return u;
}

LatticeField random_field(const SiteBox& b, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(lo, hi);
  LatticeField f(b.dim());
  b.for_each([&](const Site& y) { f.set(y, U(rng)); });
  return f;
}

}  // namespace

TEST(CutoffParams, ScalesAndTopLevel) {
  const CutoffParams p = plane_params();
  EXPECT_EQ(p.ell(0), 21);
  EXPECT_EQ(p.ell(1), 129 * 21);
  EXPECT_EQ(p.macro_side(), 21735);
  EXPECT_EQ(p.j_star(), 1);
  for (int j = 1; j <= 2; ++j) EXPECT_LE(12 * p.ell(j - 1), p.ell(j));
  EXPECT_NO_THROW(p.validate());
}

TEST(CutoffParams, InvalidValuesRejected) {
  CutoffParams p = plane_params();
  p.M = 11;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = plane_params();
  p.M = 14;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = plane_params();
  p.K = 5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = plane_params();
  p.L = 4;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(CutoffParams, SmallMacroScaleHasNoHierarchy) {
  CutoffParams p;
  p.K = 3;
  p.L = 1;
  p.M = 13;
  p.scales = Scales::from_lengths(2, 5, 25);
  EXPECT_LT(p.j_star(), 1);
  EXPECT_THROW(build_hierarchy({}, p), std::invalid_argument);
}

TEST(BadLevel0, NoPinningDeepInsideMeansEveryBoxBad) {
  const CutoffParams p = plane_params();
  const ConeSet cones = simplex_directions(2);
  const SiteBox lambda = centred_block(2, 2001);
  const SiteBox window = centred_block(2, 63);
  const auto bad = bad_level0(PinnedExt::from_box(lambda, {}), p, cones, window);
  EXPECT_EQ(bad.size(), BoxGrid(2, p.micro_side()).indices_intersecting(window).size());
}

TEST(BadLevel0, BoxesFarOutsideAreNeverBad) {
  const CutoffParams p = plane_params();
  const ConeSet cones = simplex_directions(2);
  const SiteBox lambda = centred_block(2, 41);
  const auto bad = bad_level0(PinnedExt::from_box(lambda, {}), p, cones, block(Site{500, 500}, 63));
  EXPECT_TRUE(bad.empty());
}

TEST(BadLevel0, DensePinnedGridClearsInterior) {
  const CutoffParams p = plane_params();
  const ConeSet cones = simplex_directions(2);
  const SiteBox lambda = centred_block(2, 301);
  std::vector<Site> grid;
  lambda.for_each([&](const Site& y) {
    if (y[0] % 3 == 0 && y[1] % 3 == 0) grid.push_back(y);
  });
  const auto bad = bad_level0(PinnedExt::from_box(lambda, grid), p, cones, centred_block(2, 105));
  EXPECT_TRUE(bad.empty());
}

TEST(Hierarchy, EmptyLevelZero) {
  const auto h = build_hierarchy({}, plane_params());
  EXPECT_TRUE(h.empty());
  for (const auto& lv : h.levels) EXPECT_TRUE(lv.boxes.empty());
  EXPECT_TRUE(type_one_boxes(h).empty());
}

TEST(Hierarchy, NearbyBoxesAreClusteredAndCovered) {
  const CutoffParams p = plane_params();
  const auto h = build_hierarchy({Site{0, 0}, Site{1, 0}}, p);
  const auto& l0 = h.level(0);
  ASSERT_EQ(l0.boxes.size(), 2u);
  EXPECT_EQ(l0.count_clustered(), 2u);
  const auto& l1 = h.level(1);
  ASSERT_EQ(l1.boxes.size(), 1u);
  for (const auto& b : l0.boxes) EXPECT_TRUE(l1.boxes[0].sites.contains(b.sites));
  EXPECT_FALSE(type_one_boxes(h).empty());
}

TEST(Hierarchy, DistantBoxesAreIsolated) {
  const CutoffParams p = plane_params();
  const auto h = build_hierarchy({Site{0, 0}, Site{200, 0}}, p);
  EXPECT_EQ(h.level(0).count_clustered(), 0u);
  EXPECT_TRUE(h.level(1).boxes.empty());
  for (const auto& [idx, j] : h.j_isol) EXPECT_EQ(j, 0) << idx;
}

TEST(Hierarchy, CoverBoxesHoldTwoDisjointClusteredBoxes) {
  const CutoffParams p = plane_params();
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::int64_t> c(-150, 150);
  std::set<Site> level0;
  for (int k = 0; k < 40; ++k) level0.insert(Site{c(rng), c(rng)});
  const auto h = build_hierarchy(level0, p);
  const auto& l0 = h.level(0);
  for (const auto& top : h.level(1).boxes) {
    std::vector<SiteBox> inside;
    for (std::size_t k = 0; k < l0.boxes.size(); ++k)
      if (l0.clustered[k] && top.sites.contains(l0.boxes[k].sites)) inside.push_back(l0.boxes[k].sites);
    EXPECT_GE(max_disjoint(inside).size(), 2u);
  }
  EXPECT_GE(l0.boxes.size(), h.level(1).boxes.size() + 1);
  std::ostringstream os;
  h.dump(os);
  EXPECT_FALSE(os.str().empty());
}

TEST(MinCover, SmallestThenLexicographicallyFirst) {
  auto r = min_cover({{0, 1}, {1, 2}, {0, 1, 2}}, 3);
  EXPECT_EQ(r.chosen, (std::vector<std::size_t>{2}));
  EXPECT_TRUE(r.exact);
  r = min_cover({{0, 1}, {2}, {1, 2}, {0}}, 3);
  EXPECT_EQ(r.chosen, (std::vector<std::size_t>{0, 1}));
}

TEST(MaxDisjoint, PicksLargestFamily) {
  const std::vector<SiteBox> boxes{block(Site{0}, 3), block(Site{2}, 3), block(Site{4}, 3), block(Site{7}, 2)};
  bool exact = false;
  const auto chosen = max_disjoint(boxes, &exact);
  EXPECT_TRUE(exact);
  EXPECT_EQ(chosen, (std::vector<std::size_t>{0, 2, 3}));
}

TEST(AffineCorrection, AffineFieldNeedsNoCorrection) {
  LatticeField v(2);
  centred_block(2, 41).for_each([&](const Site& y) { v.set(y, 2.0 * y[0] - y[1] + 0.5); });
  const LatticeField w = affine_correction(v, Site{0, 0}, 1, 16);
  EXPECT_LE(w.sup_norm(), 1e-12);
}

TEST(AffineCorrection, FlattensQuadraticInOneDimension) {
  LatticeField v(1);
  for (std::int64_t y = -40; y <= 40; ++y) v.set(Site{y}, static_cast<double>(y * y));
  const LatticeField w = affine_correction(v, Site{0}, 1, 16);
  auto sum = [&](const Site& y) { return v(y) + w(y); };
  for (std::int64_t y = -1; y <= 1; ++y) EXPECT_LE(hessian_max_abs(sum, Site{y}), 1e-12);
  for (const Site& y : w.support())
    if (w(y) != 0.0) EXPECT_LE(std::abs(y[0]), 15);
  const FieldFn vf = [&](const Site& y) { return v(y); };
  const AffineCorrection c = make_affine_correction(vf, Site{0}, 1, 16);
  const GrowthMeasurement g = measure_growth(vf, sum, Site{0}, 16);
  EXPECT_TRUE(std::isfinite(g.factor));
  EXPECT_GE(g.factor, 1.0);
  EXPECT_EQ(c.support().hi[0] - c.support().lo[0] + 1 <= 31, true);
}

TEST(AffineCorrection, RatioTooSmallRejected) {
  LatticeField v(1);
  EXPECT_THROW(affine_correction(v, Site{0}, 2, 31), std::invalid_argument);
  EXPECT_THROW(affine_correction(v, Site{0}, 0, 16), std::invalid_argument);
}

TEST(Cutoff, EmptyHierarchyGivesTheSmoothBase) {
  const CutoffParams p = plane_params();
  const auto h = build_hierarchy({}, p);
  const Polymer u = origin_region(p);
  const CutoffFunction eta = build_cutoff(u, h);
  EXPECT_EQ(eta.correction_count(), 0u);
  const CutoffCheck chk = verify_cutoff(eta, h);
  EXPECT_TRUE(chk.ok());
  EXPECT_EQ(eta(Site{0, 0}), 0.0);
  EXPECT_EQ(eta(Site{3 * p.macro_side(), 0}), 1.0);
  const double kl = static_cast<double>(p.macro_side());
  EXPECT_LE(chk.max_hessian * kl * kl / (p.scales.lambda_mac * p.scales.lambda_mac), 1e4);
  EXPECT_GT(chk.max_hessian, 0.0);
}

TEST(Cutoff, OneIsolatedBoxInTheAnnulusGetsOneCorrection) {
  const CutoffParams p = plane_params();
  const Site idx{p.macro_side() / p.micro_side(), 0};  // centre at distance about s/2 from U
  const auto h = build_hierarchy({idx}, p);
  const CutoffFunction eta = build_cutoff(origin_region(p), h);
  EXPECT_EQ(eta.correction_count(), 1u);
  const CutoffCheck chk = verify_cutoff(eta, h);
  EXPECT_TRUE(chk.flat_on_bad);
  EXPECT_TRUE(chk.ok());
  const SiteBox bad = BoxGrid(2, p.micro_side()).sites_box(idx);
  bad.expanded(1).for_each([&](const Site& y) { EXPECT_LE(hessian_max_abs(eta, y), 1e-12); });
}

TEST(Cutoff, TypeOneBoxNextToUIsRefused) {
  const CutoffParams p = plane_params();
  const Site a{p.macro_side() / p.micro_side(), 0};
  const auto h = build_hierarchy({a, a.shifted(0, 1)}, p);
  EXPECT_FALSE(cutoff_precondition(origin_region(p), h).ok);
  EXPECT_THROW(build_cutoff(origin_region(p), h), Refused);
}

TEST(Cutoff, SmallMicroScaleRejected) {
  CutoffParams p = plane_params();
  p.scales = Scales::from_lengths(2, 3, 2415);
  EXPECT_THROW(build_cutoff(origin_region(p), build_hierarchy({}, p)), std::invalid_argument);
}

TEST(HoleFiller, ZeroField) {
  LatticeField u(2), eta(2);
  centred_block(2, 3).for_each([&](const Site& y) { eta.set(y, 0.5); });
  EXPECT_EQ(hole_filler_identity_residual(u, eta), 0.0);
}

TEST(HoleFiller, RandomPairsSatisfyTheIdentity) {
  std::mt19937_64 rng(12);
  for (int d : {1, 2, 4}) {
    for (int t = 0; t < 20; ++t) {
      const std::int64_t side = d == 4 ? 3 : 6;
      const LatticeField u = random_field(block(Site(d), side), -1, 1, rng);
      const LatticeField eta = random_field(block(Site(d), side).expanded(1), 0, 1, rng);
      const HoleFillerTerms h = hole_filler_terms(u, eta);
      EXPECT_LE(h.residual, 1e-10 * (1 + std::abs(h.lhs))) << d;
    }
  }
}

TEST(HoleFiller, FlatWeightReducesToEnergy) {
  std::mt19937_64 rng(3);
  const LatticeField u = random_field(block(Site(2), 5), -1, 1, rng);
  LatticeField eta(2);
  centred_block(2, 31).for_each([&](const Site& y) { eta.set(y, 1.0); });
  const HoleFillerTerms h = hole_filler_terms(u, eta);
  double energy = 0;
  centred_block(2, 25).for_each([&](const Site& x) { energy += hessian_sq(u, x); });
  EXPECT_NEAR(h.lhs, energy, 1e-12 * energy);
  EXPECT_NEAR(h.rhs, 0.0, 1e-12);
  EXPECT_NEAR(h.swap, 0.0, 1e-12);
  EXPECT_NEAR(h.pairing, energy, 1e-10 * energy);
  EXPECT_LE(h.residual, 1e-10);
}

TEST(AnnulusDecay, ZeroField) {
  const CutoffParams p = plane_params();
  const auto r = annulus_decay_ratio(PinnedExt::explicit_set({}), origin_region(p), p, LatticeField(2));
  EXPECT_EQ(r.outer_energy, 0.0);
  EXPECT_EQ(r.annulus_energy, 0.0);
  EXPECT_EQ(r.ratio, 0.0);
}
