#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "membrane/box.hpp"
#include "membrane/lattice_field.hpp"
#include "membrane/operators.hpp"
#include "membrane/philox.hpp"
#include "membrane/scales.hpp"

using namespace membrane;

namespace {

LatticeField indicator(const Site& y) {
  LatticeField u(y.dim());
  u.set(y, 1.0);
  return u;
}

LatticeField affine_on(const SiteBox& b, const std::vector<double>& a, double c) {
  LatticeField u(b.dim());
  b.for_each([&](const Site& y) {
    double v = c;
    for (int i = 0; i < y.dim(); ++i) v += a[static_cast<std::size_t>(i)] * static_cast<double>(y[i]);
    u.set(y, v);
  });
  return u;
}

}  // namespace

TEST(ForwardDiff, ZeroField) {
  LatticeField u(3);
  EXPECT_EQ(forward_diff(u, 1, Site{4, -2, 7}), 0.0);
}

TEST(ForwardDiff, IndicatorAtOrigin) {
  const LatticeField u = indicator(Site{0});
  EXPECT_EQ(forward_diff(u, 0, Site{0}), -1.0);
  EXPECT_EQ(forward_diff(u, 0, Site{-1}), 1.0);
}

TEST(ForwardDiff, AffineInterior) {
  const std::vector<double> a{0.5, -2.0, 3.25};
  const LatticeField u = affine_on(centred_block(3, 9), a, 1.5);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(forward_diff(u, i, Site{1, 0, -1}), a[static_cast<std::size_t>(i)], 1e-12);
}

TEST(ForwardDiff, AxisOutOfRange) {
  LatticeField u(2);
  EXPECT_THROW(forward_diff(u, 2, Site{0, 0}), std::out_of_range);
  EXPECT_THROW(forward_diff(u, -1, Site{0, 0}), std::out_of_range);
}

TEST(Bilaplacian, OneDimensionalStencil) {
  const LatticeField u = indicator(Site{0});
  const double expected[] = {1, -4, 6, -4, 1};
  for (int k = -2; k <= 2; ++k) EXPECT_EQ(bilaplacian_apply(u, Site{k}), expected[k + 2]) << k;
  EXPECT_EQ(bilaplacian_apply(u, Site{3}), 0.0);
}

TEST(Bilaplacian, ConstantsAndAffineInterior) {
  const SiteBox b = centred_block(2, 11);
  const LatticeField c = affine_on(b, {0, 0}, 2.5);
  const LatticeField a = affine_on(b, {1.25, -0.75}, 0.5);
  for (const Site& x : centred_block(2, 5).sites()) {
    EXPECT_NEAR(bilaplacian_apply(c, x), 0.0, 1e-12);
    EXPECT_NEAR(bilaplacian_apply(a, x), 0.0, 1e-12);
  }
}

TEST(Bilaplacian, StencilCentreAndSymmetry) {
  for (int d : {1, 2, 3, 4, 5}) {
    const auto st = bilaplacian_stencil(d);
    double centre = 0, total = 0;
    for (const auto& e : st) {
      if (e.offset == Site(d)) centre = e.coeff;
      total += e.coeff;
    }
    EXPECT_EQ(centre, 4.0 * d * d + 2.0 * d) << d;
    EXPECT_NEAR(total, 0.0, 1e-12);
  }
  // bilap(delta_y)(x) == bilap(delta_x)(y)
  const Site x{0, 0, 0}, y{1, -1, 0};
  EXPECT_EQ(bilaplacian_apply(indicator(y), x), bilaplacian_apply(indicator(x), y));
}

TEST(Bilaplacian, StencilMatchesOperator) {
  const int d = 3;
  const LatticeField u = indicator(Site(d));
  for (const auto& e : bilaplacian_stencil(d)) EXPECT_EQ(bilaplacian_apply(u, e.offset), e.coeff);
}

TEST(SummationByParts, RandomFields) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int d : {1, 2, 3}) {
    LatticeField u(d), v(d);
    centred_block(d, 5).for_each([&](const Site& y) { u.set(y, U(rng)); });
    block(Site(d), 4).for_each([&](const Site& y) { v.set(y, U(rng)); });
    for (int i = 0; i < d; ++i) {
      double lhs = 0, rhs = 0;
      centred_block(d, 11).for_each([&](const Site& x) {
        lhs += forward_diff(u, i, x) * v(x);
        rhs -= u(x) * backward_diff(v, i, x);
      });
      EXPECT_NEAR(lhs, rhs, 1e-12);
    }
  }
}

TEST(Scales, FiveDimensionalExample) {
  const Scales s = scales_from_epsilon(5, 1e-5);
  EXPECT_EQ(s.lambda_mic, 11);
  EXPECT_EQ(s.lambda_mac, 33);
  EXPECT_FALSE(s.extrapolated);
}

TEST(Scales, FourDimensionalExample) {
  const Scales s = scales_from_epsilon(4, std::exp(-16.0));
  EXPECT_EQ(s.lambda_mic, 79);
  EXPECT_EQ(s.lambda_mac % s.lambda_mic, 0);
  EXPECT_EQ(s.lambda_mac % 2, 1);
  EXPECT_GE(static_cast<double>(s.lambda_mac), macro_base(4, std::exp(-16.0)));
}

TEST(Scales, MonotoneInEpsilonAndInvariants) {
  for (int d : {2, 4, 5, 6}) {
    std::int64_t mic = 0;
    double mic_base = 0, mac_base = 0;
    for (double e = 0.5; e > 1e-12; e /= 3) {
      const Scales s = scales_from_epsilon(d, e);
      EXPECT_GE(s.lambda_mic, mic);
      EXPECT_GE(micro_base(d, e), mic_base);
      EXPECT_GE(macro_base(d, e), mac_base);
      EXPECT_EQ(s.lambda_mic % 2, 1);
      EXPECT_EQ(s.lambda_mac % s.lambda_mic, 0);
      EXPECT_EQ((s.lambda_mac / s.lambda_mic) % 2, 1);
      EXPECT_LE(s.lambda_mic, s.lambda_mac);
      const double off = static_cast<double>(s.lambda_mic) - micro_base(d, e);
      EXPECT_GE(off, 0);
      EXPECT_LT(off, 2);
      // smallest odd multiple of lambda_mic reaching the base
      EXPECT_GE(static_cast<double>(s.lambda_mac), macro_base(d, e));
      if (s.lambda_mac > s.lambda_mic)
        EXPECT_LT(static_cast<double>(s.lambda_mac - 2 * s.lambda_mic), macro_base(d, e));
      mic = s.lambda_mic;
      mic_base = micro_base(d, e);
      mac_base = macro_base(d, e);
    }
  }
  EXPECT_TRUE(scales_from_epsilon(2, 0.01).extrapolated);
}

// Rounding to odd multiples makes lambda_mac non-monotone: in d = 4 around
// eps = 0.024, lambda_mic = 3 gives lambda_mac = 9, then lambda_mic jumps to 5
// while the macro base is still below 5, so lambda_mac drops to 5.
TEST(Scales, MacroScaleCanDropWhenMicroScaleJumps) {
  bool dropped = false;
  std::int64_t prev = 0;
  for (double e = 0.5; e > 1e-6; e *= 0.99) {
    const auto mac = scales_from_epsilon(4, e).lambda_mac;
    dropped = dropped || mac < prev;
    prev = mac;
  }
  EXPECT_TRUE(dropped);
}

TEST(Scales, RejectsEpsilonOutsideUnitInterval) {
  EXPECT_THROW(scales_from_epsilon(4, 0.0), std::invalid_argument);
  EXPECT_THROW(scales_from_epsilon(4, 1.0), std::invalid_argument);
  EXPECT_THROW(scales_from_epsilon(4, -1.0), std::invalid_argument);
}

TEST(Polymer, SingleBoxIsOneComponent) {
  Polymer p(BoxGrid(2, 3));
  p.insert(Site{0, 0});
  EXPECT_EQ(p.components().size(), 1u);
}

TEST(Polymer, FaceNeighboursTouch) {
  const BoxGrid g(2, 3);
  Polymer a(g), b(g);
  a.insert(Site{0, 0});
  b.insert(Site{1, 0});
  EXPECT_TRUE(touch(a, b));
  Polymer u(g, {Site{0, 0}, Site{1, 0}});
  EXPECT_TRUE(u.connected());
}

TEST(Polymer, ExpansionBridgesOneBoxGap) {
  const BoxGrid g(2, 3);
  Polymer p(g, {Site{0, 0}, Site{2, 0}});
  EXPECT_EQ(p.components().size(), 2u);
  Polymer a(g, {Site{0, 0}}), b(g, {Site{2, 0}});
  EXPECT_FALSE(touch(a, b));
  const Polymer e = p.expanded(1);
  EXPECT_TRUE(e.connected());
  EXPECT_TRUE(e.boxes().count(Site{1, 0}));
}

TEST(Polymer, MixedGridsRejected) {
  Polymer a(BoxGrid(2, 3), {Site{0, 0}}), b(BoxGrid(2, 5), {Site{1, 0}});
  EXPECT_THROW(touch(a, b), std::invalid_argument);
}

TEST(BoxSpec, RationalHalfDiameter) {
  const BoxSpec q = BoxSpec::of_side(Site{0, 0}, 5);
  EXPECT_EQ(q.radius(), 2);
  EXPECT_EQ(q.volume(), 25u);
  EXPECT_TRUE(q.contains(Site{2, -2}));
  EXPECT_FALSE(q.contains(Site{3, 0}));
}

// Known-answer vectors of the Philox4x32-10 reference implementation.
TEST(Philox, KnownAnswers) {
  using P = Philox4x32;
  EXPECT_EQ(P::generate({0, 0, 0, 0}, {0, 0}), (P::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(P::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
            (P::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(P::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
            (P::Counter{0xd16cfe09u, 0x94fdcceb, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, StreamsAreDeterministicAndDistinct) {
  PhiloxStream a(5, 1), b(5, 1), c(5, 2);
  bool differ = false;
  for (int k = 0; k < 64; ++k) {
    const auto x = a(), y = b(), z = c();
    EXPECT_EQ(x, y);
    differ = differ || x != z;
  }
  EXPECT_TRUE(differ);
}
