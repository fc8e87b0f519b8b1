#include "membrane/hole_filler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "membrane/errors.hpp"
#include "membrane/operators.hpp"

namespace membrane {

namespace {

// Every site where a term of the identity can be nonzero:
// supp u + {0, +-e_i, -e_i + e_j}.
std::vector<Site> footprint(const LatticeField& u) {
  const int d = u.dim();
  std::unordered_set<Site, SiteHash> out;
  u.for_each([&](const Site& x, double) {
    out.insert(x);
    for (int i = 0; i < d; ++i) {
      out.insert(x.shifted(i, -1));
      out.insert(x.shifted(i, 1));
      for (int j = 0; j < d; ++j)
        if (i != j) out.insert(x.shifted(i, -1).shifted(j, 1));
    }
  });
  std::vector<Site> v(out.begin(), out.end());
  std::sort(v.begin(), v.end());
  return v;
}

// D_j D_{-j} eta summed over j.
double lap(const std::function<double(const Site&)>& eta, const Site& x) { return laplacian_apply(eta, x); }

}  // namespace

HoleFillerTerms hole_filler_terms(const LatticeField& u, const std::function<double(const Site&)>& eta) {
  const int d = u.dim();
  const auto uf = [&u](const Site& y) { return u(y); };
  HoleFillerTerms t;
  for (const Site& x : footprint(u)) {
    const double ux = u(x);
    const double lap_x = lap(eta, x);
    for (int i = 0; i < d; ++i) {
      const double di = forward_diff(uf, i, x);
      if (di != 0.0) t.rhs += 0.5 * di * di * (lap(eta, x.shifted(i, 1)) + lap_x);
      for (int j = 0; j < d; ++j) {
        const double h = mixed_diff(uf, i, j, x);
        if (h == 0.0) continue;
        const double corner = eta(x.shifted(i, 1).shifted(j, -1));
        t.lhs += h * h * corner;
        t.swap += 0.5 * h * h * (eta(x.shifted(i, 1)) - 2.0 * corner + eta(x.shifted(j, -1)));
        if (ux != 0.0) t.rhs -= ux * h * mixed_diff(eta, i, j, x);
      }
    }
    if (ux != 0.0) t.pairing += ux * eta(x) * bilaplacian_apply(uf, x);
  }
  t.residual = std::abs(t.lhs - t.rhs + t.swap - t.pairing);
  t.raw_residual = std::abs(t.lhs - t.rhs);
  return t;
}

HoleFillerTerms hole_filler_terms(const LatticeField& u, const LatticeField& eta) {
  return hole_filler_terms(u, [&eta](const Site& y) { return eta(y); });
}

double hole_filler_identity_residual(const LatticeField& u, const LatticeField& eta) {
  return hole_filler_terms(u, eta).residual;
}

namespace {

template <class Bin>
void energy_by_distance(const LatticeField& u, const Polymer& region, Bin&& bin) {
  const auto uf = [&u](const Site& y) { return u(y); };
  for (const Site& x : footprint(u)) {
    const double e = hessian_sq(uf, x);
    if (e != 0.0) bin(region.distance(x), e);
  }
}

}  // namespace

AnnulusDecay annulus_decay_ratio(const PinnedExt& pinned, const Polymer& u_region, const CutoffParams& params,
                                 const LatticeField& u, double tol) {
  if (u_region.empty()) throw std::invalid_argument("U is empty");
  const auto uf = [&u](const Site& y) { return u(y); };
  AnnulusDecay out;
  double umax = 0, bmax = 0, worst = 0;
  u.for_each([&](const Site& x, double v) {
    if (v == 0.0) return;
    const bool in_u = u_region.contains_site(x);
    if (!in_u && pinned.contains(x)) throw std::invalid_argument("u does not vanish at pinned site " + x.str());
    const double b = bilaplacian_apply(uf, x);
    umax = std::max(umax, std::abs(v));
    bmax = std::max(bmax, std::abs(b));
    if (!in_u) worst = std::max(worst, std::abs(v * b));
  });
  const double scale = umax * bmax;
  out.biharmonic_residual = scale == 0.0 ? 0.0 : worst / scale;
  if (out.biharmonic_residual > tol) throw NumericalFailure("u is not biharmonic off U");
  const std::int64_t s = params.macro_side();
  energy_by_distance(u, u_region, [&](std::int64_t dist, double e) {
    if (dist > s)
      out.outer_energy += e;
    else if (dist > 0)
      out.annulus_energy += e;
  });
  out.ratio = out.annulus_energy == 0.0 ? (out.outer_energy == 0.0 ? 0.0 : INFINITY)
                                        : out.outer_energy / out.annulus_energy;
  return out;
}

std::vector<double> energy_beyond_layers(const LatticeField& u, const Polymer& u_region, const CutoffParams& params,
                                         int layers) {
  if (layers < 0) throw std::invalid_argument("negative layer count");
  const std::int64_t s = params.macro_side();
  std::vector<double> out(static_cast<std::size_t>(layers) + 1, 0.0);
  energy_by_distance(u, u_region, [&](std::int64_t dist, double e) {
    for (int m = 0; m <= layers; ++m)
      if (dist > m * s) out[static_cast<std::size_t>(m)] += e;
  });
  return out;
}

}  // namespace membrane
