#include "membrane/hardy_rellich.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "membrane/operators.hpp"
#include "membrane/philox.hpp"

namespace membrane {

namespace {

std::vector<std::vector<double>> simplex(int d) {
  if (d == 1) return {{1.0}, {-1.0}};
  const auto lower = simplex(d - 1);
  const double dd = d;
  const double s = std::sqrt(1.0 - 1.0 / (dd * dd));
  std::vector<std::vector<double>> out;
  std::vector<double> first(static_cast<std::size_t>(d), 0.0);
  first[0] = 1.0;
  out.push_back(first);
  for (const auto& v : lower) {
    std::vector<double> t{-1.0 / dd};
    for (double c : v) t.push_back(s * c);
    out.push_back(t);
  }
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

bool ConeSet::in_cone(std::size_t i, const Site& y) const {
  double n2 = 0, p = 0;
  for (int k = 0; k < dim; ++k) {
    const auto c = static_cast<double>(y[k]);
    n2 += c * c;
    p += c * theta[i][static_cast<std::size_t>(k)];
  }
  if (n2 == 0) return false;
  // compare without dividing; p >= cos_kappa |y|
  return p >= 0 && p * p >= cos_kappa * cos_kappa * n2 * (1.0 - 1e-13);
}

ConeSet simplex_directions(int d) {
  check_dim(d);
  ConeSet c;
  c.dim = d;
  c.theta = simplex(d);
  // Two caps of half-angle kappa around directions at angle alpha contain
  // points at angle alpha - 2 kappa; all cross dots are negative while that
  // angle exceeds pi/2.
  const double alpha = std::acos(std::max(-1.0, dot(c.theta[0], c.theta[1])));
  auto ok = [alpha](double kappa) { return std::cos(std::max(0.0, alpha - 2.0 * kappa)) < 0.0; };
  double lo = 0.0, hi = std::numbers::pi / 2;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  // the supremum itself puts boundary rays at a right angle; use half of it
  c.kappa = 0.5 * lo;
  c.cos_kappa = std::cos(c.kappa);
  return c;
}

double max_cross_cone_dot(const ConeSet& cones, std::size_t samples_per_cone, std::uint64_t seed) {
  PhiloxStream rng(seed, 17);
  const auto d = static_cast<std::size_t>(cones.dim);
  std::vector<std::vector<std::vector<double>>> pts(cones.count());
  for (std::size_t i = 0; i < cones.count(); ++i) {
    const auto& t = cones.theta[i];
    for (std::size_t s = 0; s < samples_per_cone; ++s) {
      if (d == 1) {
        pts[i].push_back(t);
        break;
      }
      // random unit vector orthogonal to theta_i, tilted by an angle in [0, kappa]
      std::vector<double> w(d);
      for (auto& c : w) c = rng.normal();
      const double proj = dot(w, t);
      double n = 0;
      for (std::size_t k = 0; k < d; ++k) {
        w[k] -= proj * t[k];
        n += w[k] * w[k];
      }
      n = std::sqrt(n);
      const double phi = s % 4 == 0 ? cones.kappa : cones.kappa * rng.uniform();
      std::vector<double> p(d);
      for (std::size_t k = 0; k < d; ++k) p[k] = std::cos(phi) * t[k] + std::sin(phi) * w[k] / n;
      pts[i].push_back(p);
    }
  }
  double worst = -2.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      for (const auto& a : pts[i])
        for (const auto& b : pts[j]) worst = std::max(worst, dot(a, b));
  return worst;
}

PinnedExt PinnedExt::from_box(const SiteBox& lambda, const std::vector<Site>& pinned) {
  PinnedExt p;
  p.kind_ = Kind::box;
  p.dim_ = lambda.dim();
  p.box_ = lambda;
  p.pinned_.insert(pinned.begin(), pinned.end());
  return p;
}

PinnedExt PinnedExt::from_sites(const std::vector<Site>& lambda, const std::vector<Site>& pinned) {
  if (lambda.empty()) throw std::invalid_argument("empty volume");
  PinnedExt p;
  p.kind_ = Kind::sites;
  p.dim_ = lambda.front().dim();
  p.lambda_ = std::make_shared<const std::unordered_set<Site, SiteHash>>(lambda.begin(), lambda.end());
  p.pinned_.insert(pinned.begin(), pinned.end());
  return p;
}

PinnedExt PinnedExt::explicit_set(const std::vector<Site>& set) {
  PinnedExt p;
  p.kind_ = Kind::explicit_set;
  p.dim_ = set.empty() ? 0 : set.front().dim();
  p.pinned_.insert(set.begin(), set.end());
  return p;
}

bool PinnedExt::contains(const Site& y) const {
  switch (kind_) {
    case Kind::box:
      if (!box_.contains(y)) return true;
      break;
    case Kind::sites:
      if (!lambda_->count(y)) return true;
      break;
    case Kind::explicit_set:
      break;
  }
  return pinned_.count(y) != 0;
}

PinnedExt PinnedExt::with_pinned(const std::vector<Site>& more) const {
  PinnedExt p = *this;
  p.pinned_.insert(more.begin(), more.end());
  return p;
}

ConeOffsets::ConeOffsets(const ConeSet& cones, std::int64_t radius) : cones_(cones), radius_(radius) {
  if (radius < 0) throw std::invalid_argument("negative cutoff");
  offsets_.resize(cones.count());
  const int d = cones.dim;
  Site lo(d), hi(d);
  for (int i = 0; i < d; ++i) {
    lo[i] = -radius;
    hi[i] = radius;
  }
  SiteBox{lo, hi}.for_each([&](const Site& y) {
    if (l1_norm(y) > radius) return;
    for (std::size_t i = 0; i < cones.count(); ++i)
      if (cones.in_cone(i, y)) offsets_[i].push_back(y);
  });
  for (auto& v : offsets_)
    std::stable_sort(v.begin(), v.end(), [](const Site& a, const Site& b) { return l1_norm(a) < l1_norm(b); });
}

ConeDistances cone_distances(const Site& x, const PinnedExt& pinned, const ConeOffsets& offsets) {
  ConeDistances out;
  out.per_cone.assign(offsets.cones().count(), kInfiniteDistance);
  std::int64_t worst = 0;
  for (std::size_t i = 0; i < offsets.cones().count(); ++i) {
    for (const Site& y : offsets.offsets(i))
      if (pinned.contains(x + y)) {
        out.per_cone[i] = l1_norm(y);
        break;
      }
    worst = std::max(worst, out.per_cone[i]);
  }
  out.d_star = worst;
  return out;
}

ConeDistances cone_distances(const Site& x, const PinnedExt& pinned, const ConeSet& cones, std::int64_t cutoff) {
  return cone_distances(x, pinned, ConeOffsets(cones, cutoff));
}

bool d_star_within(const Site& x, const PinnedExt& pinned, const ConeOffsets& offsets) {
  for (std::size_t i = 0; i < offsets.cones().count(); ++i) {
    bool found = false;
    for (const Site& y : offsets.offsets(i))
      if (pinned.contains(x + y)) {
        found = true;
        break;
      }
    if (!found) return false;
  }
  return true;
}

namespace {

// Sites where D_i D_{-j} u can be nonzero: supp u + {0, -e_i, e_j, e_j - e_i}.
std::unordered_set<Site, SiteHash> hessian_footprint(const LatticeField& u) {
  const int d = u.dim();
  std::unordered_set<Site, SiteHash> out;
  out.reserve(u.support_size() * static_cast<std::size_t>(1 + 2 * d + d * d));
  u.for_each([&](const Site& x, double) {
    out.insert(x);
    for (int i = 0; i < d; ++i) {
      out.insert(x.shifted(i, -1));
      out.insert(x.shifted(i, 1));
      for (int j = 0; j < d; ++j)
        if (i != j) out.insert(x.shifted(i, -1).shifted(j, 1));
    }
  });
  return out;
}

std::int64_t linf_distance_to(const Site& x, const std::vector<SiteBox>& v) {
  std::int64_t best = kInfiniteDistance;
  for (const auto& b : v) best = std::min(best, linf_distance(x, b));
  return best;
}

}  // namespace

RatioResult local_poincare_ratio(const LatticeField& u, const PinnedExt& pinned, const std::vector<SiteBox>& v,
                                 std::int64_t r, const ConeOffsets& offsets) {
  if (r < 2) throw std::invalid_argument("R must be at least 2");
  if (offsets.radius() < r) throw std::invalid_argument("cone offsets shorter than R");
  const int d = u.dim();
  u.for_each([&](const Site& x, double val) {
    if (val != 0.0 && pinned.contains(x)) throw std::invalid_argument("u does not vanish on the pinned set at " + x.str());
  });
  RatioResult res;
  // lhs: only sites of V in the support of u contribute
  u.for_each([&](const Site& x, double val) {
    if (val == 0.0 || linf_distance_to(x, v) != 0) return;
    std::int64_t worst = 0;
    for (std::size_t i = 0; i < offsets.cones().count() && worst <= r; ++i) {
      std::int64_t di = kInfiniteDistance;
      for (const Site& y : offsets.offsets(i)) {
        if (l1_norm(y) > r) break;
        if (pinned.contains(x + y)) {
          di = l1_norm(y);
          break;
        }
      }
      worst = std::max(worst, di);
    }
    if (worst <= r) res.lhs += val * val;
  });
  double energy = 0;
  for (const Site& x : hessian_footprint(u))
    if (linf_distance_to(x, v) <= r) energy += hessian_sq(u, x);
  const double rd = std::pow(static_cast<double>(r), d);
  res.rhs = rd * (1.0 + (d == 4 ? std::log(static_cast<double>(r)) : 0.0)) * energy;
  res.ratio = res.lhs == 0.0 ? 0.0 : res.lhs / res.rhs;
  return res;
}

std::int64_t interpolation_min_side(int d) {
  // 12 (sqrt d)^{d-1} sqrt d = 12 d^{d/2}
  const double m = 12.0 * std::pow(static_cast<double>(d), 0.5 * d);
  return static_cast<std::int64_t>(std::ceil(m - 1e-9));
}

RatioResult interpolation_ratio(const LatticeField& u, const BoxSpec& q, const std::vector<Site>& b) {
  const std::int64_t side = q.side();
  // Q_{R/2} with even R rounds up to R+1 sites per axis
  if (2.0 * q.half_diameter() != static_cast<double>(side)) throw std::invalid_argument("R must be odd");
  if (side < interpolation_min_side(q.dim())) throw std::invalid_argument("R below 12 d^{d/2}");
  std::unordered_set<Site, SiteHash> bset(b.begin(), b.end());
  for (const Site& y : bset)
    if (!q.contains(y)) throw std::invalid_argument("B is not contained in Q");
  if (2 * bset.size() < q.volume()) throw std::invalid_argument("|B| < |Q|/2");
  double grad = 0, hess = 0, mass = 0;
  q.sites_box().for_each([&](const Site& x) {
    grad += gradient_sq(u, x);
    hess += hessian_sq(u, x);
    if (bset.count(x)) {
      const double ux = u(x);
      mass += ux * ux;
    }
  });
  const auto rr = static_cast<double>(side);
  RatioResult res;
  res.lhs = grad;
  res.rhs = rr * rr * hess + mass / (rr * rr);
  res.ratio = res.lhs == 0.0 ? 0.0 : res.lhs / res.rhs;
  return res;
}

}  // namespace membrane
