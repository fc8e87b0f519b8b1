#include "membrane/cutoff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "membrane/errors.hpp"
#include "membrane/operators.hpp"
#include "membrane/philox.hpp"

namespace membrane {

double smooth_step(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / s), b = std::exp(-1.0 / (1.0 - s));
  return a / (a + b);
}

double plateau(double t, double outer) {
  const double a = std::abs(t);
  if (a <= 1.0) return 1.0;
  if (a >= outer) return 0.0;
  return 1.0 - smooth_step((a - 1.0) / (outer - 1.0));
}

namespace {

// chi_s(z) = prod_i plateau(z_i / s, 2)
double chi(const Site& z, double s) {
  double p = 1.0;
  for (int i = 0; i < z.dim() && p != 0.0; ++i) p *= plateau(static_cast<double>(z[i]) / s, 2.0);
  return p;
}

std::int64_t max_distance_to_box(const SiteBox& b, const SiteBox& target) {
  std::int64_t m = 0;
  for (int i = 0; i < b.dim(); ++i) m = std::max({m, target.lo[i] - b.lo[i], b.hi[i] - target.hi[i]});
  return m;
}

std::int64_t uniform_in(PhiloxStream& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

Site random_site(PhiloxStream& rng, const SiteBox& b) {
  Site y(b.dim());
  for (int i = 0; i < b.dim(); ++i) y[i] = uniform_in(rng, b.lo[i], b.hi[i]);
  return y;
}

}  // namespace

double AffineCorrection::weight(const Site& y) const {
  const Site z = y - center;
  const std::int64_t n_inf = linf_norm(z);
  if (n_inf <= 2 * r) return 1.0;
  if (2 * n_inf >= R) return 0.0;
  const double inner = chi(z, 2.0 * static_cast<double>(r));
  const double outer = chi(z, static_cast<double>(R) / 4.0);
  const double lr = std::log(static_cast<double>(R)), ls = std::log(static_cast<double>(r));
  const double lam = std::clamp((lr - std::log(euclidean_norm(z))) / (lr - ls), 0.0, 1.0);
  return inner + (outer - inner) * lam;
}

double AffineCorrection::taylor(const Site& y) const {
  double s = value;
  for (int i = 0; i < y.dim(); ++i)
    s += gradient[static_cast<std::size_t>(i)] * static_cast<double>(y[i] - center[i]);
  return s;
}

SiteBox AffineCorrection::support() const { return BoxSpec::cube(center, (R - 1) / 2).sites_box(); }

AffineCorrection make_affine_correction(const FieldFn& v, const Site& x, std::int64_t r, std::int64_t R) {
  if (r < 1) throw std::invalid_argument("inner radius must be at least 1");
  if (R < 16 * r) throw std::invalid_argument(fmt::format("R = {} below 16 r = {}", R, 16 * r));
  AffineCorrection c;
  c.center = x;
  c.r = r;
  c.R = R;
  c.value = v(x);
  c.gradient.resize(static_cast<std::size_t>(x.dim()));
  for (int i = 0; i < x.dim(); ++i) c.gradient[static_cast<std::size_t>(i)] = v(x.shifted(i, 1)) - c.value;
  return c;
}

LatticeField affine_correction(const LatticeField& v, const Site& x, std::int64_t r, std::int64_t R) {
  const AffineCorrection c = make_affine_correction([&v](const Site& y) { return v(y); }, x, r, R);
  LatticeField w(v.dim());
  c.support().for_each([&](const Site& y) {
    const double xi = c.weight(y);
    if (xi == 0.0) return;
    const double val = xi * (c.taylor(y) - v(y));
    if (val != 0.0) w.set(y, val);
  });
  return w;
}

GrowthMeasurement measure_growth(const FieldFn& v, const FieldFn& corrected, const Site& x, std::int64_t R,
                                 std::uint64_t full_scan_limit, std::size_t samples, std::uint64_t seed) {
  GrowthMeasurement g;
  const SiteBox q = BoxSpec::cube(x, R).sites_box();
  auto visit = [&](const Site& y) {
    g.before = std::max(g.before, hessian_max_abs(v, y));
    g.after = std::max(g.after, hessian_max_abs(corrected, y));
    ++g.sites;
  };
  if (q.volume() <= full_scan_limit) {
    q.for_each(visit);
  } else {
    g.sampled = true;
    PhiloxStream rng(seed, 0x67726f77);
    for (std::size_t k = 0; k < samples; ++k) visit(random_site(rng, q));
  }
  if (g.before == 0.0)
    g.factor = g.after == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  else
    g.factor = g.after / g.before;
  return g;
}

CutoffFunction::CutoffFunction(Polymer u, CutoffParams params) : u_(std::move(u)), params_(params) {
  for (const Site& idx : u_.boxes()) {
    u_boxes_.push_back(u_.grid().sites_box(idx));
    u_centres_.push_back(u_.grid().center(idx));
  }
}

double CutoffFunction::base(const Site& y) const {
  // prod over Q in U of (1 - chi_hat((y - x_Q) / (7/8 s))), chi_hat = 1 on
  // [-1,1]^d and 0 off [-9/7,9/7]^d; plateau tests in integers
  const std::int64_t s = params_.macro_side();
  double prod = 1.0;
  for (const Site& c : u_centres_) {
    double bump = 1.0;
    for (int i = 0; i < y.dim() && bump != 0.0; ++i) {
      const std::int64_t a8 = 8 * std::abs(y[i] - c[i]);
      if (a8 <= 7 * s) continue;
      if (a8 >= 9 * s) {
        bump = 0.0;
        break;
      }
      bump *= 1.0 - smooth_step(static_cast<double>(a8 - 7 * s) / static_cast<double>(2 * s));
    }
    prod *= 1.0 - bump;
    if (prod == 0.0) return 0.0;
  }
  return prod;
}

double CutoffFunction::operator()(const Site& y) const {
  double val = base(y);
  for (std::size_t l = 0; l < levels_.size(); ++l) {
    if (!level_bounds_[l].contains(y)) continue;
    const double v = val;
    double acc = 0.0;
    for (const auto& c : levels_[l]) {
      if (2 * linf_distance(y, c.center) >= c.R) continue;
      acc += c.weight(y) * (c.taylor(y) - v);
    }
    val = v + acc;
  }
  return val;
}

void CutoffFunction::add_level(std::vector<AffineCorrection> corrections) {
  if (corrections.empty()) return;
  SiteBox b = corrections.front().support();
  for (const auto& c : corrections) {
    const SiteBox s = c.support();
    for (int i = 0; i < b.dim(); ++i) {
      b.lo[i] = std::min(b.lo[i], s.lo[i]);
      b.hi[i] = std::max(b.hi[i], s.hi[i]);
    }
  }
  levels_.push_back(std::move(corrections));
  level_bounds_.push_back(b);
}

std::vector<AffineCorrection> CutoffFunction::corrections() const {
  std::vector<AffineCorrection> out;
  for (const auto& l : levels_) out.insert(out.end(), l.begin(), l.end());
  return out;
}

std::size_t CutoffFunction::correction_count() const {
  std::size_t n = 0;
  for (const auto& l : levels_) n += l.size();
  return n;
}

double CutoffFunction::growth_product() const {
  // corrections of one level act on disjoint boxes; the level factor is the worst one
  double p = 1.0;
  for (const auto& l : levels_) {
    double worst = 1.0;
    for (const auto& c : l) worst = std::max(worst, c.growth);
    p *= worst;
  }
  return p;
}

LatticeField CutoffFunction::restrict_to(const SiteBox& window) const {
  LatticeField f(u_.grid().dim());
  window.for_each([&](const Site& y) {
    const double v = (*this)(y);
    if (v != 0.0) f.set(y, v);
  });
  return f;
}

void CutoffFunction::write_csv(std::ostream& os, const SiteBox& window) const {
  const int d = window.dim();
  for (int i = 0; i < d; ++i) os << 'x' << i << ',';
  os << "eta\n";
  window.for_each([&](const Site& y) {
    for (int i = 0; i < d; ++i) os << y[i] << ',';
    os << fmt::format("{:.17g}\n", (*this)(y));
  });
}

bool box_covered(const SiteBox& b, const std::vector<SiteBox>& cover) {
  if (b.empty()) return true;
  const int d = b.dim();
  std::vector<SiteBox> parts;
  for (const auto& c : cover)
    if (c.intersects(b)) parts.push_back(c);
  if (parts.empty()) return false;
  // breakpoints per axis split b into cells on which coverage is constant
  std::vector<std::vector<std::int64_t>> cuts(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    auto& c = cuts[static_cast<std::size_t>(i)];
    c.push_back(b.lo[i]);
    for (const auto& p : parts) {
      if (p.lo[i] > b.lo[i]) c.push_back(p.lo[i]);
      if (p.hi[i] + 1 <= b.hi[i]) c.push_back(p.hi[i] + 1);
    }
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
  }
  SiteBox cells{Site(d), Site(d)};
  for (int i = 0; i < d; ++i) cells.hi[i] = static_cast<std::int64_t>(cuts[static_cast<std::size_t>(i)].size()) - 1;
  bool all = true;
  cells.for_each([&](const Site& cell) {
    if (!all) return;
    Site y(d);
    for (int i = 0; i < d; ++i) y[i] = cuts[static_cast<std::size_t>(i)][static_cast<std::size_t>(cell[i])];
    bool hit = false;
    for (const auto& p : parts) hit = hit || p.contains(y);
    all = hit;
  });
  return all;
}

namespace {

bool meets_annulus(const SiteBox& b, const Polymer& u, const std::vector<SiteBox>& u_boxes, const Annulus& v) {
  if (u.gap(b) > v.outer) return false;
  if (v.inner < 0) return true;
  std::vector<SiteBox> grown;
  for (const auto& q : u_boxes) grown.push_back(q.expanded(v.inner));
  return !box_covered(b, grown);
}

void check_region(const Polymer& u, const CutoffParams& p) {
  if (u.empty()) throw std::invalid_argument("U is empty");
  if (!(u.grid() == BoxGrid(p.dim(), p.macro_side())))
    throw std::invalid_argument("U must be a polymer of the K L lambda_mac grid");
  if (p.scales.lambda_mic < 4) throw std::invalid_argument("lambda_mic < 4: plateau regions collide");
}

}  // namespace

CutoffPrecondition cutoff_precondition(const Polymer& u, const BadBoxHierarchy& h) {
  CutoffPrecondition pre;
  const std::int64_t s = h.params.macro_side();
  for (const Site& idx : type_one_boxes(h)) {
    if (u.boxes().count(idx)) continue;
    if (u.gap(u.grid().sites_box(idx)) <= s) pre.offending.push_back(idx);
  }
  pre.ok = pre.offending.empty();
  return pre;
}

CutoffFunction base_cutoff(const Polymer& u, const CutoffParams& params) {
  params.validate();
  check_region(u, params);
  return CutoffFunction(u, params);
}

CutoffFunction build_cutoff(const Polymer& u, const BadBoxHierarchy& h, const CutoffOptions& opts) {
  const CutoffParams& p = h.params;
  p.validate();
  check_region(u, p);
  const CutoffPrecondition pre = cutoff_precondition(u, h);
  if (!pre.ok)
    throw Refused(fmt::format("{} type-I bad macro box(es) touch the annulus, first at index {}", pre.offending.size(),
                              pre.offending.front().str()));
  CutoffFunction eta(u, p);
  std::vector<SiteBox> u_boxes;
  for (const Site& idx : u.boxes()) u_boxes.push_back(u.grid().sites_box(idx));
  const std::int64_t s = p.macro_side();
  Annulus v{3 * s / 8 - 1, 5 * s / 8 + 1};
  for (int j = h.j_star; j >= 1; --j) {
    const HierarchyLevel& lv = h.level(j - 1);
    std::vector<SiteBox> ys;
    std::vector<Site> centres;
    for (std::size_t k = 0; k < lv.boxes.size(); ++k) {
      if (lv.clustered[k]) continue;
      if (!meets_annulus(lv.boxes[k].sites.expanded(1), u, u_boxes, v)) continue;
      ys.push_back(lv.boxes[k].sites);
      centres.push_back(lv.boxes[k].center);
    }
    const std::int64_t lp = p.ell(j - 1), lj = p.ell(j);
    const std::int64_t r = (3 * lp + 1) / 2 + 1;
    const std::int64_t R = (2 * lp + lj) / 4;
    if (!ys.empty() && R < 16 * r)
      throw Refused(fmt::format("level {}: R = {} below 16 r = {}; M is too small for the affine correction", j - 1,
                                R, 16 * r));
    std::vector<AffineCorrection> level;
    const FieldFn current = [&eta](const Site& y) { return eta(y); };
    for (std::size_t k : max_disjoint(ys)) {
      AffineCorrection c = make_affine_correction(current, centres[k], r, R);
      c.level = j - 1;
      const FieldFn corrected = [&eta, &c](const Site& y) {
        const double base = eta(y);
        return base + c.weight(y) * (c.taylor(y) - base);
      };
      const GrowthMeasurement g =
          measure_growth(current, corrected, c.center, R, opts.full_scan_limit, opts.samples, opts.seed + k);
      c.growth = g.factor;
      c.growth_sampled = g.sampled;
      level.push_back(std::move(c));
    }
    eta.add_level(std::move(level));
    v.inner = std::max<std::int64_t>(-1, v.inner - lj);
    v.outer += lj;
  }
  return eta;
}

CutoffCheck verify_cutoff(const CutoffFunction& eta, const BadBoxHierarchy& h, const CutoffOptions& opts,
                          double tol) {
  CutoffCheck res;
  const CutoffParams& p = eta.params();
  const Polymer& u = eta.region();
  const std::int64_t s = p.macro_side(), m2 = 2 * p.micro_side();
  const std::int64_t zero_r = m2, one_r = s - m2;
  std::vector<SiteBox> u_boxes;
  for (const Site& idx : u.boxes()) u_boxes.push_back(u.grid().sites_box(idx));

  for (const auto& c : eta.corrections()) {
    const SiteBox supp = c.support();
    if (u.gap(supp) <= zero_r) res.supports_ok = false;
    std::int64_t far = std::numeric_limits<std::int64_t>::max();
    for (const auto& q : u_boxes) far = std::min(far, max_distance_to_box(supp, q));
    if (far > one_r) res.supports_ok = false;
  }

  auto classify = [&](const Site& y) {
    const std::int64_t dist = u.distance(y);
    const double val = eta(y);
    if (dist <= zero_r) {
      res.max_abs_inside = std::max(res.max_abs_inside, std::abs(val));
    } else if (dist > one_r) {
      res.max_dev_outside = std::max(res.max_dev_outside, std::abs(val - 1.0));
    }
    ++res.points_checked;
  };
  const SiteBox window = u.bounds().expanded(s + 2);
  if (window.volume() <= opts.full_scan_limit) {
    res.exhaustive = true;
    window.for_each([&](const Site& y) {
      classify(y);
      res.max_hessian = std::max(res.max_hessian, hessian_max_abs(eta, y));
      res.max_hessian_base =
          std::max(res.max_hessian_base, hessian_max_abs([&eta](const Site& z) { return eta.base(z); }, y));
    });
  } else {
    PhiloxStream rng(opts.seed, 0x76657269);
    for (std::size_t k = 0; k < opts.samples; ++k) {
      const Site y = random_site(rng, window);
      classify(y);
      res.max_hessian = std::max(res.max_hessian, hessian_max_abs(eta, y));
      res.max_hessian_base =
          std::max(res.max_hessian_base, hessian_max_abs([&eta](const Site& z) { return eta.base(z); }, y));
    }
    // sites at fixed distance from one face of a U box, around both plateau edges
    const int d = window.dim();
    for (std::int64_t t : {zero_r - 1, zero_r, one_r, one_r + 1, one_r + 2}) {
      for (std::size_t k = 0; k < opts.samples / 8; ++k) {
        const SiteBox& q = u_boxes[static_cast<std::size_t>(uniform_in(rng, 0, static_cast<std::int64_t>(u_boxes.size()) - 1))];
        Site y = random_site(rng, q.expanded(t));
        const int axis = static_cast<int>(uniform_in(rng, 0, d - 1));
        y[axis] = uniform_in(rng, 0, 1) ? q.hi[axis] + t : q.lo[axis] - t;
        classify(y);
      }
    }
  }
  res.zero_inside = res.max_abs_inside <= tol;
  res.one_outside = res.max_dev_outside <= tol;

  for (const HBox& b : h.level(0).boxes)
    b.sites.expanded(1).for_each([&](const Site& x) {
      res.max_hessian_on_bad = std::max(res.max_hessian_on_bad, hessian_max_abs(eta, x));
    });
  res.flat_on_bad = res.max_hessian_on_bad <= tol;
  return res;
}

}  // namespace membrane
