#include "membrane/box.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace membrane {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

// Cartesian product of per-axis integer ranges, in lexicographic order.
std::vector<Site> product(const std::vector<std::int64_t>& lo, const std::vector<std::int64_t>& hi) {
  const int d = static_cast<int>(lo.size());
  for (int i = 0; i < d; ++i)
    if (lo[static_cast<std::size_t>(i)] > hi[static_cast<std::size_t>(i)]) return {};
  SiteBox b{Site(d), Site(d)};
  for (int i = 0; i < d; ++i) {
    b.lo[i] = lo[static_cast<std::size_t>(i)];
    b.hi[i] = hi[static_cast<std::size_t>(i)];
  }
  return b.sites();
}

}  // namespace

bool SiteBox::empty() const {
  for (int i = 0; i < dim(); ++i)
    if (lo[i] > hi[i]) return true;
  return false;
}

bool SiteBox::contains(const Site& y) const {
  for (int i = 0; i < dim(); ++i)
    if (y[i] < lo[i] || y[i] > hi[i]) return false;
  return true;
}

bool SiteBox::contains(const SiteBox& b) const {
  if (b.empty()) return true;
  for (int i = 0; i < dim(); ++i)
    if (b.lo[i] < lo[i] || b.hi[i] > hi[i]) return false;
  return true;
}

bool SiteBox::intersects(const SiteBox& b) const {
  if (empty() || b.empty()) return false;
  for (int i = 0; i < dim(); ++i)
    if (b.hi[i] < lo[i] || b.lo[i] > hi[i]) return false;
  return true;
}

std::uint64_t SiteBox::volume() const {
  if (empty()) return 0;
  std::uint64_t v = 1;
  for (int i = 0; i < dim(); ++i) v *= static_cast<std::uint64_t>(hi[i] - lo[i] + 1);
  return v;
}

SiteBox SiteBox::expanded(std::int64_t r) const {
  SiteBox b = *this;
  for (int i = 0; i < dim(); ++i) {
    b.lo[i] -= r;
    b.hi[i] += r;
  }
  return b;
}

std::vector<Site> SiteBox::sites() const {
  std::vector<Site> out;
  out.reserve(static_cast<std::size_t>(volume()));
  for_each([&](const Site& y) { out.push_back(y); });
  return out;
}

SiteBox block(const Site& lo, std::int64_t side) {
  if (side < 1) throw std::invalid_argument("block side must be positive");
  SiteBox b{lo, lo};
  for (int i = 0; i < lo.dim(); ++i) b.hi[i] = lo[i] + side - 1;
  return b;
}

SiteBox centred_block(int dim, std::int64_t side) {
  Site lo(dim);
  for (int i = 0; i < dim; ++i) lo[i] = -((side - 1) / 2);
  return block(lo, side);
}

std::int64_t linf_gap(const SiteBox& a, const SiteBox& b) {
  std::int64_t g = 0;
  for (int i = 0; i < a.dim(); ++i) {
    g = std::max(g, b.lo[i] - a.hi[i]);
    g = std::max(g, a.lo[i] - b.hi[i]);
  }
  return g;
}

std::int64_t linf_distance(const Site& y, const SiteBox& b) {
  std::int64_t g = 0;
  for (int i = 0; i < y.dim(); ++i) {
    g = std::max(g, b.lo[i] - y[i]);
    g = std::max(g, y[i] - b.hi[i]);
  }
  return g;
}

BoxSpec::BoxSpec(Site center, std::int64_t half_num, std::int64_t half_den)
    : center_(std::move(center)), num_(half_num), den_(half_den) {
  if (half_den <= 0 || half_num < 0) throw std::invalid_argument("half-diameter must be a nonnegative rational");
  const std::int64_t g = std::gcd(num_, den_);
  if (g > 1) {
    num_ /= g;
    den_ /= g;
  }
}

SiteBox BoxSpec::sites_box() const {
  SiteBox b{center_, center_};
  const std::int64_t r = radius();
  for (int i = 0; i < dim(); ++i) {
    b.lo[i] -= r;
    b.hi[i] += r;
  }
  return b;
}

BoxGrid::BoxGrid(int dim, std::int64_t scale, bool overlapping)
    : dim_(dim), scale_(scale), overlapping_(overlapping) {
  check_dim(dim);
  if (scale < 1 || scale % 2 == 0) throw std::invalid_argument("grid scale must be an odd positive integer");
  if (overlapping && scale % 3 != 0) throw std::invalid_argument("overlapping grid needs a scale divisible by 3");
}

std::vector<Site> BoxGrid::indices_containing(const Site& y) const {
  const std::int64_t rad = (scale_ - 1) / 2, s = spacing();
  std::vector<std::int64_t> lo(static_cast<std::size_t>(dim_)), hi(static_cast<std::size_t>(dim_));
  for (int i = 0; i < dim_; ++i) {
    lo[static_cast<std::size_t>(i)] = ceil_div(y[i] - rad, s);
    hi[static_cast<std::size_t>(i)] = floor_div(y[i] + rad, s);
  }
  return product(lo, hi);
}

std::vector<Site> BoxGrid::indices_intersecting(const SiteBox& region) const {
  if (region.empty()) return {};
  const std::int64_t rad = (scale_ - 1) / 2, s = spacing();
  std::vector<std::int64_t> lo(static_cast<std::size_t>(dim_)), hi(static_cast<std::size_t>(dim_));
  for (int i = 0; i < dim_; ++i) {
    lo[static_cast<std::size_t>(i)] = ceil_div(region.lo[i] - rad, s);
    hi[static_cast<std::size_t>(i)] = floor_div(region.hi[i] + rad, s);
  }
  return product(lo, hi);
}

std::vector<Site> BoxGrid::indices_inside(const SiteBox& region) const {
  if (region.empty()) return {};
  const std::int64_t rad = (scale_ - 1) / 2, s = spacing();
  std::vector<std::int64_t> lo(static_cast<std::size_t>(dim_)), hi(static_cast<std::size_t>(dim_));
  for (int i = 0; i < dim_; ++i) {
    lo[static_cast<std::size_t>(i)] = ceil_div(region.lo[i] + rad, s);
    hi[static_cast<std::size_t>(i)] = floor_div(region.hi[i] - rad, s);
  }
  return product(lo, hi);
}

Polymer::Polymer(BoxGrid grid, std::set<Site> boxes) : grid_(grid), boxes_(std::move(boxes)) {
  for (const auto& b : boxes_)
    if (b.dim() != grid_.dim()) throw std::invalid_argument("box index dimension does not match grid");
}

bool boxes_adjacent(const BoxGrid& g, const Site& a, const Site& b) {
  return linf_gap(g.sites_box(a), g.sites_box(b)) <= 1;
}

std::vector<Polymer> Polymer::components() const {
  std::vector<Site> all(boxes_.begin(), boxes_.end());
  std::vector<int> comp(all.size(), -1);
  std::vector<Polymer> out;
  for (std::size_t s = 0; s < all.size(); ++s) {
    if (comp[s] >= 0) continue;
    const int c = static_cast<int>(out.size());
    out.emplace_back(grid_);
    std::deque<std::size_t> q{s};
    comp[s] = c;
    while (!q.empty()) {
      const std::size_t k = q.front();
      q.pop_front();
      out.back().insert(all[k]);
      for (std::size_t m = 0; m < all.size(); ++m) {
        if (comp[m] >= 0 || !boxes_adjacent(grid_, all[k], all[m])) continue;
        comp[m] = c;
        q.push_back(m);
      }
    }
  }
  return out;
}

Polymer Polymer::expanded(std::int64_t r) const {
  Polymer p(grid_);
  for (const auto& b : boxes_)
    for (const auto& idx : grid_.indices_intersecting(grid_.sites_box(b).expanded(r))) p.insert(idx);
  return p;
}

bool Polymer::contains_site(const Site& y) const { return distance(y) == 0; }

std::int64_t Polymer::distance(const Site& y) const {
  if (boxes_.empty()) throw std::logic_error("distance to an empty polymer");
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  for (const auto& b : boxes_) best = std::min(best, linf_distance(y, grid_.sites_box(b)));
  return best;
}

std::int64_t Polymer::gap(const SiteBox& region) const {
  if (boxes_.empty()) throw std::logic_error("distance to an empty polymer");
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  for (const auto& b : boxes_) best = std::min(best, linf_gap(grid_.sites_box(b), region));
  return best;
}

SiteBox Polymer::bounds() const {
  if (boxes_.empty()) throw std::logic_error("bounds of an empty polymer");
  SiteBox out = grid_.sites_box(*boxes_.begin());
  for (const auto& b : boxes_) {
    const SiteBox sb = grid_.sites_box(b);
    for (int i = 0; i < out.dim(); ++i) {
      out.lo[i] = std::min(out.lo[i], sb.lo[i]);
      out.hi[i] = std::max(out.hi[i], sb.hi[i]);
    }
  }
  return out;
}

bool touch(const Polymer& a, const Polymer& b) {
  if (!(a.grid() == b.grid())) throw std::invalid_argument("polymers on different grids");
  for (const auto& x : a.boxes())
    for (const auto& y : b.boxes())
      if (a.grid().sites_box(x).intersects(b.grid().sites_box(y))) return false;
  Polymer u(a.grid());
  for (const auto& x : a.boxes()) u.insert(x);
  for (const auto& y : b.boxes()) u.insert(y);
  return u.connected();
}

}  // namespace membrane
