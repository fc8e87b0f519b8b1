#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "membrane/site.hpp"

namespace membrane {

// Rectangular block of lattice sites lo <= y <= hi (componentwise, inclusive).
struct SiteBox {
  Site lo;
  Site hi;

  int dim() const { return lo.dim(); }
  bool empty() const;
  bool contains(const Site& y) const;
  bool contains(const SiteBox& b) const;
  bool intersects(const SiteBox& b) const;
  std::uint64_t volume() const;
  SiteBox expanded(std::int64_t r) const;
  std::vector<Site> sites() const;

  // Visits sites in lexicographic order.
  template <class F>
  void for_each(F&& f) const {
    if (empty()) return;
    Site y = lo;
    const int d = dim();
    while (true) {
      f(static_cast<const Site&>(y));
      int i = d - 1;
      while (i >= 0 && y[i] == hi[i]) {
        y[i] = lo[i];
        --i;
      }
      if (i < 0) return;
      ++y[i];
    }
  }
};

// Block with `side` sites per axis whose lowest corner is `lo`.
SiteBox block(const Site& lo, std::int64_t side);
// Block with `side` sites per axis centred as closely as possible on the origin
// (for even sides the extra layer sits on the positive side).
SiteBox centred_block(int dim, std::int64_t side);

// l-infinity distance between the site sets (0 if they intersect).
std::int64_t linf_gap(const SiteBox& a, const SiteBox& b);
std::int64_t linf_distance(const Site& y, const SiteBox& b);

// Discrete cube {y : |y - center|_inf <= half_diameter} with rational
// half-diameter num/den.
class BoxSpec {
 public:
  BoxSpec(Site center, std::int64_t half_num, std::int64_t half_den = 1);
  static BoxSpec cube(const Site& center, std::int64_t radius) { return BoxSpec(center, radius, 1); }
  // Q_{side/2}(center): `side` sites per axis for odd side.
  static BoxSpec of_side(const Site& center, std::int64_t side) { return BoxSpec(center, side, 2); }

  const Site& center() const { return center_; }
  int dim() const { return center_.dim(); }
  double half_diameter() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::int64_t radius() const { return num_ / den_; }
  std::int64_t side() const { return 2 * radius() + 1; }
  SiteBox sites_box() const;
  std::vector<Site> sites() const { return sites_box().sites(); }
  std::uint64_t volume() const { return sites_box().volume(); }
  bool contains(const Site& y) const { return linf_distance(y, center_) <= radius(); }

  friend bool operator==(const BoxSpec& a, const BoxSpec& b) {
    return a.center_ == b.center_ && a.radius() == b.radius();
  }

 private:
  Site center_;
  std::int64_t num_;
  std::int64_t den_;
};

// The grid Q_l = {Q_{l/2}(x) : x in (lZ)^d}, or the overlapping grid with
// centres in (l/3 Z)^d. Boxes are addressed by the integer multi-index of their
// centre.
class BoxGrid {
 public:
  BoxGrid(int dim, std::int64_t scale, bool overlapping = false);

  int dim() const { return dim_; }
  std::int64_t scale() const { return scale_; }
  bool overlapping() const { return overlapping_; }
  std::int64_t spacing() const { return overlapping_ ? scale_ / 3 : scale_; }

  Site center(const Site& index) const { return index.scaled(spacing()); }
  BoxSpec box(const Site& index) const { return BoxSpec::of_side(center(index), scale_); }
  SiteBox sites_box(const Site& index) const { return box(index).sites_box(); }

  std::vector<Site> indices_containing(const Site& y) const;
  std::vector<Site> indices_intersecting(const SiteBox& region) const;
  // Boxes whose sites lie entirely inside the region.
  std::vector<Site> indices_inside(const SiteBox& region) const;

  friend bool operator==(const BoxGrid& a, const BoxGrid& b) {
    return a.dim_ == b.dim_ && a.scale_ == b.scale_ && a.overlapping_ == b.overlapping_;
  }

 private:
  int dim_;
  std::int64_t scale_;
  bool overlapping_;
};

// Finite set of boxes of one grid. Two boxes are adjacent when their site sets
// are at l-infinity distance at most 1, which is when their union is connected.
class Polymer {
 public:
  explicit Polymer(BoxGrid grid) : grid_(grid) {}
  Polymer(BoxGrid grid, std::set<Site> boxes);

  const BoxGrid& grid() const { return grid_; }
  const std::set<Site>& boxes() const { return boxes_; }
  bool empty() const { return boxes_.empty(); }
  std::size_t size() const { return boxes_.size(); }
  void insert(const Site& index) { boxes_.insert(index); }

  std::vector<Polymer> components() const;
  bool connected() const { return components().size() <= 1; }
  // All boxes of the grid meeting (union of boxes) + Q_r(0).
  Polymer expanded(std::int64_t r) const;
  bool contains_site(const Site& y) const;
  // l-infinity distance from y to the union of the boxes.
  std::int64_t distance(const Site& y) const;
  std::int64_t gap(const SiteBox& b) const;
  SiteBox bounds() const;

 private:
  BoxGrid grid_;
  std::set<Site> boxes_;
};

bool boxes_adjacent(const BoxGrid& g, const Site& a, const Site& b);
// Disjoint as site sets and with connected union. Mixed grids are rejected.
bool touch(const Polymer& a, const Polymer& b);

}  // namespace membrane
