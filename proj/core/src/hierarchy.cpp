#include "membrane/hierarchy.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace membrane {

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) throw std::overflow_error("box scale overflows 64 bits");
  return out;
}

HBox make_box(const BoxGrid& g, const Site& index) {
  return HBox{index, g.center(index), g.scale(), g.sites_box(index)};
}

using Bits = std::vector<std::uint64_t>;

Bits make_bits(std::size_t n) { return Bits((n + 63) / 64, 0); }
void set_bit(Bits& b, std::size_t i) { b[i / 64] |= std::uint64_t{1} << (i % 64); }

// For equal-size index sets encoded as masks, a precedes b lexicographically
// (as sorted lists) when the smallest index in which they differ belongs to a.
bool lex_before(std::uint32_t a, std::uint32_t b) {
  const std::uint32_t diff = a ^ b;
  return diff != 0 && (a & (diff & (~diff + 1))) != 0;
}

}  // namespace

std::int64_t CutoffParams::ell(int j) const {
  if (j < 0) throw std::invalid_argument("negative hierarchy level");
  std::int64_t v = micro_side();
  const std::int64_t e = static_cast<std::int64_t>(j) * j * j;
  for (std::int64_t k = 0; k < e; ++k) v = checked_mul(v, M);
  return v;
}

int CutoffParams::j_star() const {
  const std::int64_t cap = macro_side();
  int j = -1;
  for (int next = 0;; ++next) {
    std::int64_t l = 0;
    try {
      l = ell(next);
    } catch (const std::overflow_error&) {
      break;
    }
    if (l > cap / 8 || 8 * l > cap) break;
    j = next;
  }
  return j;
}

void CutoffParams::validate() const {
  if (K < 3 || K % 3 != 0 || K % 2 == 0) throw std::invalid_argument("K must be an odd positive multiple of 3");
  if (L < 1 || L % 2 == 0) throw std::invalid_argument("L must be an odd positive integer");
  if (M < 12 || M % 2 == 0) throw std::invalid_argument("M must be an odd integer >= 12");
  check_dim(scales.dimension);
  if (scales.lambda_mic < 1 || scales.lambda_mac < scales.lambda_mic)
    throw std::invalid_argument("length scales not set");
}

SiteBox level0_scan_window(const SiteBox& lambda, const CutoffParams& params, const ConeSet& cones) {
  const ConeOffsets offsets(cones, params.micro_side());
  for (std::size_t i = 0; i < cones.count(); ++i)
    if (offsets.offsets(i).empty())
      throw std::invalid_argument("a cone holds no lattice point within K lambda_mic; every site is bad");
  return lambda.expanded(params.micro_side());
}

std::set<Site> bad_level0(const PinnedExt& pinned, const CutoffParams& params, const ConeSet& cones,
                          const SiteBox& window) {
  params.validate();
  if (cones.dim != params.dim()) throw std::invalid_argument("cone dimension mismatch");
  const BoxGrid grid(params.dim(), params.micro_side());
  const ConeOffsets offsets(cones, params.micro_side());
  std::set<Site> out;
  for (const Site& idx : grid.indices_intersecting(window)) {
    SiteBox part = grid.sites_box(idx);
    for (int i = 0; i < part.dim(); ++i) {
      part.lo[i] = std::max(part.lo[i], window.lo[i]);
      part.hi[i] = std::min(part.hi[i], window.hi[i]);
    }
    // SiteBox::for_each cannot stop early; walk the box by hand
    bool bad = false;
    Site y = part.lo;
    const int d = part.dim();
    while (!part.empty()) {
      if (!d_star_within(y, pinned, offsets)) {
        bad = true;
        break;
      }
      int i = d - 1;
      while (i >= 0 && y[i] == part.hi[i]) y[i] = part.lo[i], --i;
      if (i < 0) break;
      ++y[i];
    }
    if (bad) out.insert(idx);
  }
  return out;
}

std::size_t HierarchyLevel::count_clustered() const {
  return static_cast<std::size_t>(std::count(clustered.begin(), clustered.end(), std::uint8_t{1}));
}

CoverResult min_cover(const std::vector<std::vector<std::size_t>>& sets, std::size_t universe) {
  CoverResult res;
  if (universe == 0) return res;
  const std::size_t n = sets.size();
  std::vector<Bits> bits(n, make_bits(universe));
  Bits all = make_bits(universe);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t e : sets[k]) {
      if (e >= universe) throw std::out_of_range("cover element out of range");
      set_bit(bits[k], e);
      set_bit(all, e);
    }
  for (std::size_t e = 0; e < universe; ++e)
    if (!(all[e / 64] >> (e % 64) & 1)) throw std::invalid_argument("element not coverable");

  auto covers = [&](std::uint32_t mask) {
    for (std::size_t w = 0; w < all.size(); ++w) {
      std::uint64_t acc = 0;
      for (std::uint32_t m = mask; m; m &= m - 1) acc |= bits[static_cast<std::size_t>(std::countr_zero(m))][w];
      if (acc != all[w]) return false;
    }
    return true;
  };

  if (n <= 20) {
    std::uint32_t best = 0;
    int best_size = std::numeric_limits<int>::max();
    const std::uint32_t limit = std::uint32_t{1} << n;
    for (std::uint32_t mask = 1; mask < limit; ++mask) {
      const int size = std::popcount(mask);
      if (size > best_size || (size == best_size && !lex_before(mask, best))) continue;
      if (covers(mask)) {
        best = mask;
        best_size = size;
      }
    }
    for (std::uint32_t m = best; m; m &= m - 1) res.chosen.push_back(static_cast<std::size_t>(std::countr_zero(m)));
    return res;
  }

  res.exact = false;
  Bits covered = make_bits(universe);
  std::vector<std::uint8_t> used(n, 0);
  while (covered != all) {
    std::size_t best = n;
    int gain_best = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (used[k]) continue;
      int gain = 0;
      for (std::size_t w = 0; w < all.size(); ++w) gain += std::popcount(bits[k][w] & ~covered[w]);
      if (gain > gain_best) {
        gain_best = gain;
        best = k;
      }
    }
    used[best] = 1;
    for (std::size_t w = 0; w < all.size(); ++w) covered[w] |= bits[best][w];
    res.chosen.push_back(best);
  }
  std::sort(res.chosen.begin(), res.chosen.end());
  return res;
}

std::vector<std::size_t> max_disjoint(const std::vector<SiteBox>& boxes, bool* exact) {
  const std::size_t n = boxes.size();
  std::vector<std::size_t> out;
  if (n <= 20) {
    if (exact) *exact = true;
    std::vector<std::uint32_t> conflict(n, 0);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (a != b && boxes[a].intersects(boxes[b])) conflict[a] |= std::uint32_t{1} << b;
    std::uint32_t best = 0;
    const std::uint32_t limit = std::uint32_t{1} << n;
    for (std::uint32_t mask = 1; mask < limit; ++mask) {
      const int size = std::popcount(mask), bs = std::popcount(best);
      if (size < bs || (size == bs && !lex_before(mask, best))) continue;
      bool ok = true;
      for (std::uint32_t m = mask; m && ok; m &= m - 1)
        ok = (conflict[static_cast<std::size_t>(std::countr_zero(m))] & mask) == 0;
      if (ok) best = mask;
    }
    for (std::uint32_t m = best; m; m &= m - 1) out.push_back(static_cast<std::size_t>(std::countr_zero(m)));
    return out;
  }
  if (exact) *exact = false;
  for (std::size_t k = 0; k < n; ++k) {
    bool ok = true;
    for (std::size_t c : out) ok = ok && !boxes[k].intersects(boxes[c]);
    if (ok) out.push_back(k);
  }
  return out;
}

BadBoxHierarchy build_hierarchy(const std::set<Site>& level0, const CutoffParams& params) {
  params.validate();
  BadBoxHierarchy h;
  h.params = params;
  h.j_star = params.j_star();
  if (h.j_star < 1) throw std::invalid_argument("j_star < 1: the scales leave no room for a hierarchy");
  const int d = params.dim();
  h.levels.resize(static_cast<std::size_t>(h.j_star) + 1);
  {
    const BoxGrid g0(d, params.ell(0));
    auto& l0 = h.levels[0];
    for (const Site& idx : level0) l0.boxes.push_back(make_box(g0, idx));
    std::sort(l0.boxes.begin(), l0.boxes.end());
  }
  for (int j = 1; j <= h.j_star; ++j) {
    auto& prev = h.levels[static_cast<std::size_t>(j - 1)];
    auto& cur = h.levels[static_cast<std::size_t>(j)];
    cur.j = j;
    const std::int64_t scale = params.ell(j);
    const std::size_t n = prev.boxes.size();
    prev.clustered.assign(n, 0);
    prev.parent.assign(n, std::nullopt);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n && !prev.clustered[a]; ++b) {
        if (a == b || prev.boxes[a].sites.intersects(prev.boxes[b].sites)) continue;
        if (2 * linf_gap(prev.boxes[a].sites, prev.boxes[b].sites) <= scale) prev.clustered[a] = 1;
      }
    std::vector<std::size_t> clustered;
    for (std::size_t a = 0; a < n; ++a)
      if (prev.clustered[a]) clustered.push_back(a);
    if (clustered.empty()) continue;

    // candidates: overlapping-grid boxes containing a clustered box and at
    // least two disjoint ones
    const BoxGrid grid(d, scale, true);
    const std::int64_t rad = (scale - 1) / 2;
    std::set<Site> cand_idx;
    for (std::size_t a : clustered) {
      SiteBox centres{Site(d), Site(d)};
      for (int i = 0; i < d; ++i) {
        centres.lo[i] = prev.boxes[a].sites.hi[i] - rad;
        centres.hi[i] = prev.boxes[a].sites.lo[i] + rad;
      }
      // centres of grid boxes containing box a are the grid points of `centres`
      for (const Site& idx : grid.indices_inside(centres.expanded((scale - 1) / 2)))
        if (grid.sites_box(idx).contains(prev.boxes[a].sites)) cand_idx.insert(idx);
    }
    std::vector<HBox> cands;
    std::vector<std::vector<std::size_t>> sets;
    for (const Site& idx : cand_idx) {
      const HBox box = make_box(grid, idx);
      std::vector<std::size_t> inside;
      for (std::size_t u = 0; u < clustered.size(); ++u)
        if (box.sites.contains(prev.boxes[clustered[u]].sites)) inside.push_back(u);
      bool two = false;
      for (std::size_t p = 0; p < inside.size() && !two; ++p)
        for (std::size_t q = p + 1; q < inside.size() && !two; ++q)
          two = !prev.boxes[clustered[inside[p]]].sites.intersects(prev.boxes[clustered[inside[q]]].sites);
      if (!two) continue;
      cands.push_back(box);
      sets.push_back(std::move(inside));
    }
    cur.cover_candidates = cands.size();
    const CoverResult cover = min_cover(sets, clustered.size());
    cur.cover_exact = cover.exact;
    for (std::size_t k : cover.chosen) cur.boxes.push_back(cands[k]);
    std::sort(cur.boxes.begin(), cur.boxes.end());
    for (std::size_t a : clustered)
      for (std::size_t p = 0; p < cur.boxes.size(); ++p)
        if (cur.boxes[p].sites.contains(prev.boxes[a].sites)) {
          prev.parent[a] = p;
          break;
        }
  }
  for (std::size_t k = 0; k < h.levels[0].boxes.size(); ++k) {
    int j = 0;
    std::size_t at = k;
    while (j < h.j_star) {
      const auto& lv = h.levels[static_cast<std::size_t>(j)];
      if (!lv.clustered[at]) break;
      at = *lv.parent[at];
      ++j;
    }
    h.j_isol[h.levels[0].boxes[k].index] = j;
  }
  return h;
}

std::set<Site> type_one_boxes(const BadBoxHierarchy& h) {
  std::set<Site> out;
  const BoxGrid macro(h.params.dim(), h.params.macro_side());
  for (const HBox& b : h.level(h.j_star).boxes)
    for (const Site& idx : macro.indices_intersecting(b.sites)) out.insert(idx);
  return out;
}

std::set<Site> type_two_boxes(const BadBoxHierarchy& h) {
  const int d = h.params.dim();
  const BoxGrid meso(d, h.params.meso_side());
  const BoxGrid macro(d, h.params.macro_side());
  std::map<Site, std::uint64_t> count;
  for (const HBox& b : h.level(0).boxes) ++count[meso.indices_containing(b.center).front()];
  std::uint64_t per_meso = 1;
  const auto ratio = static_cast<std::uint64_t>(h.params.scales.lambda_mac / h.params.scales.lambda_mic);
  for (int i = 0; i < d; ++i) per_meso *= ratio;
  std::set<Site> out;
  for (const auto& [idx, c] : count)
    if (4 * c >= per_meso) out.insert(macro.indices_containing(meso.center(idx)).front());
  return out;
}

void BadBoxHierarchy::dump(std::ostream& os) const {
  os << "# j_star " << j_star << '\n';
  for (const auto& lv : levels) {
    for (std::size_t k = 0; k < lv.boxes.size(); ++k) {
      const HBox& b = lv.boxes[k];
      os << lv.j << ' ' << b.center << ' ' << b.side << ' ';
      if (lv.clustered.empty())
        os << "top";
      else if (lv.clustered[k])
        os << "clustered " << levels[static_cast<std::size_t>(lv.j) + 1].boxes[*lv.parent[k]].center;
      else
        os << "isolated";
      if (lv.j > 0) os << " cover";
      os << '\n';
    }
  }
}

}  // namespace membrane
