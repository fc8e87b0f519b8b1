#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "membrane/box.hpp"
#include "membrane/hardy_rellich.hpp"
#include "membrane/scales.hpp"
#include "membrane/site.hpp"

namespace membrane {

struct CutoffParams {
  std::int64_t K = 3;  // odd multiple of 3
  std::int64_t L = 3;  // odd
  std::int64_t M = 13;  // odd, >= 12
  Scales scales;

  int dim() const { return scales.dimension; }
  // M^{j^3} K lambda_mic; throws on int64 overflow.
  std::int64_t ell(int j) const;
  std::int64_t micro_side() const { return K * scales.lambda_mic; }     // level-0 boxes
  std::int64_t meso_side() const { return K * scales.lambda_mac; }      // type-II subboxes
  std::int64_t macro_side() const { return K * L * scales.lambda_mac; } // U and the annuli
  // Largest j with 8 ell(j) <= macro_side(); -1 if even ell(0) is too large.
  int j_star() const;
  void validate() const;
};

// Level-0 bad boxes: grid boxes of side K lambda_mic containing a site of the
// window whose cone distance d_* to the augmented pinned set exceeds
// K lambda_mic. Boxes are returned by grid index.
std::set<Site> bad_level0(const PinnedExt& pinned, const CutoffParams& params, const ConeSet& cones,
                          const SiteBox& window);

// Window outside which no site can be bad when the pinned set contains the
// complement of the block `lambda`: every cone offset of length at most
// K lambda_mic from there already lands outside. Throws if some cone holds no
// lattice point within that length (then every site is bad).
SiteBox level0_scan_window(const SiteBox& lambda, const CutoffParams& params, const ConeSet& cones);

struct HBox {
  Site index;  // grid multi-index
  Site center;
  std::int64_t side = 0;
  SiteBox sites;

  friend bool operator<(const HBox& a, const HBox& b) { return a.center < b.center; }
  friend bool operator==(const HBox& a, const HBox& b) { return a.center == b.center && a.side == b.side; }
};

struct HierarchyLevel {
  int j = 0;
  std::vector<HBox> boxes;          // S^(j), sorted by centre
  std::vector<std::uint8_t> clustered;  // classification against scale ell(j+1); empty on the last level
  std::vector<std::optional<std::size_t>> parent;  // index into the next level's boxes
  bool cover_exact = true;          // whether the cover of this level (j >= 1) is provably minimal
  std::size_t cover_candidates = 0;

  std::size_t count_clustered() const;
};

struct BadBoxHierarchy {
  CutoffParams params;
  int j_star = 0;
  std::vector<HierarchyLevel> levels;  // levels[j] = S^(j), j = 0..j_star
  std::map<Site, int> j_isol;          // per level-0 grid index; j_star if the chain reaches the top

  const HierarchyLevel& level(int j) const { return levels.at(static_cast<std::size_t>(j)); }
  bool empty() const { return levels.empty() || levels.front().boxes.empty(); }
  // Sorted text dump: one line per box with its classification.
  void dump(std::ostream& os) const;
};

// Clustered/isolated split, covers and parent links up to j_star. Throws
// std::invalid_argument if j_star < 1.
BadBoxHierarchy build_hierarchy(const std::set<Site>& level0, const CutoffParams& params);

// Macro boxes (grid of side K L lambda_mac) meeting a box of S^(j_star).
std::set<Site> type_one_boxes(const BadBoxHierarchy& h);
// Macro boxes with a K lambda_mac subbox holding at least a quarter of its
// level-0 boxes as bad ones.
std::set<Site> type_two_boxes(const BadBoxHierarchy& h);

// Exposed for tests: minimum set cover with lexicographic tie-breaking over
// the candidate order; exact for <= 20 candidates, greedy beyond.
struct CoverResult {
  std::vector<std::size_t> chosen;
  bool exact = true;
};
CoverResult min_cover(const std::vector<std::vector<std::size_t>>& candidate_sets, std::size_t universe);

// Largest pairwise-disjoint subfamily, lexicographically first among the
// largest; exact for <= 20 boxes, greedy beyond.
std::vector<std::size_t> max_disjoint(const std::vector<SiteBox>& boxes, bool* exact = nullptr);

}  // namespace membrane
