#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <unordered_set>
#include <vector>

#include "membrane/box.hpp"
#include "membrane/lattice_field.hpp"
#include "membrane/site.hpp"

namespace membrane {

inline constexpr std::int64_t kInfiniteDistance = std::numeric_limits<std::int64_t>::max();

// d+1 unit vectors with pairwise dot -1/d and the common half-angle kappa of
// the cones around them.
struct ConeSet {
  int dim = 0;
  std::vector<std::vector<double>> theta;
  double kappa = 0;
  double cos_kappa = 1;

  std::size_t count() const { return theta.size(); }
  // y != 0 and (y/|y|) . theta_i >= cos kappa
  bool in_cone(std::size_t i, const Site& y) const;
};

// Regular simplex directions by the recursive construction. Bisection finds
// the supremum of half-angles keeping cross-cone dot products negative; kappa
// is half of it, so the caps stay strictly apart.
ConeSet simplex_directions(int d);

// Largest pairwise dot over points sampled on the cone caps (checks the
// aperture claim empirically); should be negative.
double max_cross_cone_dot(const ConeSet& cones, std::size_t samples_per_cone, std::uint64_t seed);

// The set A~ = A u (Z^d \ Lambda) as a membership predicate.
class PinnedExt {
 public:
  static PinnedExt from_box(const SiteBox& lambda, const std::vector<Site>& pinned);
  static PinnedExt from_sites(const std::vector<Site>& lambda, const std::vector<Site>& pinned);
  // A finite set with no exterior (mainly for tests).
  static PinnedExt explicit_set(const std::vector<Site>& set);

  int dim() const { return dim_; }
  bool contains(const Site& y) const;
  // Adds sites to the pinned set (monotonicity tests).
  PinnedExt with_pinned(const std::vector<Site>& more) const;

 private:
  enum class Kind { box, sites, explicit_set };
  Kind kind_ = Kind::explicit_set;
  int dim_ = 0;
  SiteBox box_;
  std::shared_ptr<const std::unordered_set<Site, SiteHash>> lambda_;
  std::unordered_set<Site, SiteHash> pinned_;
};

// Offsets of each cone within l1 radius R, sorted by l1 norm.
class ConeOffsets {
 public:
  ConeOffsets(const ConeSet& cones, std::int64_t radius);
  const ConeSet& cones() const { return cones_; }
  std::int64_t radius() const { return radius_; }
  const std::vector<Site>& offsets(std::size_t i) const { return offsets_[i]; }

 private:
  ConeSet cones_;
  std::int64_t radius_;
  std::vector<std::vector<Site>> offsets_;
};

struct ConeDistances {
  std::vector<std::int64_t> per_cone;  // kInfiniteDistance if none within the cutoff
  std::int64_t d_star = kInfiniteDistance;
};

ConeDistances cone_distances(const Site& x, const PinnedExt& pinned, const ConeOffsets& offsets);
ConeDistances cone_distances(const Site& x, const PinnedExt& pinned, const ConeSet& cones, std::int64_t cutoff);
// d_*(x) <= R, stopping at the first empty cone.
bool d_star_within(const Site& x, const PinnedExt& pinned, const ConeOffsets& offsets);

struct RatioResult {
  double lhs = 0;
  double rhs = 0;  // normalisation (rhs_base for the local Poincare ratio)
  double ratio = 0;
};

// lhs = sum_{x in V} u(x)^2 1{d_*(x) <= R},
// rhs = R^d (1 + 1{d=4} log R) ||grad^2 u||^2 on V + Q_R(0).
// V is a union of blocks; u must vanish on A~ (std::invalid_argument otherwise).
RatioResult local_poincare_ratio(const LatticeField& u, const PinnedExt& pinned, const std::vector<SiteBox>& v,
                                 std::int64_t r, const ConeOffsets& offsets);

// lhs = ||grad u||^2_Q, rhs = R^2 ||grad^2 u||^2_Q + R^{-2} ||u 1_B||^2_Q for
// a cube Q of odd side R >= 12 d^{d/2} and B in Q with |B| >= |Q|/2.
RatioResult interpolation_ratio(const LatticeField& u, const BoxSpec& q, const std::vector<Site>& b);
std::int64_t interpolation_min_side(int d);

}  // namespace membrane
