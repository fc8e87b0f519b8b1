#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "experiments/criteria.hpp"
#include "membrane/box.hpp"
#include "membrane/philox.hpp"
#include "membrane/site.hpp"

namespace experiments::detail {

using membrane::PhiloxStream;
using membrane::Site;
using membrane::SiteBox;

inline PhiloxStream stream_for(std::uint64_t seed, std::uint64_t tag) { return PhiloxStream(seed, tag); }

// Uniform on {lo, ..., hi}; the modulo bias of 64 bits is negligible here and
// keeps the draws independent of the standard library's distributions.
inline std::int64_t uniform_int(PhiloxStream& rng, std::int64_t lo, std::int64_t hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  const std::uint64_t w = (static_cast<std::uint64_t>(rng()) << 32) | rng();
  return lo + static_cast<std::int64_t>(w % span);
}

inline double uniform_real(PhiloxStream& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

template <class T>
void shuffle(PhiloxStream& rng, std::vector<T>& v) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i) - 1))]);
}

// n distinct sites of the box, sorted.
inline std::vector<Site> random_sites(PhiloxStream& rng, const SiteBox& box, std::size_t n) {
  std::vector<Site> all = box.sites();
  shuffle(rng, all);
  all.resize(std::min(n, all.size()));
  std::sort(all.begin(), all.end());
  return all;
}

inline std::vector<Site> path_sites(std::int64_t first, std::int64_t count) {
  std::vector<Site> out;
  for (std::int64_t k = 0; k < count; ++k) out.push_back(Site{first + k});
  return out;
}

inline SiteBox cube_box(int dim, std::int64_t lo, std::int64_t side) {
  Site l(dim);
  for (int i = 0; i < dim; ++i) l[i] = lo;
  return membrane::block(l, side);
}

inline void say(const CriterionContext& ctx, const std::string& msg) {
  if (ctx.log) *ctx.log << msg << std::endl;
}

}  // namespace experiments::detail
