#include "membrane/operators.hpp"

#include <map>

namespace membrane {

std::vector<StencilEntry> laplacian_stencil(int dim) {
  check_dim(dim);
  std::vector<StencilEntry> s;
  s.push_back({Site(dim), -2.0 * dim});
  for (int i = 0; i < dim; ++i) {
    s.push_back({Site::unit(dim, i, 1), 1.0});
    s.push_back({Site::unit(dim, i, -1), 1.0});
  }
  return s;
}

std::vector<StencilEntry> bilaplacian_stencil(int dim) {
  const auto lap = laplacian_stencil(dim);
  std::map<Site, double> acc;
  for (const auto& a : lap)
    for (const auto& b : lap) acc[a.offset + b.offset] += a.coeff * b.coeff;
  std::vector<StencilEntry> out;
  out.reserve(acc.size());
  for (const auto& [off, c] : acc)
    if (c != 0.0) out.push_back({off, c});
  return out;
}

}  // namespace membrane
