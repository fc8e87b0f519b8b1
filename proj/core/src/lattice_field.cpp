#include "membrane/lattice_field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace membrane {

LatticeField::LatticeField(int dim) : dim_(dim) { check_dim(dim); }

void LatticeField::set(const Site& x, double v) {
  if (x.dim() != dim_) throw std::invalid_argument("site dimension does not match field");
  values_[x] = v;
}

void LatticeField::add(const Site& x, double v) {
  if (x.dim() != dim_) throw std::invalid_argument("site dimension does not match field");
  values_[x] += v;
}

std::vector<Site> LatticeField::support() const {
  std::vector<Site> s;
  s.reserve(values_.size());
  for (const auto& kv : values_) s.push_back(kv.first);
  std::sort(s.begin(), s.end());
  return s;
}

std::pair<Site, Site> LatticeField::bounds() const {
  Site lo(dim_), hi(dim_);
  bool first = true;
  for (const auto& kv : values_) {
    const Site& x = kv.first;
    if (first) {
      lo = hi = x;
      first = false;
      continue;
    }
    for (int i = 0; i < dim_; ++i) {
      lo[i] = std::min(lo[i], x[i]);
      hi[i] = std::max(hi[i], x[i]);
    }
  }
  return {lo, hi};
}

double LatticeField::sup_norm() const {
  double m = 0;
  for (const auto& kv : values_) m = std::max(m, std::abs(kv.second));
  return m;
}

}  // namespace membrane
