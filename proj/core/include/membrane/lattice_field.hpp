#pragma once

#include <cstddef>
#include <unordered_map>
#include <utility>
#include <vector>

#include "membrane/site.hpp"

namespace membrane {

// Real-valued function on Z^d with finite support. Reads outside the support
// return 0, which is how the zero exterior data enters every operator.
class LatticeField {
 public:
  explicit LatticeField(int dim);

  int dim() const { return dim_; }
  double operator()(const Site& x) const {
    auto it = values_.find(x);
    return it == values_.end() ? 0.0 : it->second;
  }
  bool in_support(const Site& x) const { return values_.count(x) != 0; }
  std::size_t support_size() const { return values_.size(); }

  void set(const Site& x, double v);
  void add(const Site& x, double v);
  void erase(const Site& x) { values_.erase(x); }

  // Sorted (lexicographic) support.
  std::vector<Site> support() const;
  // Componentwise bounds of the support; empty field returns {Site(d), Site(d)}.
  std::pair<Site, Site> bounds() const;
  double sup_norm() const;

  template <class F>
  void for_each(F&& f) const {
    for (const auto& [x, v] : values_) f(x, v);
  }

 private:
  int dim_;
  std::unordered_map<Site, double, SiteHash> values_;
};

}  // namespace membrane
