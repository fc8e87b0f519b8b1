#include "membrane/site.hpp"

#include <cmath>
#include <cstdlib>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace membrane {

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw std::invalid_argument("lattice dimension must be in [1, " + std::to_string(kMaxDim) +
                                "], got " + std::to_string(dim));
  }
}

Site::Site(int dim) : dim_(dim) { check_dim(dim); }

Site::Site(std::initializer_list<std::int64_t> coords) {
  check_dim(static_cast<int>(coords.size()));
  dim_ = static_cast<int>(coords.size());
  std::size_t i = 0;
  for (auto v : coords) c_[i++] = v;
}

Site Site::from(std::span<const std::int64_t> coords) {
  Site s(static_cast<int>(coords.size()));
  for (std::size_t i = 0; i < coords.size(); ++i) s.c_[i] = coords[i];
  return s;
}

Site Site::unit(int dim, int axis, std::int64_t length) {
  Site s(dim);
  if (axis < 0 || axis >= dim) throw std::out_of_range("axis out of range");
  s.c_[static_cast<std::size_t>(axis)] = length;
  return s;
}

static void require_same_dim(const Site& a, const Site& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("sites of different dimension");
}

Site& Site::operator+=(const Site& o) {
  require_same_dim(*this, o);
  for (int i = 0; i < dim_; ++i) c_[static_cast<std::size_t>(i)] += o[i];
  return *this;
}

Site& Site::operator-=(const Site& o) {
  require_same_dim(*this, o);
  for (int i = 0; i < dim_; ++i) c_[static_cast<std::size_t>(i)] -= o[i];
  return *this;
}

Site Site::scaled(std::int64_t k) const {
  Site s = *this;
  for (int i = 0; i < dim_; ++i) s.c_[static_cast<std::size_t>(i)] *= k;
  return s;
}

bool operator==(const Site& a, const Site& b) {
  if (a.dim_ != b.dim_) return false;
  for (int i = 0; i < a.dim_; ++i)
    if (a[i] != b[i]) return false;
  return true;
}

std::strong_ordering operator<=>(const Site& a, const Site& b) {
  require_same_dim(a, b);
  for (int i = 0; i < a.dim_; ++i) {
    if (auto c = a[i] <=> b[i]; c != 0) return c;
  }
  return std::strong_ordering::equal;
}

std::string Site::str() const {
  std::ostringstream os;
  os << *this;
  return os.str();
}

std::ostream& operator<<(std::ostream& os, const Site& s) {
  os << '(';
  for (int i = 0; i < s.dim(); ++i) {
    if (i) os << ' ';
    os << s[i];
  }
  return os << ')';
}

std::size_t SiteHash::operator()(const Site& s) const noexcept {
  // splitmix-style mixing of each coordinate
  std::uint64_t h = 0x9E3779B97F4A7C15ull ^ static_cast<std::uint64_t>(s.dim());
  for (int i = 0; i < s.dim(); ++i) {
    std::uint64_t z = h + static_cast<std::uint64_t>(s[i]) + 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    h = z ^ (z >> 31);
  }
  return static_cast<std::size_t>(h);
}

std::int64_t l1_norm(const Site& s) {
  std::int64_t n = 0;
  for (int i = 0; i < s.dim(); ++i) n += std::llabs(s[i]);
  return n;
}

std::int64_t linf_norm(const Site& s) {
  std::int64_t n = 0;
  for (int i = 0; i < s.dim(); ++i) n = std::max<std::int64_t>(n, std::llabs(s[i]));
  return n;
}

double euclidean_norm(const Site& s) {
  double n = 0;
  for (int i = 0; i < s.dim(); ++i) n += static_cast<double>(s[i]) * static_cast<double>(s[i]);
  return std::sqrt(n);
}

}  // namespace membrane
