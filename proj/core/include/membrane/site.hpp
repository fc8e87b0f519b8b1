#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>

namespace membrane {

// Largest lattice dimension supported by the fixed-capacity coordinate store.
inline constexpr int kMaxDim = 8;

// A point of Z^d. The dimension is a runtime property; comparisons between
// sites of different dimension are programming errors and throw.
class Site {
 public:
  Site() = default;
  explicit Site(int dim);
  Site(std::initializer_list<std::int64_t> coords);
  static Site from(std::span<const std::int64_t> coords);
  static Site unit(int dim, int axis, std::int64_t length = 1);

  int dim() const { return dim_; }
  std::int64_t operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
  std::int64_t& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }

  Site shifted(int axis, std::int64_t by) const {
    Site s = *this;
    s.c_[static_cast<std::size_t>(axis)] += by;
    return s;
  }

  Site& operator+=(const Site& o);
  Site& operator-=(const Site& o);
  friend Site operator+(Site a, const Site& b) { return a += b; }
  friend Site operator-(Site a, const Site& b) { return a -= b; }
  Site scaled(std::int64_t k) const;

  friend bool operator==(const Site& a, const Site& b);
  // Lexicographic order on coordinates.
  friend std::strong_ordering operator<=>(const Site& a, const Site& b);

  std::string str() const;

 private:
  std::array<std::int64_t, kMaxDim> c_{};
  int dim_ = 0;
};

std::ostream& operator<<(std::ostream& os, const Site& s);

struct SiteHash {
  std::size_t operator()(const Site& s) const noexcept;
};

std::int64_t l1_norm(const Site& s);
std::int64_t linf_norm(const Site& s);
double euclidean_norm(const Site& s);
inline std::int64_t l1_distance(const Site& a, const Site& b) { return l1_norm(a - b); }
inline std::int64_t linf_distance(const Site& a, const Site& b) { return linf_norm(a - b); }
inline double euclidean_distance(const Site& a, const Site& b) { return euclidean_norm(a - b); }

void check_dim(int dim);

}  // namespace membrane
