#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "membrane/site.hpp"

// Discrete difference operators. Every function takes any callable
// `double(const Site&)` as the field so lazily evaluated functions (cut-offs,
// corrections) share the same code path as LatticeField. Axes are zero-based.
namespace membrane {

inline void check_axis(int axis, int dim) {
  if (axis < 0 || axis >= dim) throw std::out_of_range("axis out of range");
}

// D_i u(x) = u(x+e_i) - u(x)
template <class Field>
double forward_diff(const Field& u, int axis, const Site& x) {
  check_axis(axis, x.dim());
  return u(x.shifted(axis, 1)) - u(x);
}

// D_{-i} u(x) = u(x) - u(x-e_i)
template <class Field>
double backward_diff(const Field& u, int axis, const Site& x) {
  check_axis(axis, x.dim());
  return u(x) - u(x.shifted(axis, -1));
}

// D_i D_{-j} u(x), one entry of the discrete Hessian.
template <class Field>
double mixed_diff(const Field& u, int i, int j, const Site& x) {
  check_axis(i, x.dim());
  check_axis(j, x.dim());
  const Site xi = x.shifted(i, 1);
  return u(xi) - u(xi.shifted(j, -1)) - u(x) + u(x.shifted(j, -1));
}

template <class Field>
double laplacian_apply(const Field& u, const Site& x) {
  double s = -2.0 * x.dim() * u(x);
  for (int i = 0; i < x.dim(); ++i) s += u(x.shifted(i, 1)) + u(x.shifted(i, -1));
  return s;
}

template <class Field>
double bilaplacian_apply(const Field& u, const Site& x) {
  auto lap = [&u](const Site& y) { return laplacian_apply(u, y); };
  return laplacian_apply(lap, x);
}

// |grad u(x)|^2 with forward differences.
template <class Field>
double gradient_sq(const Field& u, const Site& x) {
  const double ux = u(x);
  double s = 0;
  for (int i = 0; i < x.dim(); ++i) {
    const double d = u(x.shifted(i, 1)) - ux;
    s += d * d;
  }
  return s;
}

// sum_{i,j} |D_i D_{-j} u(x)|^2
template <class Field>
double hessian_sq(const Field& u, const Site& x) {
  const int d = x.dim();
  double s = 0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const double h = mixed_diff(u, i, j, x);
      s += h * h;
    }
  return s;
}

template <class Field>
double hessian_max_abs(const Field& u, const Site& x) {
  const int d = x.dim();
  double m = 0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m = std::max(m, std::abs(mixed_diff(u, i, j, x)));
  return m;
}

struct StencilEntry {
  Site offset;
  double coeff;
};

// Laplacian stencil: centre -2d, nearest neighbours 1.
std::vector<StencilEntry> laplacian_stencil(int dim);

// Bilaplacian stencil, obtained by composing the Laplacian stencil with itself.
// Sorted by offset; the centre coefficient is 4d^2 + 2d.
std::vector<StencilEntry> bilaplacian_stencil(int dim);

}  // namespace membrane
