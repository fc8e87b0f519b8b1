#pragma once

#include <array>
#include <utility>
#include <vector>

namespace membrane {

// Two independent standard Gaussians X1, X2 mapped to
// Y = (X1, X2, N X1, N X2, X1 + X2, X1 - X2); a set of indices is "pinned"
// when |Y_i| <= t for each of its members.
struct SquareWellResult {
  double n = 0;
  double t = 0;
  // (2 pi / t^2) P(pinned on S) for S = union, intersection, A, A'.
  std::array<double, 4> scaled{};
  // t -> 0 limits: 4/N^2, 2, 4/N - 2/N^2, 4/N - 2/N^2.
  std::array<double, 4> limits{};
  // P(union) P(intersection) / (P(A) P(A')); the lattice condition asks >= 1.
  double ratio = 0;
  double limit_ratio = 0;
  bool small_t_warning = false;  // t > 0.01 / N
};

SquareWellResult square_well_counterexample(double n, double t);

// Lebesgue area of {x in R^2 : |a_i . x| <= t for every row a_i}, by clipping
// a square of half-width 1000 t with the half-planes. Used as an independent oracle.
double strip_intersection_area(const std::vector<std::pair<double, double>>& rows, double t);

}  // namespace membrane
