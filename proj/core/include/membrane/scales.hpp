#pragma once

#include <cstdint>

namespace membrane {

// Microscopic (pinned-point spacing) and macroscopic (decay) length scales.
struct Scales {
  int dimension = 0;
  double epsilon = 0;  // NaN when the lengths were set explicitly
  std::int64_t lambda_mic = 0;
  std::int64_t lambda_mac = 0;
  // d <= 3 reuses the d = 4 formulas.
  bool extrapolated = false;
  bool explicit_lengths = false;

  // Explicit lengths for scaled-down constructions (no epsilon behind them).
  static Scales from_lengths(int d, std::int64_t lambda_mic, std::int64_t lambda_mac);
};

Scales scales_from_epsilon(int d, double epsilon);

// Unrounded bases: eps^{-1/d} or |log eps|^{1/8} eps^{-1/4} for the micro
// scale, eps^{-1/4} or |log eps|^{3/8} eps^{-1/4} for the macro scale.
double micro_base(int d, double epsilon);
double macro_base(int d, double epsilon);

std::int64_t smallest_odd_at_least(double x);

}  // namespace membrane
