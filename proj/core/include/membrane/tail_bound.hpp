#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>

namespace membrane {

using Rational = boost::multiprecision::cpp_rational;

struct TailBoundResult {
  Rational lhs;  // sum_{j >= ceil(rN)} C(N,j) p^j, exact
  double lhs_value = 0;
  double rhs_value = 0;  // (p/r^2)^{rN}
  bool ok = false;       // lhs <= rhs, decided exactly
};

// Binomial-type tail bound for 0 <= p <= r <= 1/2, 0 < r, N >= 1. The
// comparison with the possibly irrational right side is decided exactly by
// raising both sides to the denominator of rN.
TailBoundResult binomial_tail_bound_check(int n, const Rational& p, const Rational& r);
// Convenience overload: p and r are replaced by their best rational
// approximations with denominator at most 1000.
TailBoundResult binomial_tail_bound_check(int n, double p, double r);

Rational best_rational(double x, std::int64_t max_den);

}  // namespace membrane
