#include "membrane/tail_bound.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <stdexcept>

namespace membrane {

namespace {

using boost::multiprecision::cpp_int;
using Float = boost::multiprecision::cpp_bin_float_100;

Rational rpow(const Rational& x, const cpp_int& e) {
  Rational out = 1, base = x;
  cpp_int k = e;
  while (k > 0) {
    if ((k & 1) != 0) out *= base;
    base *= base;
    k >>= 1;
  }
  return out;
}

cpp_int ceil_rational(const Rational& x) {
  const cpp_int num = boost::multiprecision::numerator(x), den = boost::multiprecision::denominator(x);
  cpp_int q = num / den;
  if (q * den < num) ++q;
  return q;
}

}  // namespace

Rational best_rational(double x, std::int64_t max_den) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite value");
  // continued-fraction convergents
  std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double v = x;
  for (int it = 0; it < 64; ++it) {
    const double a = std::floor(v);
    const auto ai = static_cast<std::int64_t>(a);
    const std::int64_t k2 = ai * k1 + k0;
    if (k2 > max_den) break;
    const std::int64_t h2 = ai * h1 + h0;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    if (std::abs(v - a) < 1e-15) break;
    v = 1.0 / (v - a);
  }
  return Rational(h1, k1);
}

TailBoundResult binomial_tail_bound_check(int n, const Rational& p, const Rational& r) {
  if (n < 1) throw std::invalid_argument("N must be positive");
  if (p < 0 || p > r || r > Rational(1, 2) || r <= 0)
    throw std::invalid_argument("need 0 <= p <= r <= 1/2 and r > 0");
  TailBoundResult res;
  const Rational rn = r * n;
  const cpp_int j0 = ceil_rational(rn);
  cpp_int binom = 1;  // C(N, j)
  Rational pj = 1;
  for (int j = 0; j <= n; ++j) {
    if (j >= j0) res.lhs += Rational(binom) * pj;
    binom = binom * (n - j) / (j + 1);
    pj *= p;
  }
  const Rational base = p / (r * r);
  const cpp_int a = boost::multiprecision::numerator(rn), b = boost::multiprecision::denominator(rn);
  res.lhs_value = static_cast<double>(res.lhs);
  res.rhs_value = std::pow(static_cast<double>(base), static_cast<double>(rn));
  if (p == 0) {
    res.ok = res.lhs == 0;  // rhs = 0 since rN > 0
    return res;
  }
  // Decide in high precision when the sides are well apart, exactly otherwise.
  const Float log_l = res.lhs == 0 ? Float(-1e300) : log(Float(res.lhs));
  const Float log_r = Float(rn) * log(Float(base));
  const Float gap = log_r - log_l;
  if (gap > Float(1e-40)) {
    res.ok = true;
  } else if (gap < Float(-1e-40)) {
    res.ok = false;
  } else {
    res.ok = rpow(res.lhs, b) <= rpow(base, a);
  }
  return res;
}

TailBoundResult binomial_tail_bound_check(int n, double p, double r) {
  return binomial_tail_bound_check(n, best_rational(p, 1000), best_rational(r, 1000));
}

}  // namespace membrane
