#include "membrane/scales.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "membrane/site.hpp"

namespace membrane {

namespace {
void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0,1)");
}
}  // namespace

std::int64_t smallest_odd_at_least(double x) {
  // absorb rounding noise so that e.g. 10^{-5 * -1/5} = 10 is not read as 10.000000001
  const double snapped = std::ceil(x - 1e-9 * std::max(1.0, std::abs(x)));
  auto n = static_cast<std::int64_t>(std::max(1.0, snapped));
  if (n % 2 == 0) ++n;
  return n;
}

double micro_base(int d, double epsilon) {
  check_epsilon(epsilon);
  if (d >= 5) return std::pow(epsilon, -1.0 / d);
  return std::pow(std::abs(std::log(epsilon)), 0.125) * std::pow(epsilon, -0.25);
}

double macro_base(int d, double epsilon) {
  check_epsilon(epsilon);
  if (d >= 5) return std::pow(epsilon, -0.25);
  return std::pow(std::abs(std::log(epsilon)), 0.375) * std::pow(epsilon, -0.25);
}

Scales scales_from_epsilon(int d, double epsilon) {
  check_dim(d);
  check_epsilon(epsilon);
  Scales s;
  s.dimension = d;
  s.epsilon = epsilon;
  s.extrapolated = d <= 3;
  s.lambda_mic = smallest_odd_at_least(micro_base(d, epsilon));
  const double mac = macro_base(d, epsilon);
  auto k = static_cast<std::int64_t>(
      std::max(1.0, std::ceil(mac / static_cast<double>(s.lambda_mic) - 1e-9 * std::max(1.0, mac))));
  if (k % 2 == 0) ++k;
  s.lambda_mac = k * s.lambda_mic;
  return s;
}

Scales Scales::from_lengths(int d, std::int64_t lambda_mic, std::int64_t lambda_mac) {
  check_dim(d);
  if (lambda_mic < 1 || lambda_mic % 2 == 0) throw std::invalid_argument("lambda_mic must be odd and positive");
  if (lambda_mac < lambda_mic || lambda_mac % lambda_mic != 0 || (lambda_mac / lambda_mic) % 2 == 0)
    throw std::invalid_argument("lambda_mac must be an odd multiple of lambda_mic");
  Scales s;
  s.dimension = d;
  s.epsilon = std::numeric_limits<double>::quiet_NaN();
  s.lambda_mic = lambda_mic;
  s.lambda_mac = lambda_mac;
  s.explicit_lengths = true;
  return s;
}

}  // namespace membrane
