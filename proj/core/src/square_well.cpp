#include "membrane/square_well.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace membrane {

namespace {

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
// P(|Z| <= s)
double central(double s) { return s <= 0 ? 0.0 : std::erf(s / std::sqrt(2.0)); }

// P(|X1| <= a, |X1| + |X2| <= t) for a <= t: integrate over x1 in [-a, a].
double diamond_slab(double a, double t) {
  auto f = [t](double x) { return phi(x) * central(t - x); };
  return 2.0 * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, a, 15, 1e-15);
}

using Point = std::pair<double, double>;

// Keep the part of the polygon with c . x <= h.
std::vector<Point> clip(const std::vector<Point>& poly, double c1, double c2, double h) {
  std::vector<Point> out;
  const std::size_t m = poly.size();
  for (std::size_t k = 0; k < m; ++k) {
    const Point& p = poly[k];
    const Point& q = poly[(k + 1) % m];
    const double fp = c1 * p.first + c2 * p.second - h;
    const double fq = c1 * q.first + c2 * q.second - h;
    if (fp <= 0) out.push_back(p);
    if ((fp < 0 && fq > 0) || (fp > 0 && fq < 0)) {
      const double s = fp / (fp - fq);
      out.emplace_back(p.first + s * (q.first - p.first), p.second + s * (q.second - p.second));
    }
  }
  return out;
}

}  // namespace

double strip_intersection_area(const std::vector<std::pair<double, double>>& rows, double t) {
  // Unbounded strips are truncated at 1000 t; keeping the frame small limits
  // cancellation in the clipped vertices.
  const double big = 1e3 * t;
  std::vector<Point> poly{{-big, -big}, {big, -big}, {big, big}, {-big, big}};
  for (const auto& [a1, a2] : rows) {
    poly = clip(poly, a1, a2, t);
    poly = clip(poly, -a1, -a2, t);
    if (poly.empty()) return 0.0;
  }
  double s = 0;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Point& p = poly[k];
    const Point& q = poly[(k + 1) % poly.size()];
    s += p.first * q.second - q.first * p.second;
  }
  return std::abs(s) / 2.0;
}

SquareWellResult square_well_counterexample(double n, double t) {
  if (!(n >= 4)) throw std::invalid_argument("N must be at least 4");
  if (!(t > 0)) throw std::invalid_argument("t must be positive");
  SquareWellResult r;
  r.n = n;
  r.t = t;
  r.small_t_warning = t > 0.01 / n;
  const double a = t / n;
  // Union {1..6}: |X1|, |X2| <= t/N; the diagonal constraints are implied for N >= 2.
  const double p_union = central(a) * central(a);
  // Intersection {5,6}: |X1 + X2| <= t and |X1 - X2| <= t, i.e. |X1| + |X2| <= t.
  const double p_inter = diamond_slab(t, t);
  // A = {1,3,5,6}: |X1| <= t/N inside the diamond; A' is its mirror image.
  const double p_a = diamond_slab(a, t);
  const double scale = 2.0 * std::numbers::pi / (t * t);
  r.scaled = {scale * p_union, scale * p_inter, scale * p_a, scale * p_a};
  r.limits = {4.0 / (n * n), 2.0, 4.0 / n - 2.0 / (n * n), 4.0 / n - 2.0 / (n * n)};
  r.ratio = p_union * p_inter / (p_a * p_a);
  r.limit_ratio = r.limits[0] * r.limits[1] / (r.limits[2] * r.limits[3]);
  return r;
}

}  // namespace membrane
