#include "membrane/mass_fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

namespace membrane {

namespace {

struct Line {
  double slope = 0, intercept = 0, rms = 0;
};

Line least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  Line l;
  const double den = n * sxx - sx * sx;
  if (den == 0) throw std::invalid_argument("degenerate fit window");
  l.slope = (n * sxy - sx * sy) / den;
  l.intercept = (sy - l.slope * sx) / n;
  double r2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (l.intercept + l.slope * x[i]);
    r2 += r * r;
  }
  l.rms = std::sqrt(r2 / n);
  return l;
}

// Indices of the upper convex hull of points sorted by x (collinear points kept).
std::vector<std::size_t> upper_hull(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<std::size_t> h;
  for (std::size_t i = 0; i < x.size(); ++i) {
    while (h.size() >= 2) {
      const std::size_t a = h[h.size() - 2], b = h.back();
      const double cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a]);
      if (cross > 1e-12 * (1.0 + std::abs(y[i]))) h.pop_back();
      else break;
    }
    h.push_back(i);
  }
  return h;
}

}  // namespace

MassEstimate estimate_mass(const std::vector<ProfilePoint>& profile, std::vector<double> theta, std::int64_t k_min,
                           std::int64_t k_max, MassFitMethod method) {
  if (k_max <= k_min) throw std::invalid_argument("empty fit window");
  MassEstimate m;
  m.theta = std::move(theta);
  m.k_min = k_min;
  m.k_max = k_max;
  m.method = method;
  std::vector<double> xs, ys;
  std::size_t strong = 0;
  for (const auto& p : profile) {
    if (p.k < k_min || p.k > k_max) continue;
    const double a = std::abs(p.cov);
    if (a == 0.0 || a <= p.se) {
      ++m.nodes_excluded;
      continue;
    }
    if (a > 3.0 * p.se) ++strong;
    xs.push_back(static_cast<double>(p.k));
    ys.push_back(std::log(a));
  }
  if (strong < 5) throw std::invalid_argument("too few usable profile points (need 5 above 3 SE)");
  Line l;
  if (method == MassFitMethod::ols) {
    l = least_squares(xs, ys);
  } else {
    const auto h = upper_hull(xs, ys);
    std::vector<double> hx, hy;
    for (auto i : h) {
      hx.push_back(xs[i]);
      hy.push_back(ys[i]);
    }
    l = hx.size() >= 2 ? least_squares(hx, hy) : least_squares(xs, ys);
  }
  m.rate = -l.slope;
  m.intercept = l.intercept;
  m.residual = l.rms;
  m.points_used = xs.size();
  return m;
}

double predicted_mass_rate(const Scales& s) {
  if (s.lambda_mac <= 0) throw std::invalid_argument("scales not initialised");
  return 1.0 / static_cast<double>(s.lambda_mac);
}

double heuristic_model(const HeuristicProfile& h, double r) {
  if (r <= 0) return 0.0;
  const double s = h.rate * r / std::numbers::sqrt2;
  return h.amplitude * std::pow(r, -h.power) * std::sin(s - h.phase) * std::exp(-s);
}

int count_sign_changes(const std::vector<ProfilePoint>& profile, double min_sigma) {
  int changes = 0, last = 0;
  for (const auto& p : profile) {
    if (std::abs(p.cov) <= min_sigma * p.se || p.cov == 0.0) continue;
    const int s = p.cov > 0 ? 1 : -1;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes;
}

namespace {

struct ProfileFunctor {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  std::vector<double> r, y, w;
  double fixed_power;
  bool free_power;

  int inputs() const { return free_power ? 4 : 3; }
  int values() const { return static_cast<int>(r.size()); }

  HeuristicProfile unpack(const Eigen::VectorXd& p) const {
    HeuristicProfile h;
    h.amplitude = p[0];
    h.rate = p[1];
    h.phase = p[2];
    h.power = free_power ? p[3] : fixed_power;
    return h;
  }
  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
    const HeuristicProfile h = unpack(p);
    for (std::size_t i = 0; i < r.size(); ++i)
      f[static_cast<Eigen::Index>(i)] = w[i] * (heuristic_model(h, r[i]) - y[i]);
    return 0;
  }
};

}  // namespace

HeuristicProfile fit_heuristic_profile(const std::vector<ProfilePoint>& profile, int dim, bool free_power) {
  ProfileFunctor fn;
  fn.fixed_power = 0.5 * (dim - 1);
  fn.free_power = free_power;
  double scale = 0;
  for (const auto& p : profile) {
    if (p.distance <= 0) continue;
    fn.r.push_back(p.distance);
    fn.y.push_back(p.cov);
    scale = std::max(scale, std::abs(p.cov));
  }
  if (fn.r.size() < 8) throw std::invalid_argument("need at least 8 profile points away from the origin");
  if (scale == 0) throw std::invalid_argument("profile is identically zero");
  fn.w.assign(fn.r.size(), 1.0 / scale);
  HeuristicProfile best;
  best.residual = std::numeric_limits<double>::infinity();
  best.sign_changes = count_sign_changes(profile);
  const double rmax = fn.r.back();
  Eigen::NumericalDiff<ProfileFunctor> nd(fn);
  for (double rate0 : {0.5 / rmax, 2.0 / rmax, 8.0 / rmax, 0.3, 1.0}) {
    for (double phase0 : {-1.5, -0.5, 0.5, 1.5, 2.5}) {
      Eigen::VectorXd p(fn.inputs());
      HeuristicProfile h0;
      h0.amplitude = 1;
      h0.rate = rate0;
      h0.phase = phase0;
      h0.power = fn.fixed_power;
      const double m0 = heuristic_model(h0, fn.r.front());
      p[0] = m0 != 0 ? fn.y.front() / m0 : fn.y.front();
      p[1] = rate0;
      p[2] = phase0;
      if (free_power) p[3] = fn.fixed_power;
      Eigen::LevenbergMarquardt<Eigen::NumericalDiff<ProfileFunctor>> lm(nd);
      lm.parameters.maxfev = 4000;
      const auto status = lm.minimize(p);
      Eigen::VectorXd f(fn.values());
      fn(p, f);
      const double rms = std::sqrt(f.squaredNorm() / fn.values()) * scale;
      if (std::isfinite(rms) && p[1] > 0 && rms < best.residual) {
        best = fn.unpack(p);
        best.residual = rms;
        best.converged = status != Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation &&
                         status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters;
        best.message = "status " + std::to_string(static_cast<int>(status));
      }
    }
  }
  best.sign_changes = count_sign_changes(profile);
  best.degenerate = best.sign_changes == 0;
  if (best.degenerate) best.message += "; no sign change, phase and power not identified";
  // canonical phase in (-pi, pi] with positive amplitude
  if (best.amplitude < 0) {
    best.amplitude = -best.amplitude;
    best.phase += std::numbers::pi;
  }
  best.phase = std::remainder(best.phase, 2.0 * std::numbers::pi);
  return best;
}

}  // namespace membrane
