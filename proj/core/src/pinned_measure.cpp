#include "membrane/pinned_measure.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "membrane/errors.hpp"
#include "membrane/philox.hpp"

namespace membrane {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// k log y with the convention 0 log 0 = 0.
double xlogy(int k, double y) { return k == 0 ? 0.0 : k * std::log(y); }

void check_size(std::size_t n) {
  if (n > kMaxExactSites)
    throw std::invalid_argument("exact enumeration limited to " + std::to_string(kMaxExactSites) + " sites");
}

}  // namespace

PinnedSetDistribution PinnedSetDistribution::from_log_weights(int dim, std::vector<Site> sites, double epsilon,
                                                              std::vector<double> log_weights) {
  check_size(sites.size());
  if (log_weights.size() != (std::size_t{1} << sites.size()))
    throw std::invalid_argument("need one weight per subset");
  PinnedSetDistribution d;
  d.mode_ = Mode::exact;
  d.dim_ = dim;
  d.sites_ = std::move(sites);
  d.epsilon_ = epsilon;
  d.log_w_ = std::move(log_weights);
  const double mx = *std::max_element(d.log_w_.begin(), d.log_w_.end());
  if (!std::isfinite(mx)) throw NumericalFailure("all subset weights vanish");
  double s = 0;
  for (double lw : d.log_w_) s += std::exp(lw - mx);
  d.log_norm_ = mx + std::log(s);
  d.prob_.resize(d.log_w_.size());
  for (std::size_t k = 0; k < d.log_w_.size(); ++k) d.prob_[k] = std::exp(d.log_w_[k] - d.log_norm_);
  return d;
}

PinnedSetDistribution PinnedSetDistribution::from_samples(int dim, std::vector<Site> sites, double epsilon,
                                                          std::vector<Mask> samples) {
  check_size(sites.size());
  PinnedSetDistribution d;
  d.mode_ = Mode::sampled;
  d.dim_ = dim;
  d.sites_ = std::move(sites);
  d.epsilon_ = epsilon;
  d.samples_ = std::move(samples);
  if (d.samples_.empty()) throw std::invalid_argument("no samples");
  d.prob_.assign(d.subsets(), 0.0);
  for (Mask m : d.samples_) d.prob_.at(m) += 1.0;
  for (double& p : d.prob_) p /= static_cast<double>(d.samples_.size());
  return d;
}

void PinnedSetDistribution::require_exact(const char* what) const {
  if (!exact()) throw std::invalid_argument(std::string(what) + " needs an exact distribution");
}

Mask PinnedSetDistribution::mask_of(std::span<const Site> set) const {
  Mask m = 0;
  for (const auto& x : set) m |= Mask{1} << index_of(x);
  return m;
}

std::size_t PinnedSetDistribution::index_of(const Site& x) const {
  auto it = std::find(sites_.begin(), sites_.end(), x);
  if (it == sites_.end()) throw std::invalid_argument("site " + x.str() + " not in the volume");
  return static_cast<std::size_t>(it - sites_.begin());
}

double PinnedSetDistribution::probability(Mask a) const { return prob_.at(a); }

double PinnedSetDistribution::log_weight(Mask a) const {
  require_exact("log_weight");
  return log_w_.at(a);
}

double PinnedSetDistribution::conditional_pin_probability(std::size_t x, Mask e) const {
  require_exact("conditional probability");
  const Mask bit = Mask{1} << x;
  if (e & bit) throw std::invalid_argument("conditioning set contains the site");
  const double lin = log_w_.at(e | bit), lout = log_w_.at(e);
  if (lin == kNegInf && lout == kNegInf) return std::numeric_limits<double>::quiet_NaN();
  return 1.0 / (1.0 + std::exp(lout - lin));
}

Estimate PinnedSetDistribution::expectation(const std::function<double(Mask)>& f) const {
  Estimate e;
  if (exact()) {
    for (std::size_t k = 0; k < prob_.size(); ++k)
      if (prob_[k] > 0) e.value += prob_[k] * f(static_cast<Mask>(k));
    return e;
  }
  double s = 0, s2 = 0;
  for (Mask m : samples_) {
    const double v = f(m);
    s += v;
    s2 += v * v;
  }
  const auto n = static_cast<double>(samples_.size());
  e.value = s / n;
  e.se = n > 1 ? std::sqrt(std::max(0.0, (s2 / n - e.value * e.value) / (n - 1))) : 0.0;
  return e;
}

namespace {

struct PinTree {
  int dim;
  const std::vector<Site>& sites;
  ZetaOptions opts;
  ZetaStats stats;
  std::vector<double> out;
  std::size_t visited = 0;

  void visit(Mask a, std::size_t next, DenseGreen g) {
    if (opts.drift_check_period > 0 && ++visited % opts.drift_check_period == 0) {
      DenseGreen fresh = DenseGreen::assemble(dim, g.domain());
      const double drift = std::abs(fresh.log_partition() - g.log_partition());
      ++stats.drift_checks;
      stats.max_drift = std::max(stats.max_drift, drift);
      if (drift > opts.drift_tolerance * std::max(1.0, std::abs(fresh.log_partition()))) {
        ++stats.reassemblies;
        g = std::move(fresh);
      }
    }
    out[a] = g.log_partition();
    for (std::size_t k = next; k < sites.size(); ++k) visit(a | (Mask{1} << k), k + 1, g.pin(sites[k]));
  }
};

}  // namespace

std::vector<double> log_partitions_all_subsets(int dim, const std::vector<Site>& sites, ZetaOptions opts,
                                               ZetaStats* stats) {
  check_size(sites.size());
  for (std::size_t a = 0; a < sites.size(); ++a)
    for (std::size_t b = a + 1; b < sites.size(); ++b)
      if (sites[a] == sites[b]) throw std::invalid_argument("duplicate site " + sites[a].str());
  PinTree tree{dim, sites, opts, {}, std::vector<double>(std::size_t{1} << sites.size(), 0.0)};
  tree.visit(0, 0, DenseGreen::assemble(dim, sites));
  if (stats) *stats = tree.stats;
  return std::move(tree.out);
}

PinnedSetDistribution zeta_exact(int dim, std::vector<Site> sites, double epsilon, ZetaOptions opts,
                                 ZetaStats* stats) {
  check_dim(dim);
  if (!(epsilon >= 0)) throw std::invalid_argument("epsilon must be nonnegative");
  check_size(sites.size());
  const std::size_t n = sites.size();
  std::vector<double> lw(std::size_t{1} << n, kNegInf);
  if (std::isinf(epsilon)) {
    // infinitely strong pinning: everything is pinned
    lw.back() = 0.0;
    return PinnedSetDistribution::from_log_weights(dim, std::move(sites), epsilon, std::move(lw));
  }
  const std::vector<double> log_z = log_partitions_all_subsets(dim, sites, opts, stats);
  const double log_eps = std::log(epsilon);
  for (std::size_t a = 0; a < lw.size(); ++a) {
    const int k = std::popcount(static_cast<Mask>(a));
    if (k > 0 && epsilon == 0.0) continue;
    lw[a] = (k == 0 ? 0.0 : k * log_eps) + log_z[a];
  }
  return PinnedSetDistribution::from_log_weights(dim, std::move(sites), epsilon, std::move(lw));
}

PinnedSetDistribution bernoulli_distribution(int dim, std::vector<Site> sites, double p) {
  if (!(p >= 0 && p <= 1)) throw std::invalid_argument("p must lie in [0,1]");
  const int n = static_cast<int>(sites.size());
  std::vector<double> lw(std::size_t{1} << n);
  for (std::size_t a = 0; a < lw.size(); ++a) {
    const int k = std::popcount(static_cast<Mask>(a));
    const double l = xlogy(k, p) + xlogy(n - k, 1.0 - p);
    lw[a] = std::isnan(l) ? kNegInf : l;
  }
  return PinnedSetDistribution::from_log_weights(dim, std::move(sites), p, std::move(lw));
}

double conditional_pin_probability(double green_xx, double epsilon) {
  if (!(green_xx > 0)) throw std::invalid_argument("variance must be positive");
  if (!(epsilon >= 0)) throw std::invalid_argument("epsilon must be nonnegative");
  if (std::isinf(epsilon)) return 1.0;
  // epsilon / (epsilon + sqrt(2 pi G)) avoids dividing by epsilon = 0
  return epsilon / (epsilon + std::sqrt(2.0 * std::numbers::pi * green_xx));
}

double conditional_pin_probability(const GreenSolver& free_solver, const Site& x, double epsilon) {
  if (!free_solver.is_free(x)) throw std::invalid_argument("site " + x.str() + " is pinned or exterior");
  return conditional_pin_probability(free_solver.variance(x), epsilon);
}

FkgReport fkg_lattice_check(std::span<const double> prob, std::size_t n_sites, double slack) {
  check_size(n_sites);
  const std::size_t m = std::size_t{1} << n_sites;
  if (prob.size() != m) throw std::invalid_argument("probability table has the wrong size");
  FkgReport rep;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) {
      ++rep.pairs_checked;
      const double lhs = prob[a | b] * prob[a & b];
      const double rhs = prob[a] * prob[b];
      if (lhs < rhs * (1.0 - slack))
        rep.violations.push_back({static_cast<Mask>(a), static_cast<Mask>(b), lhs, rhs});
    }
  return rep;
}

FkgReport fkg_lattice_check(const PinnedSetDistribution& dist, double slack) {
  if (!dist.exact()) throw std::invalid_argument("FKG lattice check needs an exact distribution");
  return fkg_lattice_check(dist.probabilities(), dist.size(), slack);
}

DominationReport strong_domination_check(const PinnedSetDistribution& dist, double p, DominationDirection direction,
                                         double slack, std::size_t samples, std::uint64_t seed) {
  if (!dist.exact()) throw std::invalid_argument("domination check needs an exact distribution");
  DominationReport rep;
  rep.direction = direction;
  rep.p = p;
  const std::size_t n = dist.size();
  auto check = [&](std::size_t x, Mask e) {
    const double c = dist.conditional_pin_probability(x, e);
    if (std::isnan(c)) return;  // conditioning on a null event
    ++rep.pairs_checked;
    rep.min_conditional = std::min(rep.min_conditional, c);
    rep.max_conditional = std::max(rep.max_conditional, c);
    const bool bad = direction == DominationDirection::dominates ? c < p - slack : c > p + slack;
    if (bad) rep.violations.push_back({x, e, c});
  };
  if (n <= 14) {
    rep.exhaustive = true;
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t e = 0; e < dist.subsets(); ++e)
        if (!(e & (std::size_t{1} << x))) check(x, static_cast<Mask>(e));
    return rep;
  }
  rep.exhaustive = false;
  std::vector<double> cdf(dist.subsets());
  double acc = 0;
  for (std::size_t k = 0; k < cdf.size(); ++k) cdf[k] = (acc += dist.probability(static_cast<Mask>(k)));
  PhiloxStream rng(seed, 0);
  for (std::size_t s = 0; s < samples; ++s) {
    const double u = rng.uniform() * acc;
    const auto a = static_cast<Mask>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    const std::size_t x = rng() % n;
    check(x, static_cast<Mask>(std::min<std::size_t>(a, cdf.size() - 1) & ~(Mask{1} << x)));
  }
  return rep;
}

Estimate empty_probability(const PinnedSetDistribution& dist, Mask e) {
  return dist.expectation([e](Mask a) { return (a & e) == 0 ? 1.0 : 0.0; });
}

std::vector<double> subset_sum_table(const PinnedSetDistribution& dist) {
  std::vector<double> t = dist.probabilities();
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const std::size_t bit = std::size_t{1} << i;
    for (std::size_t s = 0; s < t.size(); ++s)
      if (s & bit) t[s] += t[s ^ bit];
  }
  return t;
}

bool is_increasing(const std::function<double(Mask)>& f, std::size_t n_sites) {
  check_size(n_sites);
  const std::size_t m = std::size_t{1} << n_sites;
  std::vector<double> v(m);
  for (std::size_t a = 0; a < m; ++a) v[a] = f(static_cast<Mask>(a));
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t i = 0; i < n_sites; ++i)
      if (!(a & (std::size_t{1} << i)) && v[a | (std::size_t{1} << i)] < v[a]) return false;
  return true;
}

MonotonicityResult volume_monotonicity_check(const PinnedSetDistribution& small, const PinnedSetDistribution& large,
                                             const std::function<double(Mask)>& f, double slack) {
  if (!small.exact() || !large.exact()) throw std::invalid_argument("volume monotonicity needs exact distributions");
  if (!is_increasing(f, small.size())) throw std::invalid_argument("set function is not increasing");
  std::vector<std::size_t> pos(small.size());
  for (std::size_t k = 0; k < small.size(); ++k) pos[k] = large.index_of(small.sites()[k]);
  auto restrict = [&](Mask a) {
    Mask r = 0;
    for (std::size_t k = 0; k < pos.size(); ++k)
      if (a & (Mask{1} << pos[k])) r |= Mask{1} << k;
    return r;
  };
  MonotonicityResult res;
  res.small_volume = small.expectation(f).value;
  res.large_volume = large.expectation([&](Mask a) { return f(restrict(a)); }).value;
  res.ok = res.small_volume >= res.large_volume - slack * std::max(1.0, std::abs(res.large_volume));
  return res;
}

Estimate pinned_density(const PinnedSetDistribution& dist) {
  if (dist.size() == 0) return {};
  const auto n = static_cast<double>(dist.size());
  return dist.expectation([n](Mask a) { return std::popcount(a) / n; });
}

void write_table(std::ostream& os, const PinnedSetDistribution& dist) {
  if (!dist.exact()) throw std::invalid_argument("only exact distributions serialise to a table");
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << "# mask,size,log_weight,probability\n" << std::setprecision(17);
  for (std::size_t a = 0; a < dist.subsets(); ++a) {
    const auto m = static_cast<Mask>(a);
    os << "0x" << std::hex << m << std::dec << ',' << std::popcount(m) << ',' << dist.log_weight(m) << ','
       << dist.probability(m) << '\n';
  }
  os.flags(flags);
  os.precision(prec);
}

}  // namespace membrane
