// Monte Carlo criteria: 7, 13, 14.
#include <cmath>
#include <numbers>
#include <optional>

#include <boost/math/distributions/chi_squared.hpp>
#include <fmt/format.h>

#include "common.hpp"
#include "experiments/criteria.hpp"
#include "membrane/heat_bath.hpp"
#include "membrane/mass_fit.hpp"
#include "membrane/pinned_measure.hpp"
#include "membrane/scales.hpp"

namespace experiments {

using namespace membrane;
using namespace detail;

namespace {

Mask pinned_mask(const ChainState& st) {
  Mask m = 0;
  for (std::size_t k = 0; k < st.pinned.size(); ++k)
    if (st.pinned[k]) m |= Mask{1} << k;
  return m;
}

// Least-squares slope of y on x with its standard error from the given
// per-point errors (weights 1/se^2).
struct Slope {
  double value = 0, se = 0;
};
Slope weighted_slope(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& se) {
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = 1.0 / (se[i] * se[i]);
    sw += w;
    sx += w * x[i];
    sy += w * y[i];
    sxx += w * x[i] * x[i];
    sxy += w * x[i] * y[i];
  }
  const double det = sw * sxx - sx * sx;
  return {(sw * sxy - sx * sy) / det, std::sqrt(sw / det)};
}

}  // namespace

CriterionResult criterion_heat_bath_exactness(const CriterionContext& ctx) {
  CriterionResult r;
  const std::vector<Site> sites = path_sites(0, 5);
  const double eps = 1.0;
  const auto exact = zeta_exact(1, sites, eps);

  // pilot run for the autocorrelation of the pinned-set observables
  HeatBath pilot(1, sites, eps, ctx.seed, 70);
  pilot.run(1000);
  std::vector<std::vector<double>> obs(sites.size() + 1);
  for (int s = 0; s < 100000; ++s) {
    pilot.sweep();
    const auto& st = pilot.state();
    double count = 0;
    for (std::size_t k = 0; k < sites.size(); ++k) {
      obs[k].push_back(st.pinned[k]);
      count += st.pinned[k];
    }
    obs.back().push_back(count);
  }
  double tau = 0;
  for (const auto& o : obs) tau = std::max(tau, integrated_autocorrelation_time(o));
  const auto thin = static_cast<std::uint64_t>(std::max(10.0, std::ceil(5 * tau)));

  HeatBath hb(1, sites, eps, ctx.seed, 71);
  hb.run(1000);
  const std::uint64_t sweeps = 1000000;
  std::vector<double> counts(exact.subsets(), 0.0);
  std::uint64_t n = 0;
  for (std::uint64_t s = 1; s <= sweeps; ++s) {
    hb.sweep();
    if (s % thin == 0) {
      counts[pinned_mask(hb.state())] += 1;
      ++n;
    }
  }
  double chi2 = 0;
  for (std::size_t a = 0; a < counts.size(); ++a) {
    const double e = static_cast<double>(n) * exact.probability(static_cast<Mask>(a));
    chi2 += (counts[a] - e) * (counts[a] - e) / e;
  }
  const boost::math::chi_squared_distribution<double> law(static_cast<double>(counts.size() - 1));
  const double p_value = boost::math::cdf(boost::math::complement(law, chi2));

  // single free site: each update pins independently with the exact probability
  HeatBath single(1, {Site{0}}, eps, ctx.seed, 72);
  std::vector<double> pins;
  pins.reserve(sweeps);
  for (std::uint64_t s = 0; s < sweeps; ++s) {
    single.sweep();
    pins.push_back(single.state().pinned[0]);
  }
  const SeriesEstimate freq = batch_means(pins, 20);
  const double target = 1.0 / (1.0 + std::sqrt(2.0 * std::numbers::pi / 6.0));
  const double z = std::abs(freq.mean - target) / freq.se;

  r.passed = p_value > 1e-4 && z <= 3.0;
  r.detail = fmt::format("pilot tau {:.3g}, thinning {}, {} samples: chi2 {:.4g} on 31 df, p = {:.4g} (> 1e-4); single-site pin frequency {:.5f} +- {:.5f} vs {:.5f} ({:.2f} SE)",
                         tau, thin, n, chi2, p_value, freq.mean, freq.se, target, z);
  r.metrics = {{"tau", tau}, {"thinning", thin}, {"samples", n}, {"chi2", chi2}, {"p_value", p_value},
               {"pin_frequency", freq.mean}, {"pin_se", freq.se}, {"pin_target", target}};
  return r;
}

CriterionResult criterion_variance_growth(const CriterionContext& ctx) {
  CriterionResult r;
  const std::vector<double> eps = {1e-2, 1e-3, 1e-4};
  std::vector<VarianceEstimate> est(eps.size());
  parallel_for(eps.size(), ctx.threads, [&](std::size_t i) {
    ChainConfig c;
    c.dim = 4;
    c.sites = centred_block(4, 12).sites();
    c.epsilon = eps[i];
    c.seed = ctx.seed;
    c.chain = static_cast<std::uint32_t>(130 + i);
    c.burn_in = 2000;
    c.thinning = 10;
    c.sweeps = 60000;
    c.batches = 20;
    est[i] = estimate_variance(c, Site{0, 0, 0, 0});
    say(ctx, fmt::format("  eps={:g}: E psi^2 = {:.5f} +- {:.5f}", eps[i], est[i].mean, est[i].se));
  });
  std::vector<double> x, y, se;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    x.push_back(std::abs(std::log(eps[i])));
    y.push_back(est[i].mean);
    se.push_back(est[i].se);
  }
  const Slope s = weighted_slope(x, y, se);
  const double lo = 0.5 / (32 * std::numbers::pi * std::numbers::pi);
  const double hi = 1.5 / (16 * std::numbers::pi * std::numbers::pi);
  if (ctx.out) {
    auto csv = ctx.out->csv("criterion13_variance.csv", {"epsilon", "abs_log_epsilon", "variance", "se", "tau_int", "pin_fraction", "boundary_distance"});
    for (std::size_t i = 0; i < eps.size(); ++i) {
      csv << eps[i] << x[i] << y[i] << se[i] << est[i].tau_int << est[i].pin_fraction << static_cast<long long>(est[i].boundary_distance);
      csv.end_row();
    }
  }
  r.passed = s.value >= lo && s.value <= hi;
  r.detail = fmt::format("side-12 box, central site: E psi^2 = {:.5f}, {:.5f}, {:.5f} (se {:.1e}, {:.1e}, {:.1e}); slope {:.5f} +- {:.5f} vs [{:.5f}, {:.5f}]",
                         y[0], y[1], y[2], se[0], se[1], se[2], s.value, s.se, lo, hi);
  r.metrics = {{"epsilon", eps}, {"variance", y}, {"se", se}, {"slope", s.value}, {"slope_se", s.se}, {"band", {lo, hi}}};
  return r;
}

namespace {

struct ProfileRun {
  int dim = 4;
  std::int64_t side = 24;
  double eps = 1e-2;
  Site origin;
  std::vector<double> theta;
  std::int64_t k_max = 0;
  std::uint64_t samples = 0;
  std::uint64_t thinning = 10;
  std::uint64_t burn_in = 300;
  std::uint32_t chain = 0;
  std::vector<ProfilePoint> profile;
  std::optional<MassEstimate> mass;
  std::string mass_error;
};

void run_profile(ProfileRun& run, std::uint64_t seed) {
  ChainConfig c;
  c.dim = run.dim;
  c.sites = cube_box(run.dim, 0, run.side).sites();
  c.epsilon = run.eps;
  c.seed = seed;
  c.chain = run.chain;
  c.burn_in = run.burn_in;
  c.thinning = run.thinning;
  c.sweeps = run.samples * run.thinning;
  c.batches = 20;
  ProfileOptions opts;
  opts.estimator = CovarianceEstimator::quenched;
  opts.solver.direct_limit = 0;  // CG throughout; one column per sample
  opts.solver.green_cg_tolerance = 1e-10;
  run.profile = covariance_profile(c, run.origin, run.theta, run.k_max, opts);
  try {
    run.mass = estimate_mass(run.profile, run.theta, 1, run.k_max);
  } catch (const std::exception& e) {
    run.mass_error = e.what();
  }
}

std::vector<double> diagonal(int d) { return std::vector<double>(static_cast<std::size_t>(d), 1.0 / std::sqrt(static_cast<double>(d))); }

}  // namespace

CriterionResult criterion_covariance_decay(const CriterionContext& ctx) {
  CriterionResult r;
  const double band_lo = 0.5 * std::pow(10.0, 0.25), band_hi = 1.5 * std::pow(10.0, 0.25);
  std::vector<ProfileRun> runs;
  // d = 4: origin three sites in from a corner, profile along the main
  // diagonal, so distances up to 2 lambda_mac = 30 fit in the side-24 box
  for (double eps : {1e-2, 1e-3}) {
    ProfileRun p;
    p.dim = 4;
    p.side = 24;
    p.eps = eps;
    p.origin = Site{3, 3, 3, 3};
    p.theta = diagonal(4);
    p.k_max = 36;
    p.samples = 80;
    p.chain = static_cast<std::uint32_t>(runs.size() + 140);
    runs.push_back(p);
  }
  for (double eps : {1e-2, 1e-3}) {
    ProfileRun p;
    p.dim = 5;
    p.side = 8;
    p.eps = eps;
    p.origin = Site{1, 1, 1, 1, 1};
    p.theta = diagonal(5);
    p.k_max = 15;
    p.samples = 200;
    p.burn_in = 500;
    p.chain = static_cast<std::uint32_t>(runs.size() + 140);
    runs.push_back(p);
  }
  parallel_for(runs.size(), ctx.threads, [&](std::size_t i) {
    run_profile(runs[i], ctx.seed);
    say(ctx, fmt::format("  d={} eps={:g}: profile done", runs[i].dim, runs[i].eps));
  });
  if (ctx.out) {
    auto csv = ctx.out->csv("criterion14_profiles.csv", {"d", "epsilon", "k", "site", "distance", "cov", "se", "n_samples", "tau_int"});
    for (const auto& run : runs)
      for (const auto& pt : run.profile) {
        csv << run.dim << run.eps << static_cast<long long>(pt.k) << pt.site << pt.distance << pt.cov << pt.se << pt.n_samples << pt.tau_int;
        csv.end_row();
      }
  }

  // decay presence at eps = 1e-2 in d = 4
  const Scales sc = scales_from_epsilon(4, 1e-2);
  const auto near_k = (sc.lambda_mac + 1) / 2;
  const auto far_k = 2 * sc.lambda_mac;
  auto at_distance = [](const ProfileRun& run, double dist) {
    const ProfilePoint* best = &run.profile.front();
    for (const auto& pt : run.profile)
      if (std::abs(pt.distance - dist) < std::abs(best->distance - dist)) best = &pt;
    return *best;
  };
  const ProfilePoint pn = at_distance(runs[0], static_cast<double>(near_k));
  const ProfilePoint pf = at_distance(runs[0], static_cast<double>(far_k));
  const bool decay_ok = std::abs(pf.cov) <= 0.5 * std::abs(pn.cov) && std::abs(pn.cov) > 3 * pn.se && std::abs(pf.cov) > 3 * pf.se;

  auto ratio_of = [](const ProfileRun& a, const ProfileRun& b) -> double {
    if (!a.mass || !b.mass || b.mass->rate <= 0) return NAN;
    return a.mass->rate / b.mass->rate;
  };
  const double ratio4 = ratio_of(runs[0], runs[1]);
  const double ratio5 = ratio_of(runs[2], runs[3]);
  const bool ratio4_ok = ratio4 >= band_lo && ratio4 <= band_hi;
  const bool ratio5_ok = ratio5 >= band_lo && ratio5 <= band_hi;
  auto rate_text = [](const ProfileRun& run) {
    return run.mass ? fmt::format("{:.4g}", run.mass->rate) : "unfit (" + run.mass_error + ")";
  };
  r.passed = decay_ok && ratio4_ok && ratio5_ok;
  r.detail = fmt::format(
      "d=4 eps=1e-2: |cov| {:.3e} +- {:.1e} at distance {:.1f}, {:.3e} +- {:.1e} at {:.1f} (decay {}); mass rates d=4 {} / {} ratio {:.3g}, d=5 {} / {} ratio {:.3g}, band [{:.3f}, {:.3f}]",
      std::abs(pn.cov), pn.se, pn.distance, std::abs(pf.cov), pf.se, pf.distance, decay_ok ? "ok" : "FAILED",
      rate_text(runs[0]), rate_text(runs[1]), ratio4, rate_text(runs[2]), rate_text(runs[3]), ratio5, band_lo, band_hi);
  r.metrics = {{"near_cov", pn.cov}, {"near_se", pn.se}, {"far_cov", pf.cov}, {"far_se", pf.se}, {"decay_ok", decay_ok},
               {"ratio_d4", ratio4}, {"ratio_d5", ratio5}};
  return r;
}

}  // namespace experiments
