#include "experiments/commands.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "common.hpp"
#include "experiments/criteria.hpp"
#include "experiments/report.hpp"
#include "membrane/cutoff.hpp"
#include "membrane/errors.hpp"
#include "membrane/green_solver.hpp"
#include "membrane/hardy_rellich.hpp"
#include "membrane/heat_bath.hpp"
#include "membrane/hierarchy.hpp"
#include "membrane/hole_filler.hpp"
#include "membrane/mass_fit.hpp"
#include "membrane/pinned_measure.hpp"
#include "membrane/square_well.hpp"
#include "membrane/tail_bound.hpp"

namespace experiments {

using namespace membrane;
using namespace detail;

namespace {

// Everything a subcommand needs: the validated config, its output directory
// and where to print the short report.
struct Run {
  const Config& cfg;
  RunOutput& out;
  std::uint64_t seed;
  int threads;
  std::ostream* console;

  void print(const std::string& line) const {
    if (console) *console << line << '\n';
  }
};

std::int64_t int_in(const Config& c, const std::string& key, std::int64_t def, std::int64_t lo, std::int64_t hi) {
  const std::int64_t v = c.get_int(key, def);
  if (v < lo || v > hi) throw ConfigError(fmt::format("{} = {} outside [{}, {}]", key, v, lo, hi));
  return v;
}

double double_in(const Config& c, const std::string& key, double def, double lo, double hi) {
  const double v = c.get_double(key, def);
  if (!(v >= lo && v <= hi)) throw ConfigError(fmt::format("{} = {} outside [{}, {}]", key, v, lo, hi));
  return v;
}

std::vector<double> epsilons(const Config& c, std::vector<double> def) {
  auto v = c.get_doubles("epsilon", def);
  if (v.empty()) throw ConfigError("epsilon list is empty");
  for (double e : v)
    if (!(e >= 0)) throw ConfigError(fmt::format("epsilon = {} must be >= 0", e));
  return v;
}

int dimension(const Config& c, int def) { return static_cast<int>(int_in(c, "dim", def, 1, kMaxDim)); }

// Block of `side` sites per axis; `shape=path` in d = 1 is the same thing.
std::vector<Site> volume_sites(const Config& c, int d, std::int64_t def_side, std::size_t max_sites) {
  const std::int64_t side = int_in(c, "side", def_side, 1, 1 << 20);
  const double n = std::pow(static_cast<double>(side), d);
  if (n > static_cast<double>(max_sites))
    throw ConfigError(fmt::format("side {} in d = {} gives {} sites, limit {}", side, d, n, max_sites));
  return cube_box(d, 0, side).sites();
}

// ---------------------------------------------------------------- green

int cmd_green(const Run& run) {
  const int d = dimension(run.cfg, 2);
  const auto sites = volume_sites(run.cfg, d, 8, 2000000);
  const Site source = run.cfg.get_site("source", d, sites[sites.size() / 2]);
  const GreenSolver g = GreenSolver::assemble(d, sites);
  if (!g.is_free(source)) throw ConfigError("source " + source.str() + " is not in the volume");
  const LatticeField col = g.green_column(source);
  // every variance is a separate solve; beyond the limit the column stays empty
  const auto limit = static_cast<std::size_t>(int_in(run.cfg, "variance_limit", 4096, 0, 1LL << 30));
  const bool all_variances = g.size() <= limit;
  auto csv = run.out.csv("green.csv", {"site", "green_from_source", "variance"});
  for (const Site& x : g.domain()) {
    csv << x << col(x);
    if (all_variances)
      csv << g.variance(x);
    else
      csv << "";
    csv.end_row();
  }
  const LogPartition lz = g.log_partition();
  run.out.summary()["sites"] = g.size();
  run.out.summary()["backend"] = g.backend();
  run.out.summary()["log_partition"] = lz.value;
  run.out.summary()["variance_at_source"] = g.variance(source);
  run.print(fmt::format("{} sites ({}), G(source,source) = {:.12g}, log Z = {:.12g}", g.size(), g.backend(),
                        g.variance(source), lz.value));
  return kExitOk;
}

// ---------------------------------------------------------------- zeta

int cmd_zeta(const Run& run) {
  const int d = dimension(run.cfg, 1);
  const auto sites = volume_sites(run.cfg, d, 6, kMaxExactSites);
  const double eps = epsilons(run.cfg, {1.0}).front();
  const auto dist = zeta_exact(d, sites, eps);
  auto csv = run.out.csv("zeta.csv", {"mask", "size", "log_weight", "probability"});
  for (std::size_t a = 0; a < dist.subsets(); ++a) {
    csv << fmt::format("{:x}", a) << std::popcount(static_cast<Mask>(a)) << dist.log_weight(static_cast<Mask>(a))
        << dist.probability(static_cast<Mask>(a));
    csv.end_row();
  }
  const double density = pinned_density(dist).value;
  run.out.summary()["sites"] = dist.size();
  run.out.summary()["density"] = density;
  run.out.summary()["log_normaliser"] = dist.log_normaliser();
  run.print(fmt::format("{} subsets, pinned density {:.12g}", dist.subsets(), density));
  return kExitOk;
}

// ---------------------------------------------------------------- fkg

int cmd_fkg(const Run& run) {
  const int d = dimension(run.cfg, 1);
  const auto sites = volume_sites(run.cfg, d, 8, 12);
  const double slack = double_in(run.cfg, "slack", 1e-9, 0, 1);
  auto csv = run.out.csv("fkg.csv", {"epsilon", "pairs", "violations", "worst_ratio"});
  std::size_t total = 0;
  for (double eps : epsilons(run.cfg, {1.0})) {
    const auto dist = zeta_exact(d, sites, eps);
    const FkgReport rep = fkg_lattice_check(dist, slack);
    double worst = 1;
    for (const auto& v : rep.violations) worst = std::min(worst, v.lhs / v.rhs);
    csv << eps << rep.pairs_checked << rep.violations.size() << worst;
    csv.end_row();
    total += rep.violations.size();
    run.print(fmt::format("eps {}: {} violations / {} pairs", eps, rep.violations.size(), rep.pairs_checked));
  }
  run.out.summary()["violations"] = total;
  return total == 0 ? kExitOk : kExitNumerical;
}

// ---------------------------------------------------------------- domination

int cmd_domination(const Run& run) {
  const int d = dimension(run.cfg, 1);
  const auto sites = volume_sites(run.cfg, d, 6, kMaxExactSites);
  const std::string dir = run.cfg.get_string("direction", "both");
  if (dir != "dominates" && dir != "dominated" && dir != "both")
    throw ConfigError("direction must be dominates, dominated or both");
  const auto samples = static_cast<std::size_t>(int_in(run.cfg, "samples", 10000, 1, 100000000));
  auto csv = run.out.csv("domination.csv", {"epsilon", "direction", "p", "pairs", "exhaustive", "min_conditional",
                                            "max_conditional", "violations"});
  for (double eps : epsilons(run.cfg, {1e-2, 1e-1, 1.0})) {
    const auto dist = zeta_exact(d, sites, eps);
    // without an explicit p, report the sharpest Bernoulli brackets
    const DominationReport probe = strong_domination_check(dist, 0.0, DominationDirection::dominates, 1e-12, samples, run.seed);
    auto one = [&](DominationDirection dd, const char* name, double def_p) {
      const double p = run.cfg.has("p") ? double_in(run.cfg, "p", 0, 0, 1) : def_p;
      const DominationReport rep = strong_domination_check(dist, p, dd, 1e-12, samples, run.seed);
      csv << eps << name << p << rep.pairs_checked << (rep.exhaustive ? 1 : 0) << rep.min_conditional
          << rep.max_conditional << rep.violations.size();
      csv.end_row();
      run.print(fmt::format("eps {}: {} Bernoulli({:.6g}): {} violations / {} pairs (conditionals in [{:.6g}, {:.6g}])", eps,
                            name, p, rep.violations.size(), rep.pairs_checked, rep.min_conditional, rep.max_conditional));
    };
    if (dir != "dominated") one(DominationDirection::dominates, "dominates", probe.min_conditional);
    if (dir != "dominates") one(DominationDirection::dominated, "dominated", probe.max_conditional);
    run.out.summary()["brackets"].push_back(
        {{"epsilon", eps}, {"c", probe.min_conditional / std::max(eps, 1e-300)}, {"C", probe.max_conditional / std::max(eps, 1e-300)}});
  }
  return kExitOk;
}

// ---------------------------------------------------------------- sampling

ChainConfig chain_from(const Config& c, int d, std::vector<Site> sites, double eps, std::uint64_t seed) {
  ChainConfig cc;
  cc.dim = d;
  cc.sites = std::move(sites);
  cc.epsilon = eps;
  cc.seed = seed;
  cc.burn_in = static_cast<std::uint64_t>(int_in(c, "burn_in", 1000, 0, 1LL << 40));
  cc.thinning = static_cast<std::uint64_t>(int_in(c, "thinning", 10, 1, 1LL << 30));
  cc.sweeps = static_cast<std::uint64_t>(int_in(c, "sweeps", 10000, 1, 1LL << 40));
  cc.batches = static_cast<int>(int_in(c, "batches", 20, 10, 1 << 20));
  if (cc.sweeps / cc.thinning < static_cast<std::uint64_t>(cc.batches))
    throw ConfigError(fmt::format("sweeps / thinning = {} gives fewer samples than the {} batches", cc.sweeps / cc.thinning,
                                  cc.batches));
  return cc;
}

int cmd_variance_sweep(const Run& run) {
  const int d = dimension(run.cfg, 4);
  const std::int64_t side = int_in(run.cfg, "side", 12, 1, 64);
  const auto eps = epsilons(run.cfg, {1e-2, 1e-3, 1e-4});
  if (eps.size() < 3) throw ConfigError(fmt::format("variance-sweep needs at least 3 epsilon values for the slope fit, got {}", eps.size()));
  for (double e : eps)
    if (!(e > 0 && e < 1)) throw ConfigError("variance-sweep needs 0 < epsilon < 1");
  const SiteBox box = centred_block(d, side);
  const Site x = run.cfg.get_site("site", d, Site(d));
  if (!box.contains(x)) throw ConfigError("site " + x.str() + " is outside the volume");
  std::vector<VarianceEstimate> est(eps.size());
  parallel_for(eps.size(), run.threads, [&](std::size_t i) {
    ChainConfig cc = chain_from(run.cfg, d, box.sites(), eps[i], run.seed);
    cc.chain = static_cast<std::uint32_t>(i);
    est[i] = estimate_variance(cc, x);
  });
  auto csv = run.out.csv("variance_sweep.csv", {"epsilon", "abs_log_epsilon", "variance", "se", "tau_int", "n_samples",
                                                "pin_fraction", "boundary_distance"});
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double lx = std::abs(std::log(eps[i]));
    csv << eps[i] << lx << est[i].mean << est[i].se << est[i].tau_int << est[i].n_samples << est[i].pin_fraction
        << static_cast<long long>(est[i].boundary_distance);
    csv.end_row();
    sx += lx;
    sy += est[i].mean;
    sxx += lx * lx;
    sxy += lx * est[i].mean;
  }
  const auto n = static_cast<double>(eps.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  run.out.summary()["slope"] = slope;
  run.out.summary()["band"] = {1 / (32 * std::numbers::pi * std::numbers::pi), 1 / (16 * std::numbers::pi * std::numbers::pi)};
  run.print(fmt::format("slope of E psi_x^2 in |log eps|: {:.6g}", slope));
  return kExitOk;
}

struct ProfileSetup {
  int d;
  ChainConfig chain;
  Site origin;
  std::vector<double> theta;
  std::int64_t k_max;
  ProfileOptions opts;
};

ProfileSetup profile_setup(const Run& run) {
  ProfileSetup p;
  p.d = dimension(run.cfg, 4);
  const std::int64_t side = int_in(run.cfg, "side", 12, 2, 64);
  const double eps = epsilons(run.cfg, {1e-2}).front();
  p.chain = chain_from(run.cfg, p.d, cube_box(p.d, 0, side).sites(), eps, run.seed);
  p.origin = run.cfg.get_site("origin", p.d, cube_box(p.d, 1, 1).lo);
  p.theta = run.cfg.get_doubles("theta", std::vector<double>(static_cast<std::size_t>(p.d), 1.0 / std::sqrt(p.d)));
  if (static_cast<int>(p.theta.size()) != p.d) throw ConfigError("theta needs dim components");
  double norm = 0;
  for (double t : p.theta) norm += t * t;
  if (std::abs(norm - 1) > 1e-9) throw ConfigError("theta must be a unit vector");
  p.k_max = int_in(run.cfg, "k_max", side - 2, 0, 1 << 20);
  const SiteBox box = cube_box(p.d, 0, side);
  for (const Site& y : ray_sites(p.origin, p.theta, p.k_max))
    if (!box.contains(y)) throw ConfigError("the ray leaves the volume at " + y.str() + "; lower k_max");
  const std::string est = run.cfg.get_string("estimator", "quenched");
  if (est == "raw")
    p.opts.estimator = CovarianceEstimator::raw;
  else if (est == "quenched")
    p.opts.estimator = CovarianceEstimator::quenched;
  else
    throw ConfigError("estimator must be raw or quenched");
  return p;
}

void write_profile(const Run& run, const std::vector<ProfilePoint>& prof) {
  auto csv = run.out.csv("profile.csv", {"k", "cov", "se", "n_samples", "site", "distance", "tau_int"});
  for (const auto& pt : prof) {
    csv << static_cast<long long>(pt.k) << pt.cov << pt.se << pt.n_samples << pt.site << pt.distance << pt.tau_int;
    csv.end_row();
  }
}

int cmd_covariance_decay(const Run& run) {
  const ProfileSetup p = profile_setup(run);
  const auto prof = covariance_profile(p.chain, p.origin, p.theta, p.k_max, p.opts);
  write_profile(run, prof);
  const int changes = count_sign_changes(prof);
  run.out.summary()["sign_changes"] = changes;
  run.out.summary()["variance_at_origin"] = prof.front().cov;
  run.print(fmt::format("{} profile points, {} sign changes beyond 1 SE", prof.size(), changes));
  return kExitOk;
}

int cmd_mass(const Run& run) {
  const ProfileSetup p = profile_setup(run);
  const auto prof = covariance_profile(p.chain, p.origin, p.theta, p.k_max, p.opts);
  write_profile(run, prof);
  const std::int64_t k_min = int_in(run.cfg, "fit_k_min", 1, 0, p.k_max);
  const std::int64_t k_max = int_in(run.cfg, "fit_k_max", p.k_max, k_min, p.k_max);
  const std::string method = run.cfg.get_string("fit", "envelope");
  if (method != "envelope" && method != "ols") throw ConfigError("fit must be envelope or ols");
  const MassEstimate m = estimate_mass(prof, p.theta, k_min, k_max, method == "ols" ? MassFitMethod::ols : MassFitMethod::envelope);
  const HeuristicProfile h = fit_heuristic_profile(prof, p.d);
  const Scales sc = scales_from_epsilon(p.d, p.chain.epsilon);
  auto os = run.out.text("mass.txt");
  os << fmt::format("theta = {}\nrate = {}\nintercept = {}\nwindow = {} {}\nresidual = {}\npoints_used = {}\n"
                    "nodes_excluded = {}\npredicted_rate_scale = {}\nheuristic_rate = {}\nheuristic_phase = {}\n"
                    "heuristic_residual = {}\nheuristic_converged = {}\nheuristic_degenerate = {}\n",
                    fmt::join(p.theta, " "), num(m.rate), num(m.intercept), m.k_min, m.k_max, num(m.residual), m.points_used,
                    m.nodes_excluded, num(predicted_mass_rate(sc)), num(h.rate), num(h.phase), num(h.residual),
                    h.converged ? 1 : 0, h.degenerate ? 1 : 0);
  run.out.summary()["rate"] = m.rate;
  run.out.summary()["predicted_rate_scale"] = predicted_mass_rate(sc);
  run.print(fmt::format("mass rate {:.6g} (1/lambda_mac = {:.6g}), fit residual {:.3g}", m.rate, predicted_mass_rate(sc), m.residual));
  return kExitOk;
}

// ---------------------------------------------------------------- inequalities

int cmd_hardy_rellich(const Run& run) {
  const int d = dimension(run.cfg, 4);
  const std::int64_t side_lo = int_in(run.cfg, "side_min", 6, 2, 64);
  const std::int64_t side_hi = int_in(run.cfg, "side_max", 12, side_lo, 64);
  const auto radii = run.cfg.get_ints("radius", std::vector<std::int64_t>{16, 32});
  for (auto rr : radii)
    if (rr < 2) throw ConfigError("radius must be >= 2");
  const auto instances = static_cast<std::size_t>(int_in(run.cfg, "instances", 200, 1, 1000000));
  const double max_density = double_in(run.cfg, "max_density", 0.2, 0, 1);
  const ConeSet cones = simplex_directions(d);
  const ConeOffsets offsets(cones, *std::max_element(radii.begin(), radii.end()));
  std::vector<std::vector<RatioResult>> res(instances);
  std::vector<std::int64_t> sides(instances);
  parallel_for(instances, run.threads, [&](std::size_t t) {
    auto rng = stream_for(run.seed, t);
    sides[t] = uniform_int(rng, side_lo, side_hi);
    const SiteBox lambda = centred_block(d, sides[t]);
    const double density = uniform_real(rng, 0, max_density);
    std::vector<Site> pinned, free_sites;
    lambda.for_each([&](const Site& y) { (rng.uniform() < density ? pinned : free_sites).push_back(y); });
    LatticeField u(d);
    if (!free_sites.empty()) {
      const GreenSolver g = GreenSolver::assemble(d, free_sites);
      Eigen::VectorXd f(static_cast<Eigen::Index>(free_sites.size()));
      for (Eigen::Index k = 0; k < f.size(); ++k) f[k] = rng.normal();
      const Eigen::VectorXd sol = g.solve(f);
      for (std::size_t k = 0; k < g.size(); ++k) u.set(g.domain()[k], sol[static_cast<Eigen::Index>(k)]);
    }
    const PinnedExt ext = PinnedExt::from_box(lambda, pinned);
    for (auto rr : radii) res[t].push_back(local_poincare_ratio(u, ext, {lambda}, rr, offsets));
  });
  auto csv = run.out.csv("hardy_rellich.csv", {"instance", "d", "R", "lhs", "rhs_base", "ratio"});
  std::vector<double> max_ratio(radii.size(), 0.0);
  for (std::size_t t = 0; t < instances; ++t)
    for (std::size_t k = 0; k < radii.size(); ++k) {
      csv << t << d << static_cast<long long>(radii[k]) << res[t][k].lhs << res[t][k].rhs << res[t][k].ratio;
      csv.end_row();
      max_ratio[k] = std::max(max_ratio[k], res[t][k].ratio);
    }
  for (std::size_t k = 0; k < radii.size(); ++k) {
    run.out.summary()["max_ratio"][std::to_string(radii[k])] = max_ratio[k];
    run.print(fmt::format("R = {}: max ratio {:.6g} over {} instances", radii[k], max_ratio[k], instances));
  }
  return kExitOk;
}

int cmd_interpolation(const Run& run) {
  const int d = dimension(run.cfg, 2);
  std::int64_t min_side = interpolation_min_side(d);
  if (min_side % 2 == 0) ++min_side;
  const std::int64_t side = int_in(run.cfg, "side", min_side, min_side, 1 << 12);
  if (side % 2 == 0) throw ConfigError("side must be odd");
  const auto instances = int_in(run.cfg, "instances", 100, 1, 1000000);
  const BoxSpec q = BoxSpec::of_side(Site(d), side);
  auto csv = run.out.csv("interpolation.csv", {"instance", "d", "R", "b_size", "lhs", "rhs", "ratio"});
  auto rng = stream_for(run.seed, 0);
  double worst = 0;
  for (std::int64_t t = 0; t < instances; ++t) {
    LatticeField u(d);
    q.sites_box().expanded(1).for_each([&](const Site& y) { u.set(y, rng.normal()); });
    std::vector<Site> b = q.sites();
    shuffle(rng, b);
    b.resize(static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>((b.size() + 1) / 2), static_cast<std::int64_t>(b.size()))));
    const RatioResult r = interpolation_ratio(u, q, b);
    csv << t << d << side << b.size() << r.lhs << r.rhs << r.ratio;
    csv.end_row();
    worst = std::max(worst, r.ratio);
  }
  run.out.summary()["max_ratio"] = worst;
  run.print(fmt::format("{} instances, max ratio {:.6g}", instances, worst));
  return kExitOk;
}

// ---------------------------------------------------------------- cut-off

struct CutoffSetup {
  CutoffParams params;
  SiteBox lambda;
  Polymer u;
  std::vector<Site> pinned;
};

CutoffSetup cutoff_setup(const Run& run) {
  CutoffSetup s{acceptance_cutoff_params(), {}, Polymer(BoxGrid(4, 1)), {}};
  const int d = dimension(run.cfg, 4);
  s.params.K = int_in(run.cfg, "k", s.params.K, 3, 1 << 20);
  s.params.L = int_in(run.cfg, "l", s.params.L, 1, 1 << 20);
  s.params.M = int_in(run.cfg, "m", s.params.M, 1, 1 << 20);
  if (run.cfg.has("lambda_mic") || run.cfg.has("lambda_mac") || d != 4) {
    s.params.scales = Scales::from_lengths(d, int_in(run.cfg, "lambda_mic", 7, 1, 1LL << 40),
                                           int_in(run.cfg, "lambda_mac", 2415, 1, 1LL << 40));
  }
  if (run.cfg.get_bool("scales_from_epsilon", false))
    s.params.scales = scales_from_epsilon(d, double_in(run.cfg, "scale_epsilon", 1e-2, 1e-300, 1));
  try {
    s.params.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("cut-off parameters: ") + e.what());
  }
  const std::int64_t side = int_in(run.cfg, "side", 12, 1, 64);
  Site lo(d);
  lo[0] = s.params.macro_side() - 5;
  for (int i = 1; i < d; ++i) lo[i] = -5;
  s.lambda = block(run.cfg.get_site("lambda_lo", d, lo), side);
  s.u = Polymer(BoxGrid(d, s.params.macro_side()));
  s.u.insert(Site(d));
  const double eps = epsilons(run.cfg, {3.0}).front();
  HeatBath hb(d, s.lambda.sites(), eps, run.seed);
  hb.run(static_cast<std::uint64_t>(int_in(run.cfg, "sweeps", 200, 0, 1LL << 40)));
  s.pinned = hb.state().pinned_sites();
  return s;
}

BadBoxHierarchy hierarchy_of(const CutoffSetup& s) {
  const ConeSet cones = simplex_directions(s.params.dim());
  const PinnedExt ext = PinnedExt::from_box(s.lambda, s.pinned);
  const auto bad = bad_level0(ext, s.params, cones, level0_scan_window(s.lambda, s.params, cones));
  return build_hierarchy(bad, s.params);
}

void write_hierarchy(const Run& run, const BadBoxHierarchy& h) {
  auto csv = run.out.csv("hierarchy.csv", {"level", "center", "side", "clustered", "parent_center", "j_isol"});
  for (const auto& lev : h.levels)
    for (std::size_t k = 0; k < lev.boxes.size(); ++k) {
      const HBox& b = lev.boxes[k];
      const bool has_cls = k < lev.clustered.size();
      const bool has_parent = k < lev.parent.size() && lev.parent[k].has_value();
      csv << lev.j << b.center << static_cast<long long>(b.side) << (has_cls ? static_cast<int>(lev.clustered[k]) : -1);
      if (has_parent)
        csv << h.levels[static_cast<std::size_t>(lev.j + 1)].boxes[*lev.parent[k]].center;
      else
        csv << "";
      const auto it = lev.j == 0 ? h.j_isol.find(b.index) : h.j_isol.end();
      csv << (it == h.j_isol.end() ? -1 : it->second);
      csv.end_row();
    }
  auto os = run.out.text("hierarchy.txt");
  h.dump(os);
}

int cmd_hierarchy(const Run& run) {
  const CutoffSetup s = cutoff_setup(run);
  const BadBoxHierarchy h = hierarchy_of(s);
  write_hierarchy(run, h);
  const auto t1 = type_one_boxes(h), t2 = type_two_boxes(h);
  run.out.summary()["j_star"] = h.j_star;
  run.out.summary()["pinned"] = s.pinned.size();
  run.out.summary()["bad_level0"] = h.empty() ? 0 : h.level(0).boxes.size();
  run.out.summary()["type_one"] = t1.size();
  run.out.summary()["type_two"] = t2.size();
  run.print(fmt::format("j_* = {}, {} pinned, {} level-0 bad boxes, {} type-I and {} type-II macro boxes", h.j_star,
                        s.pinned.size(), h.empty() ? 0 : h.level(0).boxes.size(), t1.size(), t2.size()));
  return kExitOk;
}

int cmd_cutoff(const Run& run) {
  const CutoffSetup s = cutoff_setup(run);
  const BadBoxHierarchy h = hierarchy_of(s);
  write_hierarchy(run, h);
  const CutoffPrecondition pre = cutoff_precondition(s.u, h);
  run.out.summary()["precondition"] = pre.ok;
  const CutoffFunction eta = build_cutoff(s.u, h);  // Refused -> exit 2
  const CutoffCheck chk = verify_cutoff(eta, h);
  auto csv = run.out.csv("corrections.csv", {"level", "center", "r", "R", "growth", "growth_sampled"});
  for (const auto& c : eta.corrections()) {
    csv << c.level << c.center << static_cast<long long>(c.r) << static_cast<long long>(c.R) << c.growth
        << (c.growth_sampled ? 1 : 0);
    csv.end_row();
  }
  auto chk_csv = run.out.csv("cutoff_check.csv", {"property", "ok", "value"});
  const std::pair<const char*, std::pair<bool, double>> rows[] = {
      {"zero_inside", {chk.zero_inside, chk.max_abs_inside}},
      {"one_outside", {chk.one_outside, chk.max_dev_outside}},
      {"flat_on_bad", {chk.flat_on_bad, chk.max_hessian_on_bad}},
      {"supports", {chk.supports_ok, 0.0}},
      {"max_hessian", {true, chk.max_hessian}},
      {"max_hessian_base", {true, chk.max_hessian_base}},
  };
  for (const auto& [name, v] : rows) {
    chk_csv << name << (v.first ? 1 : 0) << v.second;
    chk_csv.end_row();
  }
  if (run.cfg.get_bool("write_slice", false)) {
    // one 2-d slice through Lambda along the first two axes
    SiteBox w = s.lambda.expanded(2);
    for (int i = 2; i < w.dim(); ++i) w.lo[i] = w.hi[i] = s.lambda.lo[i] + (s.lambda.hi[i] - s.lambda.lo[i]) / 2;
    auto os = run.out.text("eta_slice.csv");
    eta.write_csv(os, w);
  }
  run.out.summary()["corrections"] = eta.correction_count();
  run.out.summary()["growth_product"] = eta.growth_product();
  run.out.summary()["verified"] = chk.ok();
  run.out.summary()["points_checked"] = chk.points_checked;
  run.print(fmt::format("cut-off built with {} corrections (growth {:.4g}); properties {}", eta.correction_count(),
                        eta.growth_product(), chk.ok() ? "verified" : "VIOLATED"));
  return chk.ok() ? kExitOk : kExitNumerical;
}

int cmd_holefiller(const Run& run) {
  const int d = dimension(run.cfg, 2);
  const auto instances = int_in(run.cfg, "instances", 100, 1, 1000000);
  const std::int64_t max_side = int_in(run.cfg, "max_side", 6, 1, 64);
  auto rng = stream_for(run.seed, 0);
  auto csv = run.out.csv("holefiller.csv", {"instance", "d", "lhs", "rhs", "swap", "pairing", "residual", "raw_residual"});
  double worst = 0;
  auto random_box = [&] {
    Site lo(d);
    for (int i = 0; i < d; ++i) lo[i] = uniform_int(rng, -3, 3);
    SiteBox b{lo, lo};
    for (int i = 0; i < d; ++i) b.hi[i] = lo[i] + uniform_int(rng, 1, max_side) - 1;
    return b;
  };
  for (std::int64_t t = 0; t < instances; ++t) {
    LatticeField u(d), eta(d);
    const SiteBox ub = random_box();
    ub.for_each([&](const Site& y) { u.set(y, uniform_real(rng, -1, 1)); });
    ub.expanded(uniform_int(rng, 0, 2)).for_each([&](const Site& y) { eta.set(y, uniform_real(rng, 0, 1)); });
    const HoleFillerTerms h = hole_filler_terms(u, eta);
    csv << t << d << h.lhs << h.rhs << h.swap << h.pairing << h.residual << h.raw_residual;
    csv.end_row();
    worst = std::max(worst, h.residual);
  }
  run.out.summary()["max_residual"] = worst;
  run.print(fmt::format("{} instances, max residual {:.3g}", instances, worst));
  return worst <= 1e-10 ? kExitOk : kExitNumerical;
}

// ---------------------------------------------------------------- closed forms

int cmd_tailbound(const Run& run) {
  const int n_max = static_cast<int>(int_in(run.cfg, "n_max", 30, 1, 64));
  const std::int64_t den = int_in(run.cfg, "grid_denominator", 50, 2, 1000);
  auto csv = run.out.csv("tailbound.csv", {"n", "p", "r", "lhs", "rhs", "ok"});
  std::uint64_t failed = 0, checked = 0;
  for (int n = 1; n <= n_max; ++n)
    for (std::int64_t rk = 1; 2 * rk <= den; ++rk)
      for (std::int64_t pk = 0; pk <= rk; ++pk) {
        const TailBoundResult t = binomial_tail_bound_check(n, Rational(pk, den), Rational(rk, den));
        csv << n << fmt::format("{}/{}", pk, den) << fmt::format("{}/{}", rk, den) << t.lhs_value << t.rhs_value << (t.ok ? 1 : 0);
        csv.end_row();
        failed += t.ok ? 0 : 1;
        ++checked;
      }
  run.out.summary()["checked"] = checked;
  run.out.summary()["failed"] = failed;
  run.print(fmt::format("{} of {} (N, p, r) pass", checked - failed, checked));
  return failed == 0 ? kExitOk : kExitNumerical;
}

int cmd_counterexample(const Run& run) {
  const auto ns = run.cfg.get_doubles("n", std::vector<double>{4, 10, 100});
  auto csv = run.out.csv("counterexample.csv", {"n", "t", "union", "intersection", "a", "a_prime", "ratio", "limit_ratio", "small_t_warning"});
  for (double n : ns) {
    if (!(n >= 4)) throw ConfigError("n must be >= 4");
    const double t = run.cfg.has("t") ? double_in(run.cfg, "t", 0, 1e-300, 1) : 0.001 / n;
    const SquareWellResult r = square_well_counterexample(n, t);
    csv << n << t << r.scaled[0] << r.scaled[1] << r.scaled[2] << r.scaled[3] << r.ratio << r.limit_ratio << (r.small_t_warning ? 1 : 0);
    csv.end_row();
    run.print(fmt::format("N = {}: scaled ({:.6g}, {:.6g}, {:.6g}, {:.6g}), ratio {:.6g}", n, r.scaled[0], r.scaled[1],
                          r.scaled[2], r.scaled[3], r.ratio));
  }
  return kExitOk;
}

// ---------------------------------------------------------------- acceptance

int cmd_acceptance(const Run& run) {
  std::vector<std::int64_t> ids;
  for (const auto& c : criteria()) ids.push_back(c.id);
  ids = run.cfg.get_ints("criteria", ids);
  for (auto id : ids)
    if (id < 1 || id > static_cast<std::int64_t>(criteria().size())) throw ConfigError(fmt::format("no criterion {}", id));
  CriterionContext ctx;
  ctx.seed = run.seed;
  ctx.threads = run.threads;
  ctx.out = &run.out;
  ctx.log = run.console;
  auto csv = run.out.csv("acceptance.csv", {"criterion", "name", "passed", "detail"});
  bool all = true;
  for (auto id : ids) {
    const CriterionResult r = run_criterion(static_cast<int>(id), ctx);
    run.print(format_result(r));
    csv << r.id << r.name << (r.passed ? 1 : 0) << r.detail;
    csv.end_row();
    run.out.summary()["criteria"].push_back(
        {{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"seconds", r.seconds}, {"metrics", r.metrics}});
    all = all && r.passed;
  }
  run.out.summary()["all_passed"] = all;
  return all ? kExitOk : kExitAcceptance;
}

using Handler = int (*)(const Run&);

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> m = {
      {"green", cmd_green},
      {"zeta", cmd_zeta},
      {"fkg", cmd_fkg},
      {"domination", cmd_domination},
      {"variance-sweep", cmd_variance_sweep},
      {"covariance-decay", cmd_covariance_decay},
      {"mass", cmd_mass},
      {"hardy-rellich", cmd_hardy_rellich},
      {"interpolation", cmd_interpolation},
      {"hierarchy", cmd_hierarchy},
      {"cutoff", cmd_cutoff},
      {"holefiller", cmd_holefiller},
      {"tailbound", cmd_tailbound},
      {"counterexample", cmd_counterexample},
      {"acceptance", cmd_acceptance},
  };
  return m;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, h] : handlers()) v.push_back(k);
    return v;
  }();
  return names;
}

int run_subcommand(const std::string& name, Config config, const RunOptions& opts) {
  auto err = [&](const std::string& msg) {
    if (opts.console) *opts.console << "error: " << msg << '\n';
  };
  const auto it = handlers().find(name);
  if (it == handlers().end()) {
    err("unknown subcommand '" + name + "'");
    return kExitConfig;
  }
  std::unique_ptr<RunOutput> out;
  int code = kExitOk;
  try {
    config.apply_environment();
    if (opts.seed) config.set("seed", std::to_string(*opts.seed));
    const auto seed = static_cast<std::uint64_t>(config.get_int("seed", 1));
    // where the files go is not part of the experiment, so --out stays out of the hash
    const std::filesystem::path dir = opts.out ? *opts.out : std::filesystem::path(config.get_string("out", "out/" + name));
    out = std::make_unique<RunOutput>(dir, config.hash(), name);
    {
      auto os = out->text("config.txt");
      os << config.serialize();
    }
    out->summary()["seed"] = seed;
    const Run run{config, *out, seed, std::max(1, opts.threads), opts.console};
    code = it->second(run);
  } catch (const ConfigError& e) {
    err(e.what());
    code = kExitConfig;
  } catch (const Refused& e) {
    err(std::string("refused: ") + e.what());
    code = kExitNumerical;
  } catch (const NumericalFailure& e) {
    err(std::string("numerical failure: ") + e.what());
    code = kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err(std::string("precondition violated: ") + e.what());
    code = kExitNumerical;
  } catch (const std::exception& e) {
    err(e.what());
    code = kExitNumerical;
  }
  if (out) {
    try {
      out->write_summary(code);
    } catch (const std::exception& e) {
      err(std::string("cannot write summary: ") + e.what());
    }
  }
  return code;
}

}  // namespace experiments
