#include "membrane/heat_bath.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "membrane/box.hpp"
#include "membrane/errors.hpp"
#include "membrane/operators.hpp"
#include "membrane/philox.hpp"

namespace membrane {

LatticeField ChainState::field(int dim) const {
  LatticeField f(dim);
  for (std::size_t k = 0; k < sites.size(); ++k)
    if (psi[k] != 0.0) f.set(sites[k], psi[k]);
  return f;
}

std::vector<Site> ChainState::pinned_sites() const {
  std::vector<Site> out;
  for (std::size_t k = 0; k < sites.size(); ++k)
    if (pinned[k]) out.push_back(sites[k]);
  return out;
}

HeatBath::HeatBath(int dim, std::vector<Site> sites, double epsilon, std::uint64_t seed, std::uint32_t chain)
    : dim_(dim), epsilon_(epsilon), index_(std::move(sites)) {
  check_dim(dim);
  if (!(epsilon >= 0)) throw std::invalid_argument("epsilon must be nonnegative");
  if (index_.size() >= (std::size_t{1} << 32)) throw std::invalid_argument("volume too large");
  sigma2_ = 1.0 / (4.0 * dim * dim + 2.0 * dim);
  const auto stencil = bilaplacian_stencil(dim);
  row_start_.reserve(index_.size() + 1);
  row_start_.push_back(0);
  for (const Site& x : index_.sites()) {
    for (const auto& e : stencil) {
      if (l1_norm(e.offset) == 0) continue;
      if (auto j = index_.find(x + e.offset)) {
        col_.push_back(static_cast<std::uint32_t>(*j));
        val_.push_back(e.coeff);
      }
    }
    row_start_.push_back(col_.size());
  }
  state_.sites = index_.sites();
  state_.psi.assign(index_.size(), 0.0);
  state_.pinned.assign(index_.size(), 0);
  state_.seed = seed;
  state_.chain = chain;
}

double HeatBath::conditional_mean(std::size_t k) const {
  double s = 0;
  for (std::size_t p = row_start_[k]; p < row_start_[k + 1]; ++p) s += val_[p] * state_.psi[col_[p]];
  return -sigma2_ * s;
}

namespace {
double pin_prob(double m, double sigma2, double eps) {
  if (std::isinf(eps)) return 1.0;
  if (eps == 0.0) return 0.0;
  const double a = eps * std::exp(-m * m / (2.0 * sigma2));
  return a / (a + std::sqrt(2.0 * std::numbers::pi * sigma2));
}
}  // namespace

double HeatBath::pin_probability(std::size_t k) const { return pin_prob(conditional_mean(k), sigma2_, epsilon_); }

double HeatBath::conditional_second_moment(std::size_t k) const {
  const double m = conditional_mean(k);
  return (1.0 - pin_prob(m, sigma2_, epsilon_)) * (m * m + sigma2_);
}

void HeatBath::update_site(std::size_t k) {
  const double m = conditional_mean(k);
  const double q = pin_prob(m, sigma2_, epsilon_);
  const std::uint64_t sw = state_.sweep_count;
  const auto w = Philox4x32::generate(
      {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(sw), static_cast<std::uint32_t>(sw >> 32),
       state_.chain},
      Philox4x32::key_from_seed(state_.seed));
  if (uniform53(w[0], w[1]) < q) {
    state_.psi[k] = 0.0;
    state_.pinned[k] = 1;
  } else {
    state_.psi[k] = m + std::sqrt(sigma2_) * box_muller(w[2], w[3]);
    state_.pinned[k] = 0;
  }
}

void HeatBath::sweep() {
  for (std::size_t k = 0; k < size(); ++k) update_site(k);
  ++state_.sweep_count;
}

void HeatBath::run(std::uint64_t sweeps) {
  for (std::uint64_t s = 0; s < sweeps; ++s) sweep();
}

double integrated_autocorrelation_time(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 4) return 1.0;
  double mean = 0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  auto autocov = [&](std::size_t t) {
    double s = 0;
    for (std::size_t i = 0; i + t < n; ++i) s += (x[i] - mean) * (x[i + t] - mean);
    return s / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  if (!(c0 > 0)) return 1.0;
  double tau = 1.0;
  for (std::size_t t = 1; t < n / 2; ++t) {
    tau += 2.0 * autocov(t) / c0;
    if (static_cast<double>(t) >= 6.0 * tau) break;
  }
  return std::max(tau, 1e-3);
}

SeriesEstimate batch_means(const std::vector<double>& series, int batches) {
  if (batches < 10) throw std::invalid_argument("at least 10 batches are required");
  if (series.size() < static_cast<std::size_t>(batches))
    throw std::invalid_argument("insufficient samples: need at least one per batch");
  SeriesEstimate e;
  e.n_samples = series.size();
  const std::size_t per = series.size() / static_cast<std::size_t>(batches);
  std::vector<double> means(static_cast<std::size_t>(batches), 0.0);
  for (int b = 0; b < batches; ++b) {
    for (std::size_t i = 0; i < per; ++i) means[static_cast<std::size_t>(b)] += series[b * per + i];
    means[static_cast<std::size_t>(b)] /= static_cast<double>(per);
  }
  double m = 0;
  for (double v : means) m += v;
  m /= batches;
  double v2 = 0;
  for (double v : means) v2 += (v - m) * (v - m);
  e.mean = m;
  e.se = std::sqrt(v2 / (batches - 1) / batches);
  e.tau_int = integrated_autocorrelation_time(series);
  return e;
}

namespace {

void check_run(const ChainConfig& cfg) {
  if (cfg.thinning == 0) throw std::invalid_argument("thinning must be positive");
  if (cfg.batches < 10) throw std::invalid_argument("at least 10 batches are required");
  if (cfg.sweeps / cfg.thinning < static_cast<std::uint64_t>(cfg.batches))
    throw std::invalid_argument("insufficient sweeps for the requested number of batches");
}

// l-infinity distance from x to the nearest site outside the volume.
std::int64_t boundary_distance(const HeatBath& hb, const Site& x) {
  for (std::int64_t r = 1; r < 4096; ++r) {
    bool out = false;
    BoxSpec::cube(x, r).sites_box().for_each([&](const Site& y) {
      if (!out && linf_distance(x, y) == r && !hb.index_of(y)) out = true;
    });
    if (out) return r;
  }
  return 4096;
}

}  // namespace

VarianceEstimate estimate_variance(const ChainConfig& cfg, const Site& x) {
  check_run(cfg);
  HeatBath hb(cfg.dim, cfg.sites, cfg.epsilon, cfg.seed, cfg.chain);
  auto k = hb.index_of(x);
  if (!k) throw std::invalid_argument("site " + x.str() + " is not in the volume");
  hb.run(cfg.burn_in);
  std::vector<double> series;
  double pins = 0;
  for (std::uint64_t s = 1; s <= cfg.sweeps; ++s) {
    hb.sweep();
    if (s % cfg.thinning == 0) {
      series.push_back(hb.conditional_second_moment(*k));
      pins += hb.pin_probability(*k);
    }
  }
  VarianceEstimate v;
  static_cast<SeriesEstimate&>(v) = batch_means(series, cfg.batches);
  v.boundary_distance = boundary_distance(hb, x);
  v.pin_fraction = pins / static_cast<double>(series.size());
  return v;
}

std::vector<Site> ray_sites(const Site& origin, const std::vector<double>& theta, std::int64_t k_max) {
  if (static_cast<int>(theta.size()) != origin.dim()) throw std::invalid_argument("direction has wrong dimension");
  std::vector<Site> out;
  for (std::int64_t k = 0; k <= k_max; ++k) {
    Site y = origin;
    for (int i = 0; i < origin.dim(); ++i)
      y[i] += static_cast<std::int64_t>(std::floor(static_cast<double>(k) * theta[static_cast<std::size_t>(i)] + 1e-12));
    out.push_back(y);
  }
  return out;
}

std::vector<ProfilePoint> covariance_profile(const ChainConfig& cfg, const Site& origin,
                                             const std::vector<double>& theta, std::int64_t k_max,
                                             ProfileOptions opts) {
  check_run(cfg);
  HeatBath hb(cfg.dim, cfg.sites, cfg.epsilon, cfg.seed, cfg.chain);
  const std::vector<Site> ray = ray_sites(origin, theta, k_max);
  std::vector<std::size_t> idx;
  for (const Site& y : ray) {
    auto k = hb.index_of(y);
    if (!k) throw std::invalid_argument("ray leaves the volume at " + y.str());
    idx.push_back(*k);
  }
  hb.run(cfg.burn_in);
  std::vector<std::vector<double>> series(ray.size());
  for (std::uint64_t s = 1; s <= cfg.sweeps; ++s) {
    hb.sweep();
    if (s % cfg.thinning != 0) continue;
    const ChainState& st = hb.state();
    if (opts.estimator == CovarianceEstimator::raw) {
      const double p0 = st.psi[idx[0]];
      for (std::size_t k = 0; k < ray.size(); ++k) series[k].push_back(p0 * st.psi[idx[k]]);
      continue;
    }
    std::vector<Site> free;
    free.reserve(st.sites.size());
    for (std::size_t k = 0; k < st.sites.size(); ++k)
      if (!st.pinned[k]) free.push_back(st.sites[k]);
    if (st.pinned[idx[0]]) {
      for (auto& v : series) v.push_back(0.0);
      continue;
    }
    const GreenSolver g = GreenSolver::assemble(cfg.dim, std::move(free), opts.solver);
    const Eigen::VectorXd col = g.green_vector(ray[0]);
    for (std::size_t k = 0; k < ray.size(); ++k) {
      auto j = g.index_of(ray[k]);
      series[k].push_back(j ? col[static_cast<Eigen::Index>(*j)] : 0.0);
    }
  }
  std::vector<ProfilePoint> out;
  for (std::size_t k = 0; k < ray.size(); ++k) {
    const SeriesEstimate e = batch_means(series[k], cfg.batches);
    ProfilePoint p;
    p.k = static_cast<std::int64_t>(k);
    p.site = ray[k];
    p.distance = euclidean_distance(ray[k], origin);
    p.cov = e.mean;
    p.se = e.se;
    p.n_samples = e.n_samples;
    p.tau_int = e.tau_int;
    out.push_back(p);
  }
  return out;
}

ExactSampler::ExactSampler(const PinnedSetDistribution& dist) : dist_(&dist) {
  if (!dist.exact()) throw std::invalid_argument("exact sampling needs an exact distribution");
  cdf_.resize(dist.subsets());
  double acc = 0;
  for (std::size_t a = 0; a < cdf_.size(); ++a) cdf_[a] = (acc += dist.probability(static_cast<Mask>(a)));
}

ExactSample ExactSampler::draw(std::uint64_t seed, std::uint64_t index) const {
  PhiloxStream rng(seed, index);
  ExactSample s;
  const double u = rng.uniform() * cdf_.back();
  s.pinned = static_cast<Mask>(
      std::min<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin(), cdf_.size() - 1));
  const auto& sites = dist_->sites();
  s.psi.assign(sites.size(), 0.0);
  std::vector<Site> free;
  std::vector<std::size_t> pos;
  for (std::size_t k = 0; k < sites.size(); ++k)
    if (!(s.pinned & (Mask{1} << k))) {
      free.push_back(sites[k]);
      pos.push_back(k);
    }
  if (free.empty()) return s;
  // B = L L^T, psi = L^{-T} z has covariance B^{-1}.
  SiteIndex free_index(free);
  const Eigen::MatrixXd b = Eigen::MatrixXd(assemble_bilaplacian(dist_->dim(), free_index));
  Eigen::LLT<Eigen::MatrixXd> llt(b);
  if (llt.info() != Eigen::Success) throw NumericalFailure("Cholesky factorisation failed");
  Eigen::VectorXd z(static_cast<Eigen::Index>(free.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  const Eigen::VectorXd psi = llt.matrixU().solve(z);
  // index sorts the free sites; map back through positions
  for (std::size_t k = 0; k < free.size(); ++k) {
    const std::size_t j = *free_index.find(free[k]);
    s.psi[pos[k]] = psi[static_cast<Eigen::Index>(j)];
  }
  return s;
}

}  // namespace membrane
