#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "membrane/green_solver.hpp"
#include "membrane/lattice_field.hpp"
#include "membrane/pinned_measure.hpp"
#include "membrane/site.hpp"

namespace membrane {

// Joint (field, pinned set) state of the single-site chain. Sites outside the
// volume carry psi = 0 implicitly.
struct ChainState {
  std::vector<Site> sites;  // sorted, the sweep order
  std::vector<double> psi;
  std::vector<std::uint8_t> pinned;
  std::uint64_t seed = 0;
  std::uint32_t chain = 0;
  std::uint64_t sweep_count = 0;

  LatticeField field(int dim) const;
  std::vector<Site> pinned_sites() const;
};

// Heat-bath dynamics for the pinned membrane measure on a finite volume. The
// site update draws (site, sweep, chain) keyed Philox words, so the trajectory
// is a pure function of (seed, chain, sweep count).
class HeatBath {
 public:
  HeatBath(int dim, std::vector<Site> sites, double epsilon, std::uint64_t seed, std::uint32_t chain = 0);

  int dim() const { return dim_; }
  double epsilon() const { return epsilon_; }
  std::size_t size() const { return state_.sites.size(); }
  const ChainState& state() const { return state_; }
  std::optional<std::size_t> index_of(const Site& x) const { return index_.find(x); }
  // Conditional variance of a free single-site update, 1 / (4d^2 + 2d).
  double sigma2() const { return sigma2_; }

  // Conditional mean of psi_k given the other sites.
  double conditional_mean(std::size_t k) const;
  // Probability that the update at k pins, given the other sites.
  double pin_probability(std::size_t k) const;
  // E[psi_k^2 | other sites] = (1 - q)(m^2 + sigma^2).
  double conditional_second_moment(std::size_t k) const;

  void update_site(std::size_t k);
  void sweep();
  void run(std::uint64_t sweeps);

 private:
  int dim_;
  double epsilon_;
  double sigma2_;
  SiteIndex index_;
  // Off-diagonal rows of the Bilaplacian restricted to the volume (CSR).
  std::vector<std::size_t> row_start_;
  std::vector<std::uint32_t> col_;
  std::vector<double> val_;
  ChainState state_;
};

struct ChainConfig {
  int dim = 1;
  std::vector<Site> sites;
  double epsilon = 0;
  std::uint64_t seed = 1;
  std::uint32_t chain = 0;
  std::uint64_t burn_in = 1000;
  std::uint64_t thinning = 10;
  std::uint64_t sweeps = 10000;  // measurement sweeps after burn-in
  int batches = 20;
};

struct SeriesEstimate {
  double mean = 0;
  double se = 0;       // batch means
  double tau_int = 0;  // integrated autocorrelation time of the thinned series, in samples
  std::size_t n_samples = 0;
};

// Batch-means mean and standard error; throws if fewer than 10 batches or
// fewer samples than batches.
SeriesEstimate batch_means(const std::vector<double>& series, int batches);
// Sokal's self-consistent window (c = 6).
double integrated_autocorrelation_time(const std::vector<double>& series);

struct VarianceEstimate : SeriesEstimate {
  std::int64_t boundary_distance = 0;  // l-infinity distance to the complement
  double pin_fraction = 0;             // Rao-Blackwellised pin probability at x
};

// E psi_x^2 from a heat-bath run, using the conditional second moment at x as
// the per-sample estimator.
VarianceEstimate estimate_variance(const ChainConfig& cfg, const Site& x);

enum class CovarianceEstimator {
  raw,       // psi_0 psi_y
  quenched,  // G_{Lambda \ A}(0, y) for the sampled pinned set A
};

struct ProfilePoint {
  std::int64_t k = 0;
  Site site;
  double distance = 0;  // Euclidean |site - origin|
  double cov = 0;
  double se = 0;
  std::size_t n_samples = 0;
  double tau_int = 0;
};

struct ProfileOptions {
  CovarianceEstimator estimator = CovarianceEstimator::raw;
  SolverOptions solver{};
};

// Lattice points origin + floor(k theta) for k = 0..k_max; every point must be
// in the volume.
std::vector<Site> ray_sites(const Site& origin, const std::vector<double>& theta, std::int64_t k_max);

std::vector<ProfilePoint> covariance_profile(const ChainConfig& cfg, const Site& origin,
                                             const std::vector<double>& theta, std::int64_t k_max,
                                             ProfileOptions opts = {});

// Exact draw: A ~ zeta, then psi ~ N(0, G_{Lambda \ A}). Pinned coordinates
// are exactly zero.
struct ExactSample {
  Mask pinned = 0;
  std::vector<double> psi;  // over dist.sites()
};
class ExactSampler {
 public:
  explicit ExactSampler(const PinnedSetDistribution& dist);
  ExactSample draw(std::uint64_t seed, std::uint64_t index) const;

 private:
  const PinnedSetDistribution* dist_;
  std::vector<double> cdf_;
};

}  // namespace membrane
