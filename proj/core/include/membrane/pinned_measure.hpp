#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "membrane/green_solver.hpp"
#include "membrane/site.hpp"

namespace membrane {

// Subsets of an ordered site list, bit k <-> site k.
using Mask = std::uint32_t;

inline constexpr std::size_t kMaxExactSites = 20;

struct Estimate {
  double value = 0;
  double se = 0;  // 0 for exact values
};

// Law of the pinned set on a finite volume. In exact mode every subset carries
// its normalised probability; in sampled mode a list of observed subsets is
// kept and probabilities are empirical frequencies.
class PinnedSetDistribution {
 public:
  enum class Mode { exact, sampled };

  PinnedSetDistribution() = default;
  // Exact distribution from unnormalised log weights indexed by mask.
  static PinnedSetDistribution from_log_weights(int dim, std::vector<Site> sites, double epsilon,
                                                std::vector<double> log_weights);
  static PinnedSetDistribution from_samples(int dim, std::vector<Site> sites, double epsilon,
                                            std::vector<Mask> samples);

  Mode mode() const { return mode_; }
  bool exact() const { return mode_ == Mode::exact; }
  int dim() const { return dim_; }
  std::size_t size() const { return sites_.size(); }
  std::size_t subsets() const { return std::size_t{1} << sites_.size(); }
  const std::vector<Site>& sites() const { return sites_; }
  double epsilon() const { return epsilon_; }
  Mask full() const { return static_cast<Mask>(subsets() - 1); }
  Mask mask_of(std::span<const Site> set) const;
  std::size_t index_of(const Site& x) const;

  // Exact mode only.
  double probability(Mask a) const;
  double log_weight(Mask a) const;
  double log_normaliser() const { return log_norm_; }
  const std::vector<double>& probabilities() const { return prob_; }
  // zeta(A contains x | A \ {x} = E), for x not in E.
  double conditional_pin_probability(std::size_t x, Mask e) const;
  const std::vector<Mask>& samples() const { return samples_; }

  // E f(A); sampled mode gives a standard error.
  Estimate expectation(const std::function<double(Mask)>& f) const;

 private:
  void require_exact(const char* what) const;
  Mode mode_ = Mode::exact;
  int dim_ = 1;
  std::vector<Site> sites_;
  double epsilon_ = 0;
  std::vector<double> log_w_;
  std::vector<double> prob_;
  double log_norm_ = 0;
  std::vector<Mask> samples_;
};

struct ZetaOptions {
  // Every this many nodes of the pin tree the Schur-updated log partition is
  // compared with a fresh factorisation.
  std::size_t drift_check_period = 64;
  double drift_tolerance = 1e-8;
};

struct ZetaStats {
  std::size_t drift_checks = 0;
  std::size_t reassemblies = 0;
  double max_drift = 0;
};

// Exact zeta over all 2^n subsets by a depth-first pin tree with rank-one Schur
// updates. epsilon may be 0 or +infinity.
PinnedSetDistribution zeta_exact(int dim, std::vector<Site> sites, double epsilon, ZetaOptions opts = {},
                                 ZetaStats* stats = nullptr);

// log Z_{Lambda \ A} for every mask (the ingredient of zeta_exact).
std::vector<double> log_partitions_all_subsets(int dim, const std::vector<Site>& sites, ZetaOptions opts = {},
                                               ZetaStats* stats = nullptr);

// Product Bernoulli(p) law on the sites, handy as a comparison measure.
PinnedSetDistribution bernoulli_distribution(int dim, std::vector<Site> sites, double p);

// (1 + sqrt(2 pi G(x,x)) / eps)^{-1} with G the Green function of the free set.
double conditional_pin_probability(double green_xx, double epsilon);
double conditional_pin_probability(const GreenSolver& free_solver, const Site& x, double epsilon);

struct FkgViolation {
  Mask a;
  Mask b;
  double lhs;  // zeta(A u B) zeta(A n B)
  double rhs;  // zeta(A) zeta(B)
};

struct FkgReport {
  std::uint64_t pairs_checked = 0;
  std::vector<FkgViolation> violations;
};

// All ordered pairs (A,B); a violation is lhs < rhs (1 - slack).
FkgReport fkg_lattice_check(std::span<const double> prob, std::size_t n_sites, double slack = 1e-9);
FkgReport fkg_lattice_check(const PinnedSetDistribution& dist, double slack = 1e-9);

enum class DominationDirection { dominates, dominated };

struct DominationViolation {
  std::size_t site;
  Mask rest;
  double conditional;
};

struct DominationReport {
  DominationDirection direction = DominationDirection::dominates;
  double p = 0;
  bool exhaustive = true;
  std::uint64_t pairs_checked = 0;
  double min_conditional = 1;
  double max_conditional = 0;
  std::vector<DominationViolation> violations;
  bool holds() const { return violations.empty(); }
};

// Compares zeta(A contains x | A\{x} = E) with p: `dominates` asks for
// conditional >= p, `dominated` for conditional <= p. Exhaustive for n <= 14,
// otherwise `samples` pairs drawn from zeta itself with the given seed.
DominationReport strong_domination_check(const PinnedSetDistribution& dist, double p, DominationDirection direction,
                                         double slack = 1e-12, std::size_t samples = 10000, std::uint64_t seed = 1);

// zeta(A n E = empty).
Estimate empty_probability(const PinnedSetDistribution& dist, Mask e);
// Table t[S] = zeta(A subset of S) for every S, so zeta(A n E = empty) = t[~E].
std::vector<double> subset_sum_table(const PinnedSetDistribution& dist);

struct MonotonicityResult {
  double small_volume = 0;  // zeta_Lambda(f)
  double large_volume = 0;  // zeta_Lambda'(f(. n Lambda))
  bool ok = false;
};

// f is a set function on subsets of the smaller volume's site list; it is
// checked to be increasing first (std::invalid_argument otherwise).
MonotonicityResult volume_monotonicity_check(const PinnedSetDistribution& small, const PinnedSetDistribution& large,
                                             const std::function<double(Mask)>& f, double slack = 1e-9);
bool is_increasing(const std::function<double(Mask)>& f, std::size_t n_sites);

// |A| / |Lambda| in expectation.
Estimate pinned_density(const PinnedSetDistribution& dist);

// One line per subset: mask (hex), |A|, log weight, probability.
void write_table(std::ostream& os, const PinnedSetDistribution& dist);

}  // namespace membrane
