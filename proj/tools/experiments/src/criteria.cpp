#include "experiments/criteria.hpp"

#include <chrono>
#include <exception>
#include <stdexcept>

#include <fmt/format.h>

namespace experiments {

const std::vector<CriterionInfo>& criteria() {
  static const std::vector<CriterionInfo> list = {
      {1, "partition ratio identity", criterion_partition_ratio},
      {2, "energy identity and Cauchy-Schwarz", criterion_energy_identity},
      {3, "FKG lattice condition", criterion_fkg_lattice},
      {4, "variance monotonicity in the pinned set", criterion_variance_monotonicity},
      {5, "volume monotonicity of zeta", criterion_volume_monotonicity},
      {6, "supermultiplicativity of empty events", criterion_supermultiplicativity},
      {7, "heat-bath exactness", criterion_heat_bath_exactness},
      {8, "hole-filler identity", criterion_hole_filler},
      {9, "binomial tail bound", criterion_tail_bound},
      {10, "affine correction", criterion_affine_correction},
      {11, "cut-off properties", criterion_cutoff},
      {12, "square-well counterexample", criterion_square_well},
      {13, "d=4 variance growth", criterion_variance_growth},
      {14, "covariance decay and mass scaling", criterion_covariance_decay},
      {15, "Hardy-Rellich and interpolation suites", criterion_hardy_rellich},
  };
  return list;
}

CriterionResult run_criterion(int id, const CriterionContext& ctx) {
  for (const auto& c : criteria()) {
    if (c.id != id) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = c.run(ctx);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.id = c.id;
    r.name = c.name;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  }
  throw std::out_of_range(fmt::format("no criterion {}", id));
}

std::string format_result(const CriterionResult& r) {
  return fmt::format("criterion {:02d} {} {}: {} [{:.1f} s]", r.id, r.passed ? "PASS" : "FAIL", r.name, r.detail, r.seconds);
}

}  // namespace experiments
