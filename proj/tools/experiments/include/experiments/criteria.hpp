#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "experiments/report.hpp"

namespace experiments {

struct CriterionContext {
  std::uint64_t seed = 20240601;
  int threads = 1;
  RunOutput* out = nullptr;  // optional CSV sink for per-instance data
  std::ostream* log = nullptr;  // optional progress messages
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;  // one line, the numbers that decided the outcome
  double seconds = 0;
  nlohmann::json metrics = nlohmann::json::object();
};

struct CriterionInfo {
  int id;
  const char* name;
  std::function<CriterionResult(const CriterionContext&)> run;
};

const std::vector<CriterionInfo>& criteria();
// Runs one criterion, timing it; exceptions become a failed result whose
// detail holds the message.
CriterionResult run_criterion(int id, const CriterionContext& ctx);

// One line per criterion: "criterion 07 PASS heat-bath exactness: ..."
std::string format_result(const CriterionResult& r);

// Individual criteria (also reachable through criteria()).
CriterionResult criterion_partition_ratio(const CriterionContext& ctx);
CriterionResult criterion_energy_identity(const CriterionContext& ctx);
CriterionResult criterion_fkg_lattice(const CriterionContext& ctx);
CriterionResult criterion_variance_monotonicity(const CriterionContext& ctx);
CriterionResult criterion_volume_monotonicity(const CriterionContext& ctx);
CriterionResult criterion_supermultiplicativity(const CriterionContext& ctx);
CriterionResult criterion_heat_bath_exactness(const CriterionContext& ctx);
CriterionResult criterion_hole_filler(const CriterionContext& ctx);
CriterionResult criterion_tail_bound(const CriterionContext& ctx);
CriterionResult criterion_affine_correction(const CriterionContext& ctx);
CriterionResult criterion_cutoff(const CriterionContext& ctx);
CriterionResult criterion_square_well(const CriterionContext& ctx);
CriterionResult criterion_variance_growth(const CriterionContext& ctx);
CriterionResult criterion_covariance_decay(const CriterionContext& ctx);
CriterionResult criterion_hardy_rellich(const CriterionContext& ctx);

}  // namespace experiments

namespace membrane {
struct CutoffParams;
}

namespace experiments {

// Scaled d = 4 cut-off lengths used by the cut-off criterion and subcommand defaults.
membrane::CutoffParams acceptance_cutoff_params();

}  // namespace experiments
