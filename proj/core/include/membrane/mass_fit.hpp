#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "membrane/heat_bath.hpp"
#include "membrane/scales.hpp"

namespace membrane {

enum class MassFitMethod {
  envelope,  // least squares on the upper hull of log|cov| (default)
  ols,       // least squares on every usable point
};

struct MassEstimate {
  std::vector<double> theta;
  double rate = 0;
  double intercept = 0;
  std::int64_t k_min = 0;
  std::int64_t k_max = 0;
  double residual = 0;  // RMS of the fit in log space
  std::size_t points_used = 0;
  std::size_t nodes_excluded = 0;
  MassFitMethod method = MassFitMethod::envelope;
};

// Fits log|cov| = intercept - rate k over k in [k_min, k_max]. Points within
// one standard error of zero are dropped as oscillation nodes. At least five
// points with |cov| > 3 se are required inside the window.
MassEstimate estimate_mass(const std::vector<ProfilePoint>& profile, std::vector<double> theta, std::int64_t k_min,
                           std::int64_t k_max, MassFitMethod method = MassFitMethod::envelope);

// Predicted decay rate up to an unknown constant: 1 / lambda_mac.
double predicted_mass_rate(const Scales& s);

// Signed model amp |x|^{-power} sin(rate |x| / sqrt2 - phase) exp(-rate |x| / sqrt2)
// with power = (d-1)/2 unless freed.
struct HeuristicProfile {
  double amplitude = 0;
  double rate = 0;
  double phase = 0;
  double power = 0;
  double residual = 0;  // RMS
  bool converged = false;
  bool degenerate = false;  // no sign change in the data: phase and power are not identified
  int sign_changes = 0;
  std::string message;
};

HeuristicProfile fit_heuristic_profile(const std::vector<ProfilePoint>& profile, int dim, bool free_power = false);
double heuristic_model(const HeuristicProfile& h, double r);

int count_sign_changes(const std::vector<ProfilePoint>& profile, double min_sigma = 1.0);

}  // namespace membrane
