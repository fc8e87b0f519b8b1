#pragma once

#include <functional>
#include <vector>

#include "membrane/box.hpp"
#include "membrane/hardy_rellich.hpp"
#include "membrane/hierarchy.hpp"
#include "membrane/lattice_field.hpp"

namespace membrane {

// Both sides of the weighted energy identity behind the hole filler,
//   lhs = sum_{i,j,x} |D_i D_{-j} u|^2 tau_i tau_{-j} eta
//   rhs = 1/2 sum_{i,j,x} |D_i u|^2 (tau_i D_j D_{-j} eta + D_j D_{-j} eta)
//         - sum_{i,j,x} u D_i D_{-j} u D_i D_{-j} eta.
// Summation by parts gives exactly
//   lhs - rhs + swap = (Bilaplacian u, eta u),
//   swap = 1/2 sum_{i,j,x} |D_i D_{-j} u|^2 (tau_i D_{-j} eta - tau_{-j} D_i eta).
// The two-term form lhs = rhs drops both the pairing (zero for biharmonic u)
// and the swap term (of the size of |hess eta|); `raw_residual` measures that
// form, `residual` the exact one.
struct HoleFillerTerms {
  double lhs = 0;
  double rhs = 0;
  double swap = 0;
  double pairing = 0;
  double residual = 0;      // |lhs - rhs + swap - pairing|
  double raw_residual = 0;  // |lhs - rhs|
};

HoleFillerTerms hole_filler_terms(const LatticeField& u, const std::function<double(const Site&)>& eta);
HoleFillerTerms hole_filler_terms(const LatticeField& u, const LatticeField& eta);
double hole_filler_identity_residual(const LatticeField& u, const LatticeField& eta);

struct AnnulusDecay {
  double outer_energy = 0;    // |hess u|^2 outside U + Q_{K L lambda_mac}
  double annulus_energy = 0;  // |hess u|^2 on (U + Q_{K L lambda_mac}) \ U
  double ratio = 0;           // outer / annulus, 0 when both vanish
  double biharmonic_residual = 0;  // max |u bilap u| off U over the field scale
};

// Throws std::invalid_argument if u does not vanish on the pinned set off U and
// NumericalFailure if u bilap u exceeds tol (relative) somewhere off U.
AnnulusDecay annulus_decay_ratio(const PinnedExt& pinned, const Polymer& u_region, const CutoffParams& params,
                                 const LatticeField& u, double tol = 1e-8);

// Energy |hess u|^2 outside U + Q_{m K L lambda_mac} for m = 0..layers.
std::vector<double> energy_beyond_layers(const LatticeField& u, const Polymer& u_region, const CutoffParams& params,
                                         int layers);

}  // namespace membrane
