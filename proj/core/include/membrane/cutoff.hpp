#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "membrane/box.hpp"
#include "membrane/hierarchy.hpp"
#include "membrane/lattice_field.hpp"
#include "membrane/site.hpp"

namespace membrane {

// C^infinity step: 0 for s <= 0, 1 for s >= 1, built from exp(-1/s).
double smooth_step(double s);
// 1 on [-1,1], 0 outside [-outer, outer], smooth in between.
double plateau(double t, double outer);

// Local affine replacement around x: weight xi and the first-order Taylor
// polynomial of the field at x. Adding xi (taylor - v) makes the field affine
// on Q_{r+1}(x) and leaves it untouched outside Q_{R/2}(x).
struct AffineCorrection {
  Site center;
  std::int64_t r = 1;
  std::int64_t R = 16;
  int level = 0;  // hierarchy level of the box it flattens
  double value = 0;
  std::vector<double> gradient;  // forward differences at the centre
  double growth = 1;             // sup |hess(v+w)| / sup |hess v| on Q_R(x)
  bool growth_sampled = false;

  double weight(const Site& y) const;
  double taylor(const Site& y) const;
  // Smallest block containing the support of the weight.
  SiteBox support() const;
};

using FieldFn = std::function<double(const Site&)>;

// Throws std::invalid_argument unless r >= 1 and R >= 16 r.
AffineCorrection make_affine_correction(const FieldFn& v, const Site& x, std::int64_t r, std::int64_t R);
LatticeField affine_correction(const LatticeField& v, const Site& x, std::int64_t r, std::int64_t R);

struct GrowthMeasurement {
  double before = 0;  // sup |hess v| on Q_R(x)
  double after = 0;   // sup |hess (v+w)|
  double factor = 1;  // after / before (1 if both vanish)
  bool sampled = false;
  std::uint64_t sites = 0;
};

// Full scan of Q_R(x) when its volume is at most full_scan_limit, otherwise
// `samples` uniform sites of Q_R(x) plus all of Q_{r+1}(x) if small.
GrowthMeasurement measure_growth(const FieldFn& v, const FieldFn& corrected, const Site& x, std::int64_t R,
                                 std::uint64_t full_scan_limit = 200000, std::size_t samples = 20000,
                                 std::uint64_t seed = 1);

struct CutoffOptions {
  std::uint64_t full_scan_limit = 200000;
  std::size_t samples = 20000;
  std::uint64_t seed = 1;
};

// Lazily evaluated cut-off: the product bump vanishing near U plus the affine
// corrections applied level by level, coarsest first.
class CutoffFunction {
 public:
  CutoffFunction(Polymer u, CutoffParams params);

  const Polymer& region() const { return u_; }
  const CutoffParams& params() const { return params_; }
  // Smooth part before corrections.
  double base(const Site& y) const;
  double operator()(const Site& y) const;

  // Corrections of one level are built from the field as it was before that
  // level and then added together.
  void add_level(std::vector<AffineCorrection> corrections);
  std::vector<AffineCorrection> corrections() const;
  std::size_t correction_count() const;
  // Product of the measured growth factors.
  double growth_product() const;

  LatticeField restrict_to(const SiteBox& window) const;
  // site coordinates then value, 17 significant digits
  void write_csv(std::ostream& os, const SiteBox& window) const;

 private:
  Polymer u_;
  CutoffParams params_;
  std::vector<SiteBox> u_boxes_;
  std::vector<Site> u_centres_;
  std::vector<std::vector<AffineCorrection>> levels_;
  std::vector<SiteBox> level_bounds_;
};

// l-infinity annulus around U: inner < dist(y, U) <= outer (inner = -1 admits U).
struct Annulus {
  std::int64_t inner = -1;
  std::int64_t outer = 0;
};

// Precondition of the construction: no macro box of type I next to U.
struct CutoffPrecondition {
  bool ok = true;
  std::vector<Site> offending;  // type-I macro boxes touching the annulus
};
CutoffPrecondition cutoff_precondition(const Polymer& u, const BadBoxHierarchy& h);

// Throws Refused when the precondition fails or a correction would need R < 16 r
// (M too small for the geometry), std::invalid_argument for lambda_mic < 4 or
// a U not on the macro grid.
CutoffFunction build_cutoff(const Polymer& u, const BadBoxHierarchy& h, const CutoffOptions& opts = {});
// The smooth part alone (empty hierarchy).
CutoffFunction base_cutoff(const Polymer& u, const CutoffParams& params);

struct CutoffCheck {
  bool zero_inside = true;  // eta = 0 on U + Q_{2 K lambda_mic}
  bool one_outside = true;  // eta = 1 off U + Q_{K L lambda_mac - 2 K lambda_mic}
  bool flat_on_bad = true;  // hess eta = 0 where Q_1(x) meets a level-0 bad box
  bool supports_ok = true;  // correction supports avoid both plateau regions
  double max_abs_inside = 0;
  double max_dev_outside = 0;
  double max_hessian_on_bad = 0;
  double max_hessian = 0;       // sampled sup |hess eta|
  double max_hessian_base = 0;  // sampled sup |hess eta_*|
  std::uint64_t points_checked = 0;
  bool exhaustive = false;
  bool ok() const { return zero_inside && one_outside && flat_on_bad && supports_ok; }
};

// Plateaus are checked on every site when the window U + Q_{K L lambda_mac}
// has at most full_scan_limit sites; otherwise on random and near-boundary
// samples together with an exact support argument for the corrections. The
// flatness property is always scanned exactly.
CutoffCheck verify_cutoff(const CutoffFunction& eta, const BadBoxHierarchy& h, const CutoffOptions& opts = {},
                          double tol = 1e-12);

// Whether the union of `cover` contains every site of b (coordinate compression).
bool box_covered(const SiteBox& b, const std::vector<SiteBox>& cover);

}  // namespace membrane
