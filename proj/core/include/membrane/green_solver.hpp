#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "membrane/lattice_field.hpp"
#include "membrane/site.hpp"

namespace membrane {

// (n/2) log(2 pi) - (1/2) log det B for the n free sites.
struct LogPartition {
  double value = 0;
  std::size_t n = 0;
};

struct SolverOptions {
  // Sparse LDLT up to this many sites, conjugate gradients above. Unset picks a
  // limit by dimension: fill-in makes LDLT hopeless for 4d blocks of a few
  // thousand sites, while CG converges in a few hundred iterations there.
  std::optional<std::size_t> direct_limit;
  double cg_tolerance = 1e-10;
  // Tighter tolerance for Green columns so their residual check passes.
  double green_cg_tolerance = 1e-13;
  long cg_max_iterations = 0;  // 0: 10 * n + 1000
};

// Sorted site list with O(1) index lookup.
class SiteIndex {
 public:
  SiteIndex() = default;
  explicit SiteIndex(std::vector<Site> sites);
  const std::vector<Site>& sites() const { return sites_; }
  std::size_t size() const { return sites_.size(); }
  std::optional<std::size_t> find(const Site& x) const {
    auto it = index_.find(x);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<Site> sites_;
  std::unordered_map<Site, std::size_t, SiteHash> index_;
};

// Principal submatrix of the Bilaplacian on a finite set of sites (zero data
// everywhere else).
Eigen::SparseMatrix<double> assemble_bilaplacian(int dim, const SiteIndex& index);

class DenseGreen;

class GreenSolver {
 public:
  static GreenSolver assemble(int dim, std::vector<Site> free_sites, SolverOptions options = {});

  int dim() const;
  std::size_t size() const;
  const std::vector<Site>& domain() const;
  std::optional<std::size_t> index_of(const Site& x) const;
  bool is_free(const Site& x) const { return index_of(x).has_value(); }
  const Eigen::SparseMatrix<double>& matrix() const;
  bool direct() const;
  std::string backend() const;

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  // G(., y) as a vector over domain(); throws for y not free.
  Eigen::VectorXd green_vector(const Site& y) const;
  LatticeField green_column(const Site& y) const;
  // Pinned or exterior sites return 0.
  double variance(const Site& x) const;
  double covariance(const Site& x, const Site& y) const;
  LogPartition log_partition() const;
  DenseGreen condition_on_pin(const Site& x) const;
  Eigen::MatrixXd dense_inverse() const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

// Dense Green function of a small domain, closed under pinning by rank-one
// Schur updates. The log-partition value is carried along exactly through the
// ratio identity Z_{D\{x}} / Z_D = (2 pi G(x,x))^{-1/2}.
class DenseGreen {
 public:
  // Independent dense factorisation (the oracle for tiny domains).
  static DenseGreen assemble(int dim, std::vector<Site> free_sites);
  static DenseGreen from_solver(const GreenSolver& solver);

  int dim() const { return dim_; }
  std::size_t size() const { return sites_.size(); }
  const std::vector<Site>& domain() const { return sites_; }
  bool is_free(const Site& x) const;
  double covariance(const Site& x, const Site& y) const;
  double variance(const Site& x) const { return covariance(x, x); }
  const Eigen::MatrixXd& matrix() const { return g_; }
  double log_partition() const { return log_z_; }
  DenseGreen pin(const Site& x) const;

 private:
  std::optional<std::size_t> find(const Site& x) const;
  int dim_ = 1;
  std::vector<Site> sites_;
  Eigen::MatrixXd g_;
  double log_z_ = 0;
};

// log det of a small dense symmetric positive definite matrix via LDLT.
double dense_log_det(const Eigen::MatrixXd& m);

}  // namespace membrane
