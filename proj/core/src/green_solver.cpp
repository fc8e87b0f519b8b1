#include "membrane/green_solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>

#include "membrane/errors.hpp"
#include "membrane/operators.hpp"

namespace membrane {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)
}

SiteIndex::SiteIndex(std::vector<Site> sites) : sites_(std::move(sites)) {
  std::sort(sites_.begin(), sites_.end());
  sites_.erase(std::unique(sites_.begin(), sites_.end()), sites_.end());
  index_.reserve(sites_.size() * 2);
  for (std::size_t k = 0; k < sites_.size(); ++k) index_.emplace(sites_[k], k);
}

namespace {

// Dense lookup table over the bounding box, or nothing when the sites are too
// sparse in it for that to pay off.
struct BoxLookup {
  Site lo;
  std::vector<std::int64_t> extent, stride;
  std::vector<std::int32_t> pos;

  static std::optional<BoxLookup> build(const SiteIndex& index) {
    if (index.size() == 0 || index.size() > 0x7fffffff) return std::nullopt;
    const int d = index.sites().front().dim();
    BoxLookup t;
    t.lo = index.sites().front();
    Site hi = t.lo;
    for (const Site& s : index.sites())
      for (int i = 0; i < d; ++i) {
        t.lo[i] = std::min(t.lo[i], s[i]);
        hi[i] = std::max(hi[i], s[i]);
      }
    double volume = 1;
    for (int i = 0; i < d; ++i) volume *= static_cast<double>(hi[i] - t.lo[i] + 1);
    if (volume > 8.0 * static_cast<double>(index.size()) + 4096.0) return std::nullopt;
    t.extent.resize(static_cast<std::size_t>(d));
    t.stride.resize(static_cast<std::size_t>(d));
    std::int64_t st = 1;
    for (int i = d - 1; i >= 0; --i) {
      t.extent[static_cast<std::size_t>(i)] = hi[i] - t.lo[i] + 1;
      t.stride[static_cast<std::size_t>(i)] = st;
      st *= t.extent[static_cast<std::size_t>(i)];
    }
    t.pos.assign(static_cast<std::size_t>(st), -1);
    for (std::size_t k = 0; k < index.size(); ++k)
      t.pos[static_cast<std::size_t>(*t.linear(index.sites()[k]))] = static_cast<std::int32_t>(k);
    return t;
  }

  std::optional<std::int64_t> linear(const Site& x) const {
    std::int64_t l = 0;
    for (std::size_t i = 0; i < extent.size(); ++i) {
      const std::int64_t c = x[static_cast<int>(i)] - lo[static_cast<int>(i)];
      if (c < 0 || c >= extent[i]) return std::nullopt;
      l += c * stride[i];
    }
    return l;
  }

  std::optional<std::size_t> find(const Site& x) const {
    const auto l = linear(x);
    if (!l || pos[static_cast<std::size_t>(*l)] < 0) return std::nullopt;
    return static_cast<std::size_t>(pos[static_cast<std::size_t>(*l)]);
  }
};

}  // namespace

Eigen::SparseMatrix<double> assemble_bilaplacian(int dim, const SiteIndex& index) {
  const auto stencil = bilaplacian_stencil(dim);
  const auto n = static_cast<Eigen::Index>(index.size());
  const std::optional<BoxLookup> table = BoxLookup::build(index);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(index.size() * stencil.size());
  for (std::size_t k = 0; k < index.size(); ++k) {
    const Site& x = index.sites()[k];
    for (const auto& e : stencil) {
      const Site y = x + e.offset;
      if (auto m = table ? table->find(y) : index.find(y))
        trip.emplace_back(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(*m), e.coeff);
    }
  }
  Eigen::SparseMatrix<double> b(n, n);
  b.setFromTriplets(trip.begin(), trip.end());
  b.makeCompressed();
  return b;
}

struct GreenSolver::Impl {
  int dim = 1;
  SolverOptions options;
  SiteIndex index;
  Eigen::SparseMatrix<double> b;
  std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt;
  std::once_flag factor_once;
  double log_det = 0;

  bool direct() const {
    if (options.direct_limit) return index.size() <= *options.direct_limit;
    static constexpr std::size_t by_dim[] = {0, 1000000, 50000, 4000, 1500};
    return index.size() <= by_dim[dim];
  }

  void ensure_factor() {
    std::call_once(factor_once, [this] {
      ldlt = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
      ldlt->compute(b);
      if (ldlt->info() != Eigen::Success) throw NumericalFailure("sparse LDLT factorisation failed");
      const Eigen::VectorXd d = ldlt->vectorD();
      double s = 0;
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (!(d[i] > 0)) throw NumericalFailure("Bilaplacian block is not positive definite");
        s += std::log(d[i]);
      }
      log_det = s;
    });
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, double cg_tol) {
    if (index.size() == 0) return Eigen::VectorXd();
    if (direct()) {
      ensure_factor();
      Eigen::VectorXd x = ldlt->solve(rhs);
      if (ldlt->info() != Eigen::Success) throw NumericalFailure("sparse LDLT solve failed");
      return x;
    }
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(cg_tol);
    const long maxit = options.cg_max_iterations > 0 ? options.cg_max_iterations
                                                     : static_cast<long>(10 * index.size() + 1000);
    cg.setMaxIterations(maxit);
    cg.compute(b);
    Eigen::VectorXd x = cg.solve(rhs);
    if (cg.info() != Eigen::Success)
      throw NumericalFailure("conjugate gradients did not converge (error " + std::to_string(cg.error()) + ")");
    return x;
  }
};

GreenSolver GreenSolver::assemble(int dim, std::vector<Site> free_sites, SolverOptions options) {
  check_dim(dim);
  for (const auto& s : free_sites)
    if (s.dim() != dim) throw std::invalid_argument("free site of wrong dimension");
  GreenSolver g;
  g.impl_ = std::make_shared<Impl>();
  g.impl_->dim = dim;
  g.impl_->options = options;
  g.impl_->index = SiteIndex(std::move(free_sites));
  g.impl_->b = assemble_bilaplacian(dim, g.impl_->index);
  return g;
}

int GreenSolver::dim() const { return impl_->dim; }
std::size_t GreenSolver::size() const { return impl_->index.size(); }
const std::vector<Site>& GreenSolver::domain() const { return impl_->index.sites(); }
std::optional<std::size_t> GreenSolver::index_of(const Site& x) const { return impl_->index.find(x); }
const Eigen::SparseMatrix<double>& GreenSolver::matrix() const { return impl_->b; }
bool GreenSolver::direct() const { return impl_->direct(); }
std::string GreenSolver::backend() const { return direct() ? "sparse-ldlt" : "conjugate-gradient"; }

Eigen::VectorXd GreenSolver::solve(const Eigen::VectorXd& rhs) const {
  if (static_cast<std::size_t>(rhs.size()) != size()) throw std::invalid_argument("rhs size mismatch");
  return impl_->solve(rhs, impl_->options.cg_tolerance);
}

Eigen::VectorXd GreenSolver::green_vector(const Site& y) const {
  auto k = index_of(y);
  if (!k) throw std::invalid_argument("Green column requested at a pinned or exterior site " + y.str());
  Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
  e[static_cast<Eigen::Index>(*k)] = 1.0;
  Eigen::VectorXd g = impl_->solve(e, impl_->options.green_cg_tolerance);
  const double res = (impl_->b * g - e).lpNorm<Eigen::Infinity>();
  if (res > 1e-9 * g.lpNorm<Eigen::Infinity>())
    throw NumericalFailure("Green column residual " + std::to_string(res) + " too large");
  return g;
}

LatticeField GreenSolver::green_column(const Site& y) const {
  const Eigen::VectorXd g = green_vector(y);
  LatticeField f(dim());
  for (std::size_t k = 0; k < size(); ++k) f.set(domain()[k], g[static_cast<Eigen::Index>(k)]);
  return f;
}

double GreenSolver::covariance(const Site& x, const Site& y) const {
  auto kx = index_of(x);
  if (!kx || !is_free(y)) return 0.0;
  return green_vector(y)[static_cast<Eigen::Index>(*kx)];
}

double GreenSolver::variance(const Site& x) const { return covariance(x, x); }

LogPartition GreenSolver::log_partition() const {
  LogPartition lp;
  lp.n = size();
  if (lp.n == 0) return lp;
  impl_->ensure_factor();
  lp.value = 0.5 * static_cast<double>(lp.n) * kLog2Pi - 0.5 * impl_->log_det;
  return lp;
}

Eigen::MatrixXd GreenSolver::dense_inverse() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[k] = 1.0;
    g.col(k) = impl_->solve(e, impl_->options.green_cg_tolerance);
  }
  return 0.5 * (g + g.transpose());
}

DenseGreen GreenSolver::condition_on_pin(const Site& x) const { return DenseGreen::from_solver(*this).pin(x); }

double dense_log_det(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) throw NumericalFailure("dense LDLT failed");
  const Eigen::VectorXd d = ldlt.vectorD();
  double s = 0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0)) throw NumericalFailure("matrix is not positive definite");
    s += std::log(d[i]);
  }
  return s;
}

DenseGreen DenseGreen::assemble(int dim, std::vector<Site> free_sites) {
  SiteIndex idx(std::move(free_sites));
  DenseGreen g;
  g.dim_ = dim;
  g.sites_ = idx.sites();
  const Eigen::MatrixXd b = Eigen::MatrixXd(assemble_bilaplacian(dim, idx));
  const auto n = b.rows();
  if (n == 0) {
    g.g_ = Eigen::MatrixXd(0, 0);
    g.log_z_ = 0;
    return g;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(b);
  g.g_ = ldlt.solve(Eigen::MatrixXd::Identity(n, n));
  g.g_ = 0.5 * (g.g_ + g.g_.transpose());
  g.log_z_ = 0.5 * static_cast<double>(n) * kLog2Pi - 0.5 * dense_log_det(b);
  return g;
}

DenseGreen DenseGreen::from_solver(const GreenSolver& solver) {
  DenseGreen g;
  g.dim_ = solver.dim();
  g.sites_ = solver.domain();
  g.g_ = solver.dense_inverse();
  g.log_z_ = solver.log_partition().value;
  return g;
}

std::optional<std::size_t> DenseGreen::find(const Site& x) const {
  auto it = std::lower_bound(sites_.begin(), sites_.end(), x);
  if (it == sites_.end() || !(*it == x)) return std::nullopt;
  return static_cast<std::size_t>(it - sites_.begin());
}

bool DenseGreen::is_free(const Site& x) const { return find(x).has_value(); }

double DenseGreen::covariance(const Site& x, const Site& y) const {
  auto i = find(x), j = find(y);
  if (!i || !j) return 0.0;
  return g_(static_cast<Eigen::Index>(*i), static_cast<Eigen::Index>(*j));
}

DenseGreen DenseGreen::pin(const Site& x) const {
  auto k = find(x);
  if (!k) throw std::invalid_argument("cannot pin " + x.str() + ": not a free site");
  const auto kk = static_cast<Eigen::Index>(*k);
  const double gxx = g_(kk, kk);
  if (!(gxx > 0)) throw NumericalFailure("nonpositive variance during Schur update");
  const Eigen::Index n = g_.rows();
  DenseGreen out;
  out.dim_ = dim_;
  out.sites_ = sites_;
  out.sites_.erase(out.sites_.begin() + kk);
  out.g_.resize(n - 1, n - 1);
  const Eigen::VectorXd col = g_.col(kk);
  for (Eigen::Index a = 0, ia = 0; a < n; ++a) {
    if (a == kk) continue;
    for (Eigen::Index b = 0, ib = 0; b < n; ++b) {
      if (b == kk) continue;
      out.g_(ia, ib) = g_(a, b) - col[a] * col[b] / gxx;
      ++ib;
    }
    ++ia;
  }
  out.log_z_ = log_z_ - 0.5 * (kLog2Pi + std::log(gxx));
  return out;
}

}  // namespace membrane
