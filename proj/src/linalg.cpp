#include "mos/linalg.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mos/errors.hpp"

namespace mos {
namespace {

void require_square(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw ValidationError("Gram matrix must be square and nonempty");
  }
}

// Solves G_{n-1} w = g_n and returns S_n; `w` receives the solution.
double schur_step(const Eigen::MatrixXd& gram, int n, Eigen::VectorXd& w) {
  if (n == 1) {
    w.resize(0);
    return gram(0, 0);
  }
  const auto lead = gram.topLeftCorner(n - 1, n - 1);
  const Eigen::VectorXd g = gram.col(n - 1).head(n - 1);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(lead);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      (ldlt.vectorD().array() <= 0.0).any()) {
    throw NumericDomainError(
        "leading block of order " + std::to_string(n - 1) + " is singular or not PD", n - 1);
  }
  w = ldlt.solve(g);
  return gram(n - 1, n - 1) - g.dot(w);
}

}  // namespace

GramSystem GramSystem::from_vectors(const Eigen::MatrixXd& columns) {
  return {columns.transpose() * columns, columns};
}

void GramSystem::validate() const {
  require_square(gram);
  const double scale = gram.cwiseAbs().maxCoeff();
  if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ValidationError("Gram matrix is not symmetric");
  }
  for (int n = 1; n <= gram.rows(); ++n) {
    if (!(schur_complement(gram, n) > 0.0)) {
      throw NumericDomainError("Gram matrix not positive definite at index " +
                                   std::to_string(n),
                               n);
    }
  }
  if (vectors) {
    if (vectors->cols() != gram.rows()) throw ValidationError("vector count mismatch");
    const Eigen::MatrixXd realized = vectors->transpose() * *vectors;
    if ((realized - gram).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, scale)) {
      throw ValidationError("vectors do not reproduce the Gram matrix");
    }
  }
}

Eigen::MatrixXd gram_schmidt_noniterative(const GramSystem& system) {
  require_square(system.gram);
  const int dim = static_cast<int>(system.gram.rows());
  Eigen::MatrixXd coeff = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd w;
  for (int n = 1; n <= dim; ++n) {
    const double s = schur_step(system.gram, n, w);
    if (!(s > 0.0)) {
      throw NumericDomainError("Schur complement S_" + std::to_string(n) + " = " +
                                   std::to_string(s) + " is not positive",
                               n);
    }
    const double inv_root = 1.0 / std::sqrt(s);
    coeff.row(n - 1).head(n - 1) = -w.transpose() * inv_root;
    coeff(n - 1, n - 1) = inv_root;
  }
  return coeff;
}

double schur_complement(const Eigen::MatrixXd& gram, int n) {
  require_square(gram);
  if (n < 1 || n > gram.rows()) throw ValidationError("Schur index out of range");
  Eigen::VectorXd w;
  return schur_step(gram, n, w);
}

QuadraticIncrements quadratic_form_increments(const Eigen::VectorXd& x,
                                              const Eigen::MatrixXd& cov) {
  require_square(cov);
  if (x.size() != cov.rows()) throw ValidationError("dimension mismatch between x and cov");
  const int dim = static_cast<int>(x.size());
  QuadraticIncrements out{Eigen::VectorXd(dim), Eigen::VectorXd(dim)};
  Eigen::VectorXd w;
  for (int n = 1; n <= dim; ++n) {
    const double s = schur_step(cov, n, w);
    if (!(s > 0.0)) {
      throw NumericDomainError("covariance not positive definite at index " +
                                   std::to_string(n),
                               n);
    }
    const double innovation = x(n - 1) - (n > 1 ? x.head(n - 1).dot(w) : 0.0);
    out.residuals(n - 1) = innovation / std::sqrt(s);
    out.increments(n - 1) = innovation * innovation / s;
  }
  return out;
}

GramSchmidtChain::GramSchmidtChain(int capacity) {
  coeff_ = Eigen::MatrixXd::Zero(capacity, capacity);
  residuals_.reserve(capacity);
}

void GramSchmidtChain::project(std::span<const double> cross, double* out) const {
  for (int n = 0; n < size_; ++n) {
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) acc += coeff_(n, k) * cross[k];
    out[n] = acc;
  }
}

double GramSchmidtChain::push(std::span<const double> cross, double self, double x) {
  if (static_cast<int>(cross.size()) < size_) throw ValidationError("cross products too short");
  std::vector<double> p(size_);
  project(cross, p.data());
  double s = self;
  double innovation = x;
  for (int n = 0; n < size_; ++n) {
    s -= p[n] * p[n];
    innovation -= p[n] * residuals_[n];
  }
  if (!(s > kDependenceThreshold * self)) {
    throw NumericDomainError("vector " + std::to_string(size_ + 1) +
                                 " is numerically dependent on its predecessors",
                             size_ + 1);
  }
  const double root = std::sqrt(s);
  if (coeff_.rows() <= size_) coeff_.conservativeResize(size_ + 1, size_ + 1);
  coeff_.row(size_).setZero();
  for (int k = 0; k < size_; ++k) {
    double acc = 0.0;
    for (int n = k; n < size_; ++n) acc += p[n] * coeff_(n, k);
    coeff_(size_, k) = -acc / root;
  }
  coeff_(size_, size_) = 1.0 / root;
  const double r = innovation / root;
  residuals_.push_back(r);
  ++size_;
  return r;
}

std::pair<double, double> GramSchmidtChain::peek_pair(std::span<const double> cross_cos,
                                                      std::span<const double> cross_sin,
                                                      double self_cos, double self_sin,
                                                      double pair_cross, double x_cos,
                                                      double x_sin) const {
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  double pc[64];
  double ps[64];
  std::vector<double> heap;
  double* p_cos = pc;
  double* p_sin = ps;
  if (size_ > 64) {
    heap.resize(2 * size_);
    p_cos = heap.data();
    p_sin = heap.data() + size_;
  }
  project(cross_cos, p_cos);
  project(cross_sin, p_sin);
  double s_cos = self_cos, innov_cos = x_cos;
  double s_sin = self_sin, innov_sin = x_sin;
  double cs = pair_cross;
  for (int n = 0; n < size_; ++n) {
    s_cos -= p_cos[n] * p_cos[n];
    innov_cos -= p_cos[n] * residuals_[n];
    s_sin -= p_sin[n] * p_sin[n];
    innov_sin -= p_sin[n] * residuals_[n];
    cs -= p_cos[n] * p_sin[n];
  }
  if (!(s_cos > kDependenceThreshold * self_cos)) return {kNaN, kNaN};
  const double r_cos = innov_cos / std::sqrt(s_cos);
  const double q = cs / std::sqrt(s_cos);  // <A_sin, new cos direction>
  s_sin -= q * q;
  if (!(s_sin > kDependenceThreshold * self_sin)) return {kNaN, kNaN};
  const double r_sin = (innov_sin - q * r_cos) / std::sqrt(s_sin);
  return {r_cos, r_sin};
}

}  // namespace mos
