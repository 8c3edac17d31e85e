#pragma once

#include <optional>
#include <span>

#include <Eigen/Dense>

namespace mos {

/// Gram matrix G_ij = <A_i, A_j>, optionally with realizing vectors stored as
/// the columns of `vectors`.
struct GramSystem {
  Eigen::MatrixXd gram;
  std::optional<Eigen::MatrixXd> vectors;

  static GramSystem from_vectors(const Eigen::MatrixXd& columns);
  /// Symmetry, PD (via Schur complements) and vector consistency.
  void validate() const;
};

/// Lower-triangular K with B_n = sum_k K(n,k) A_k orthonormal. Row n is built
/// from G_{n-1}^{-1} g_n and the Schur complement S_n, without iterating over
/// previously orthonormalized vectors. Throws NumericDomainError at the first
/// n (1-based) with S_n <= 0.
Eigen::MatrixXd gram_schmidt_noniterative(const GramSystem& system);

/// S_n = G_nn - g_n^T G_{n-1}^{-1} g_n for the leading n x n block (1-based
/// n; S_1 = G_11).
double schur_complement(const Eigen::MatrixXd& gram, int n);

struct QuadraticIncrements {
  Eigen::VectorXd increments;  // (x_n - x_{<n}^T C_{n-1}^{-1} c_n)^2 / S_n
  Eigen::VectorXd residuals;   // same, unsquared, scaled by 1/sqrt(S_n)
};

/// Telescoping decomposition of x^T C^{-1} x.
QuadraticIncrements quadratic_form_increments(const Eigen::VectorXd& x,
                                              const Eigen::MatrixXd& cov);

/// Incremental orthonormalization of a sequence of vectors known only through
/// inner products. Keeps the coefficient matrix K of the vectors pushed so far
/// and the orthonormal data projections y = K X.
class GramSchmidtChain {
 public:
  explicit GramSchmidtChain(int capacity = 0);

  int size() const { return size_; }

  /// Residual of a new vector with cross products `cross` (against the
  /// existing vectors), squared norm `self` and data projection `x`.
  /// Throws NumericDomainError if the vector is numerically dependent.
  double push(std::span<const double> cross, double self, double x);

  /// Residuals of a (cos, sin) pair appended after the current chain without
  /// modifying it. `pair_cross` is <A_cos, A_sin>. Returns {NaN, NaN} when
  /// the pair is numerically dependent on the chain.
  std::pair<double, double> peek_pair(std::span<const double> cross_cos,
                                      std::span<const double> cross_sin, double self_cos,
                                      double self_sin, double pair_cross, double x_cos,
                                      double x_sin) const;

  const Eigen::MatrixXd& coefficients() const { return coeff_; }
  std::span<const double> residuals() const { return {residuals_.data(), residuals_.size()}; }

 private:
  // p = K * cross, i.e. projections of the new vector onto the current
  // orthonormal basis.
  void project(std::span<const double> cross, double* out) const;

  Eigen::MatrixXd coeff_;
  std::vector<double> residuals_;
  int size_ = 0;
};

/// Relative threshold on S_n / G_nn below which a vector counts as dependent
/// (condition number ~ 1e12).
inline constexpr double kDependenceThreshold = 1e-12;

}  // namespace mos
