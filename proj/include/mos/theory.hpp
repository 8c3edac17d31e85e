#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mos/criteria.hpp"
#include "mos/distributions.hpp"
#include "mos/signal_model.hpp"

namespace mos {

enum class DistMode { ql, ml };

/// Models of V_1..V_N, treated as independent.
struct ComponentDistSet {
  std::vector<Dist> dists;
  std::vector<double> lambdas;  // noncentralities (QL) or dbar_c^2 + dbar_s^2 - 2 (ML)
  DistMode mode = DistMode::ql;

  int size() const { return static_cast<int>(dists.size()); }
  /// Distribution of V_1 + ... + V_count.
  Dist partial_sum(int count) const;
};

struct ResidualMeans {
  Eigen::VectorXd mean_c;
  Eigen::VectorXd mean_s;
  Eigen::VectorXd lambda;
};

/// E(l_ci), E(l_si) when the N candidate models are evaluated at
/// `eval_frequencies` (one per slot). E(X*) is built as the mixed Gram matrix
/// between evaluation and true bases times (a cos phi, a sin phi).
ResidualMeans residual_means(const Scenario& scenario, std::span<const double> eval_frequencies);

/// Mixed Gram matrix <b*_j, b_k>: rows evaluation basis (2N), columns true
/// component basis (2 nu0).
Eigen::MatrixXd mixed_gram(const Scenario& scenario, std::span<const double> eval_frequencies);

ComponentDistSet component_dists_ql(const Scenario& scenario,
                                    std::span<const double> eval_frequencies);

/// xi_c, xi_s for a slot shape at frequency omega with band width `width`.
std::pair<double, double> ml_xi(const CandidateSlot& slot, double omega, double phase,
                                double width);

/// Approximate distributions of the ML increments. Requires the true signals
/// to be orthogonal within `orth_tol` (normalized off-diagonal Gram entries).
ComponentDistSet component_dists_ml(const Scenario& scenario,
                                    MlCdfDenominator denominator = MlCdfDenominator::squared,
                                    double orth_tol = 0.1);

struct AbridgedReport {
  double p_a = 0.0;
  CriterionSpec criterion;
  DistMode mode = DistMode::ql;
  double error_estimate = 0.0;
};

/// 1 - F_{n+1}(T) + F_{n+1}(T) F_n(T) with n = nu0.
AbridgedReport abridged_gic(const ComponentDistSet& set, double threshold, int nu0);
/// Requires 0 < kappa_ir <= 1.
AbridgedReport abridged_pmep_ir(const ComponentDistSet& set, double kappa_ir, int nu0,
                                double tol = 1e-8);
AbridgedReport abridged_pmep_i(const ComponentDistSet& set, double kappa_i, int nu0,
                               double tol = 1e-8);
/// Dispatch on the criterion; AIC maps to a GIC threshold of 4 kappa. EEF has
/// no closed form and throws ValidationError.
AbridgedReport abridged(const ComponentDistSet& set, const CriterionSpec& spec, int nu0);

struct ConsistencyRange {
  double kappa_ir_exact_max = 0.0;   // kappa_IR < this
  double kappa_ir_simple_max = 0.0;  // rho
  double kappa_i_exact_min = 0.0;    // kappa_I > this
  double kappa_i_simple_min = 0.0;   // ln N / ln(rho / N + 1)
  double rho = 0.0;

  bool ir_consistent(double kappa, bool exact = true) const;
  bool i_consistent(double kappa, bool exact = true) const;
};

/// `d_n_sq` holds the normalized squared means of the first nu0 increments in
/// index order.
ConsistencyRange consistency_range(std::span<const double> d_n_sq, int max_order);

enum class Loss { one, abs, square };

double loss_value(Loss loss, double delta);

struct FrequencyErrorSweep {
  std::vector<double> deltas;
  std::vector<double> p_a;
  std::vector<double> loss_weights;
  double p_aq = 0.0;
};

/// p_a at omega* = omega_0 + delta (applied to every slot) for each grid point.
FrequencyErrorSweep ql_sweep(const Scenario& scenario, const CriterionSpec& spec,
                             std::span<const double> delta_grid, Loss loss = Loss::one);

/// sum_i p_delta_i p_a(delta_i) L(delta_i).
double weighted_average_abridged(const FrequencyErrorSweep& sweep,
                                 std::span<const double> delta_probabilities);

struct BlInterval {
  double half_width = 0.0;
  bool saturated = false;
};

/// Largest |delta| on the grid such that every grid point up to it has
/// p_a <= reference.
BlInterval bl_interval(const FrequencyErrorSweep& sweep, double ml_reference_pe);

}  // namespace mos
