#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mos/linalg.hpp"
#include "mos/signal_model.hpp"

namespace mos {

/// Projections of the data on the unit-amplitude cos/sin basis of each slot
/// (index 2i cosine, 2i+1 sine) and their Gram matrix.
struct SufficientStats {
  int order = 0;
  Eigen::VectorXd x_vec;
  Eigen::MatrixXd cov;
  std::vector<double> frequencies;
  double sigma0 = 1.0;
  bool noise_unknown = false;
};

/// Stats for the first frequencies.size() slots of `scenario`. Throws
/// DegenerateStatsError when cond(C) > 1e12.
SufficientStats sufficient_stats(const Observation& observation,
                                 std::span<const double> frequencies, const Scenario& scenario);

/// Basis matrix (N_s x 2 nu) of the first frequencies.size() slots.
Eigen::MatrixXd basis_matrix(const Scenario& scenario, std::span<const double> frequencies);

struct AmpPhase {
  Eigen::VectorXd q;              // C^{-1} X
  std::vector<double> amplitude;  // sqrt(q_c^2 + q_s^2)
  std::vector<double> phase;      // atan2(q_s, q_c) in [0, 2 pi)
};

AmpPhase amp_phase_mle(const SufficientStats& stats);

/// sum_t q_c f cos(w t + Psi) + q_s f sin(w t + Psi) over the fitted slots.
std::vector<double> fitted_signal(const Scenario& scenario, const SufficientStats& stats,
                                  const AmpPhase& fit);

/// (sum_t (x - s)^2 / 2) / (N_s / (4 pi)). Not a calibrated variance: for pure
/// unit noise it concentrates near 2 pi.
double noise_level_mle(std::span<const double> samples, std::span<const double> fitted);

/// X^T C^{-1} X / (2 sigma0^2), or X^T C^{-1} X / 2 when the noise level is
/// unknown. Zero for order 0.
double profile_loglik(const SufficientStats& stats, bool noise_known);

struct LoglikIncrements {
  Eigen::VectorXd l_c;
  Eigen::VectorXd l_s;
  Eigen::VectorXd v;  // l_c^2 + l_s^2; profile_loglik(nu) = sum_{i<=nu} v_i / 2
};

/// Orthonormalized residual statistics per slot. Scaled by 1/sigma0 unless
/// stats.noise_unknown.
LoglikIncrements loglik_increments(const SufficientStats& stats);

struct MlSearchConfig {
  int grid_points = 256;
  double refine_tol = 1e-6;
};

struct MlSearchResult {
  std::vector<double> frequencies;
  std::vector<double> l_c;  // unscaled residuals (divide by sigma0)
  std::vector<double> l_s;
  std::vector<double> v;
};

/// Greedy maximization of the incremental statistic V_i over slot i's band,
/// one slot at a time with the earlier frequencies fixed: grid scan followed
/// by golden-section refinement. Grid basis vectors are built once so the
/// plan can be reused across observations.
class MlSearchPlan {
 public:
  MlSearchPlan(std::vector<CandidateSlot> slots, int n_samples, MlSearchConfig config = {});

  MlSearchResult search(std::span<const double> samples, int order) const;

 private:
  struct Candidate {
    double value = -1.0;
    double r_cos = 0.0;
    double r_sin = 0.0;
  };
  Candidate evaluate(int slot, const double* cos_row, const double* sin_row,
                     std::span<const double> samples, const GramSchmidtChain& chain,
                     const std::vector<std::vector<double>>& committed) const;
  Candidate evaluate_at(int slot, double omega, std::span<const double> samples,
                        const GramSchmidtChain& chain,
                        const std::vector<std::vector<double>>& committed) const;

  std::vector<CandidateSlot> slots_;
  int n_ = 0;
  MlSearchConfig config_;
  std::vector<std::vector<double>> grid_;           // grid frequencies per slot
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  std::vector<RowMatrix> grid_cos_, grid_sin_;  // (grid_points x N_s) per slot
};

MlSearchResult ml_frequency_search(const Observation& observation, const Scenario& scenario,
                                   int order, MlSearchConfig config = {});

struct BlRule {
  enum class Kind { center, fixed, offset };
  Kind kind = Kind::center;
  std::vector<double> values;  // fixed
  double delta = 0.0;          // offset

  static BlRule center() { return {}; }
  static BlRule fixed(std::vector<double> v) { return {Kind::fixed, std::move(v), 0.0}; }
  static BlRule offset(double d) { return {Kind::offset, {}, d}; }
};

/// Blind frequency choice per band. `true_frequencies` is required by the
/// offset rule. Throws ValidationError for values outside their band.
std::vector<double> bl_frequencies(std::span<const Band> bands, const BlRule& rule,
                                   std::optional<std::vector<double>> true_frequencies = {});

}  // namespace mos
