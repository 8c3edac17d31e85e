#include "mos/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mos/errors.hpp"

namespace mos {
namespace {

constexpr double kMaxCondition = 1e12;

void check_degenerate(const Eigen::MatrixXd& cov) {
  const Eigen::VectorXd d = cov.diagonal().cwiseSqrt();
  const Eigen::MatrixXd corr = d.cwiseInverse().asDiagonal() * cov * d.cwiseInverse().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (lo > 0.0 && hi / lo <= kMaxCondition) return;
  int first = 0, second = 0;
  double worst = -1.0;
  for (int i = 0; i < corr.rows(); ++i) {
    for (int j = i + 1; j < corr.cols(); ++j) {
      const bool same_slot = i / 2 == j / 2;
      const double c = std::abs(corr(i, j)) - (same_slot ? 1.0 : 0.0);  // prefer cross-slot pairs
      if (c > worst) {
        worst = c;
        first = i / 2;
        second = j / 2;
      }
    }
  }
  throw DegenerateStatsError("covariance of sufficient statistics is singular (slots " +
                                 std::to_string(first) + " and " + std::to_string(second) + ")",
                             first, second);
}

double wrap_phase(double phi) {
  const double two_pi = 2.0 * std::numbers::pi;
  phi = std::fmod(phi, two_pi);
  if (phi < 0.0) phi += two_pi;
  return phi >= two_pi ? 0.0 : phi;
}

}  // namespace

Eigen::MatrixXd basis_matrix(const Scenario& scenario, std::span<const double> frequencies) {
  const auto slots = scenario.slots();
  if (frequencies.size() > slots.size()) {
    throw ValidationError("more frequencies than candidate slots", "frequencies");
  }
  const int n = scenario.n_samples;
  Eigen::MatrixXd basis(n, 2 * static_cast<int>(frequencies.size()));
  std::vector<double> c(n), s(n);
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    if (!slots[i].band.contains(frequencies[i])) {
      throw ValidationError("frequency outside its band",
                            "frequencies[" + std::to_string(i) + "]");
    }
    slot_basis(slots[i], frequencies[i], c, s);
    basis.col(2 * i) = Eigen::Map<const Eigen::VectorXd>(c.data(), n);
    basis.col(2 * i + 1) = Eigen::Map<const Eigen::VectorXd>(s.data(), n);
  }
  return basis;
}

SufficientStats sufficient_stats(const Observation& observation,
                                 std::span<const double> frequencies, const Scenario& scenario) {
  if (static_cast<int>(observation.samples.size()) != scenario.n_samples) {
    throw ValidationError("observation length differs from n_samples", "observation.samples");
  }
  SufficientStats stats;
  stats.order = static_cast<int>(frequencies.size());
  stats.frequencies.assign(frequencies.begin(), frequencies.end());
  stats.sigma0 = scenario.noise_level;
  stats.noise_unknown = !scenario.noise_known;
  const Eigen::MatrixXd basis = basis_matrix(scenario, frequencies);
  const Eigen::Map<const Eigen::VectorXd> x(observation.samples.data(), scenario.n_samples);
  stats.x_vec = basis.transpose() * x;
  stats.cov = basis.transpose() * basis;
  if (stats.order > 0) check_degenerate(stats.cov);
  return stats;
}

AmpPhase amp_phase_mle(const SufficientStats& stats) {
  AmpPhase out;
  if (stats.order == 0) return out;
  check_degenerate(stats.cov);
  out.q = stats.cov.ldlt().solve(stats.x_vec);
  for (int i = 0; i < stats.order; ++i) {
    const double qc = out.q(2 * i), qs = out.q(2 * i + 1);
    out.amplitude.push_back(std::hypot(qc, qs));
    out.phase.push_back(wrap_phase(std::atan2(qs, qc)));
  }
  return out;
}

std::vector<double> fitted_signal(const Scenario& scenario, const SufficientStats& stats,
                                  const AmpPhase& fit) {
  std::vector<double> out(scenario.n_samples, 0.0);
  if (stats.order == 0) return out;
  const Eigen::VectorXd s = basis_matrix(scenario, stats.frequencies) * fit.q;
  for (int t = 0; t < scenario.n_samples; ++t) out[t] = s(t);
  return out;
}

double noise_level_mle(std::span<const double> samples, std::span<const double> fitted) {
  if (samples.size() != fitted.size()) throw ValidationError("sequence lengths differ");
  double rss = 0.0;
  for (std::size_t t = 0; t < samples.size(); ++t) {
    const double r = samples[t] - fitted[t];
    rss += r * r;
  }
  const double n = static_cast<double>(samples.size());
  return (rss / 2.0) / (n / (4.0 * std::numbers::pi));
}

double profile_loglik(const SufficientStats& stats, bool noise_known) {
  if (stats.order == 0) return 0.0;
  check_degenerate(stats.cov);
  const double q = stats.x_vec.dot(stats.cov.ldlt().solve(stats.x_vec));
  // a noiseless override (sigma0 = 0) keeps unit scaling
  const double scale = noise_known && stats.sigma0 > 0.0 ? stats.sigma0 * stats.sigma0 : 1.0;
  return std::max(0.0, q) / (2.0 * scale);
}

LoglikIncrements loglik_increments(const SufficientStats& stats) {
  LoglikIncrements out;
  out.l_c.resize(stats.order);
  out.l_s.resize(stats.order);
  out.v.resize(stats.order);
  if (stats.order == 0) return out;
  check_degenerate(stats.cov);
  const QuadraticIncrements q = quadratic_form_increments(stats.x_vec, stats.cov);
  const double scale = stats.noise_unknown || !(stats.sigma0 > 0.0) ? 1.0 : 1.0 / stats.sigma0;
  for (int i = 0; i < stats.order; ++i) {
    out.l_c(i) = q.residuals(2 * i) * scale;
    out.l_s(i) = q.residuals(2 * i + 1) * scale;
    out.v(i) = out.l_c(i) * out.l_c(i) + out.l_s(i) * out.l_s(i);
  }
  return out;
}

MlSearchPlan::MlSearchPlan(std::vector<CandidateSlot> slots, int n_samples, MlSearchConfig config)
    : slots_(std::move(slots)), n_(n_samples), config_(config) {
  if (config_.grid_points < 2) throw ValidationError("at least 2 grid points", "grid_points");
  if (!(config_.refine_tol > 0.0)) throw ValidationError("must be positive", "refine_tol");
  std::vector<double> c(n_), s(n_);
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    const Band& band = slots_[i].band;
    if (!(band.width() > 0.0)) {
      throw ValidationError("empty band", "slots[" + std::to_string(i) + "].band");
    }
    std::vector<double> grid(config_.grid_points);
    RowMatrix gc(config_.grid_points, n_), gs(config_.grid_points, n_);
    const double step = band.width() / config_.grid_points;
    for (int k = 0; k < config_.grid_points; ++k) {
      grid[k] = band.low + (k + 0.5) * step;
      slot_basis(slots_[i], grid[k], c, s);
      for (int t = 0; t < n_; ++t) {
        gc(k, t) = c[t];
        gs(k, t) = s[t];
      }
    }
    grid_.push_back(std::move(grid));
    grid_cos_.push_back(std::move(gc));
    grid_sin_.push_back(std::move(gs));
  }
}

MlSearchPlan::Candidate MlSearchPlan::evaluate(
    int, const double* cos_row, const double* sin_row, std::span<const double> samples,
    const GramSchmidtChain& chain, const std::vector<std::vector<double>>& committed) const {
  const std::size_t m = committed.size();
  double cross_c[64], cross_s[64];
  std::vector<double> heap;
  double* pc = cross_c;
  double* ps = cross_s;
  if (m > 64) {
    heap.resize(2 * m);
    pc = heap.data();
    ps = heap.data() + m;
  }
  for (std::size_t k = 0; k < m; ++k) {
    const double* a = committed[k].data();
    double acc_c = 0.0, acc_s = 0.0;
    for (int t = 0; t < n_; ++t) {
      acc_c += a[t] * cos_row[t];
      acc_s += a[t] * sin_row[t];
    }
    pc[k] = acc_c;
    ps[k] = acc_s;
  }
  double cc = 0.0, ss = 0.0, cs = 0.0, xc = 0.0, xs = 0.0;
  for (int t = 0; t < n_; ++t) {
    cc += cos_row[t] * cos_row[t];
    ss += sin_row[t] * sin_row[t];
    cs += cos_row[t] * sin_row[t];
    xc += samples[t] * cos_row[t];
    xs += samples[t] * sin_row[t];
  }
  const auto [rc, rs] = chain.peek_pair({pc, m}, {ps, m}, cc, ss, cs, xc, xs);
  if (std::isnan(rc) || std::isnan(rs)) return {};
  return {rc * rc + rs * rs, rc, rs};
}

MlSearchPlan::Candidate MlSearchPlan::evaluate_at(
    int slot, double omega, std::span<const double> samples, const GramSchmidtChain& chain,
    const std::vector<std::vector<double>>& committed) const {
  std::vector<double> c(n_), s(n_);
  slot_basis(slots_[slot], omega, c, s);
  return evaluate(slot, c.data(), s.data(), samples, chain, committed);
}

MlSearchResult MlSearchPlan::search(std::span<const double> samples, int order) const {
  if (order < 1 || order > static_cast<int>(slots_.size())) {
    throw ValidationError("order must be in [1, slots]", "order");
  }
  if (static_cast<int>(samples.size()) != n_) {
    throw ValidationError("observation length differs from n_samples", "observation.samples");
  }
  MlSearchResult out;
  GramSchmidtChain chain(2 * order);
  std::vector<std::vector<double>> committed;
  committed.reserve(2 * order);
  std::vector<double> c(n_), s(n_);
  for (int i = 0; i < order; ++i) {
    int best_k = -1;
    Candidate best;
    for (int k = 0; k < config_.grid_points; ++k) {
      const Candidate cand = evaluate(i, grid_cos_[i].row(k).data(), grid_sin_[i].row(k).data(),
                                      samples, chain, committed);
      if (cand.value > best.value) {
        best = cand;
        best_k = k;
      }
    }
    if (best_k < 0) {
      throw NumericDomainError("no admissible frequency in band of slot " + std::to_string(i),
                               i + 1);
    }
    double best_omega = grid_[i][best_k];

    // golden section on the neighbouring grid cells, clipped to the band
    const Band& band = slots_[i].band;
    const double step = band.width() / config_.grid_points;
    double lo = std::max(best_omega - step, band.low + 1e-12);
    double hi = std::min(best_omega + step, band.high - 1e-12);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
    Candidate f1 = evaluate_at(i, x1, samples, chain, committed);
    Candidate f2 = evaluate_at(i, x2, samples, chain, committed);
    while (hi - lo > config_.refine_tol) {
      if (f1.value >= f2.value) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - inv_phi * (hi - lo);
        f1 = evaluate_at(i, x1, samples, chain, committed);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + inv_phi * (hi - lo);
        f2 = evaluate_at(i, x2, samples, chain, committed);
      }
    }
    const double mid = 0.5 * (lo + hi);
    const Candidate refined = evaluate_at(i, mid, samples, chain, committed);
    if (refined.value >= best.value) {
      best_omega = mid;
      best = refined;
    }

    // commit the chosen pair
    slot_basis(slots_[i], best_omega, c, s);
    std::vector<double> cross(committed.size() + 1);
    double xc = 0.0, xs = 0.0, cc = 0.0, ss = 0.0;
    for (int t = 0; t < n_; ++t) {
      xc += samples[t] * c[t];
      xs += samples[t] * s[t];
      cc += c[t] * c[t];
      ss += s[t] * s[t];
    }
    for (std::size_t k = 0; k < committed.size(); ++k) {
      double acc = 0.0;
      for (int t = 0; t < n_; ++t) acc += committed[k][t] * c[t];
      cross[k] = acc;
    }
    const double rc = chain.push({cross.data(), committed.size()}, cc, xc);
    committed.push_back(c);
    for (std::size_t k = 0; k < committed.size(); ++k) {
      double acc = 0.0;
      for (int t = 0; t < n_; ++t) acc += committed[k][t] * s[t];
      cross[k] = acc;
    }
    const double rs = chain.push({cross.data(), committed.size()}, ss, xs);
    committed.push_back(s);

    out.frequencies.push_back(best_omega);
    out.l_c.push_back(rc);
    out.l_s.push_back(rs);
    out.v.push_back(rc * rc + rs * rs);
  }
  return out;
}

MlSearchResult ml_frequency_search(const Observation& observation, const Scenario& scenario,
                                   int order, MlSearchConfig config) {
  auto slots = scenario.slots();
  if (order < 1 || order > static_cast<int>(slots.size())) {
    throw ValidationError("order must be in [1, max_order]", "order");
  }
  slots.resize(order);
  return MlSearchPlan(std::move(slots), scenario.n_samples, config)
      .search(observation.samples, order);
}

std::vector<double> bl_frequencies(std::span<const Band> bands, const BlRule& rule,
                                   std::optional<std::vector<double>> true_frequencies) {
  std::vector<double> out(bands.size());
  for (std::size_t i = 0; i < bands.size(); ++i) {
    const std::string path = "bl.frequencies[" + std::to_string(i) + "]";
    if (!(bands[i].width() > 0.0)) throw ValidationError("empty band", path);
    switch (rule.kind) {
      case BlRule::Kind::center:
        out[i] = bands[i].center();
        break;
      case BlRule::Kind::fixed:
        if (rule.values.size() != bands.size()) {
          throw ValidationError("one fixed value per band required", "bl.values");
        }
        out[i] = rule.values[i];
        break;
      case BlRule::Kind::offset:
        if (!true_frequencies || true_frequencies->size() != bands.size()) {
          throw ValidationError("offset rule needs one true frequency per band", "bl.delta");
        }
        out[i] = (*true_frequencies)[i] + rule.delta;
        break;
    }
    if (!bands[i].contains(out[i])) throw ValidationError("frequency outside its band", path);
  }
  return out;
}

}  // namespace mos
