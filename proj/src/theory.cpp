#include "mos/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mos/errors.hpp"
#include "mos/likelihood.hpp"
#include "mos/linalg.hpp"
#include "mos/quadrature.hpp"

namespace mos {
namespace {

constexpr int kMlTablePoints = 2048;

void check_nu0(const ComponentDistSet& set, int nu0) {
  if (set.size() < 1) throw ValidationError("empty component set", "dists");
  if (nu0 < 1 || nu0 > set.size()) throw ValidationError("nu0 outside [1, N]", "nu0");
}

// E[g(V)] including the atom at zero.
QuadResult expect(const Dist& d, const Integrand& g, double tol, std::vector<double> extra) {
  QuadResult out;
  if (d.atom() > 0.0) out.value = d.atom() * g(0.0);
  const double support = d.support_hint();
  if (support <= 0.0) return out;
  std::vector<double> bps = d.breakpoints();
  bps.insert(bps.end(), extra.begin(), extra.end());
  const QuadResult r = integrate([&](double x) { return d.pdf(x) * g(x); }, 0.0, support, tol, bps);
  out.value += r.value;
  out.abs_error = r.abs_error;
  out.evaluations = r.evaluations;
  return out;
}

std::vector<double> scaled(const std::vector<double>& v, double s) {
  std::vector<double> out;
  out.reserve(v.size());
  for (double x : v) out.push_back(x * s);
  return out;
}

void append(std::vector<double>& dst, const std::vector<double>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

AbridgedReport make_report(double p, double err, const CriterionSpec& spec, DistMode mode) {
  AbridgedReport r;
  r.p_a = std::clamp(p, 0.0, 1.0);
  r.error_estimate = err;
  r.criterion = spec;
  r.mode = mode;
  return r;
}

}  // namespace

Dist ComponentDistSet::partial_sum(int count) const {
  if (count < 0 || count > size()) throw ValidationError("count outside [0, N]", "count");
  if (count == 0) return point_mass_zero();
  if (mode == DistMode::ql) {
    double lambda = 0.0;
    for (int i = 0; i < count; ++i) lambda += lambdas[i];
    return nc_chisq(2 * count, lambda);
  }
  Dist acc = dists[0];
  for (int i = 1; i < count; ++i) acc = tabulate(convolve_cdfs(acc, dists[i]), kMlTablePoints);
  return acc;
}

Eigen::MatrixXd mixed_gram(const Scenario& scenario, std::span<const double> eval_frequencies) {
  const Eigen::MatrixXd eval = basis_matrix(scenario, eval_frequencies);
  const int n = scenario.n_samples;
  const int nu0 = scenario.true_order();
  Eigen::MatrixXd truth(n, 2 * nu0);
  for (int i = 0; i < nu0; ++i) {
    const SinusoidComponent& c = scenario.components[i];
    for (int t = 0; t < n; ++t) {
      const double arg = c.frequency * (t + 1) + c.phase_envelope[t];
      truth(t, 2 * i) = c.amplitude_envelope[t] * std::cos(arg);
      truth(t, 2 * i + 1) = c.amplitude_envelope[t] * std::sin(arg);
    }
  }
  return eval.transpose() * truth;
}

ResidualMeans residual_means(const Scenario& scenario, std::span<const double> eval_frequencies) {
  scenario.validate();
  if (static_cast<int>(eval_frequencies.size()) != scenario.max_order) {
    throw ValidationError("one evaluation frequency per slot required", "eval_frequencies");
  }
  const int nu0 = scenario.true_order();
  Eigen::VectorXd q0(2 * nu0);
  for (int i = 0; i < nu0; ++i) {
    const SinusoidComponent& c = scenario.components[i];
    q0(2 * i) = c.amplitude * std::cos(c.phase);
    q0(2 * i + 1) = c.amplitude * std::sin(c.phase);
  }
  const Eigen::VectorXd ex = mixed_gram(scenario, eval_frequencies) * q0;
  const Eigen::MatrixXd basis = basis_matrix(scenario, eval_frequencies);
  GramSystem system;
  system.gram = basis.transpose() * basis;
  const Eigen::MatrixXd k = gram_schmidt_noniterative(system);
  const double sigma = scenario.noise_level > 0.0 ? scenario.noise_level : 1.0;
  const Eigen::VectorXd means = k * ex / sigma;
  ResidualMeans out;
  const int n = scenario.max_order;
  out.mean_c.resize(n);
  out.mean_s.resize(n);
  out.lambda.resize(n);
  for (int i = 0; i < n; ++i) {
    out.mean_c(i) = means(2 * i);
    out.mean_s(i) = means(2 * i + 1);
    out.lambda(i) = out.mean_c(i) * out.mean_c(i) + out.mean_s(i) * out.mean_s(i);
  }
  return out;
}

ComponentDistSet component_dists_ql(const Scenario& scenario,
                                    std::span<const double> eval_frequencies) {
  const ResidualMeans means = residual_means(scenario, eval_frequencies);
  ComponentDistSet set;
  set.mode = DistMode::ql;
  for (int i = 0; i < means.lambda.size(); ++i) {
    set.lambdas.push_back(means.lambda(i));
    set.dists.push_back(nc_chisq2(means.lambda(i)));
  }
  return set;
}

std::pair<double, double> ml_xi(const CandidateSlot& slot, double omega, double phase,
                                double width) {
  const std::size_t n = slot.amplitude_envelope.size();
  double energy = 0.0, sum_sin = 0.0, sum_cos = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k + 1);
    const double f = slot.amplitude_envelope[k];
    const double psi = slot.phase_envelope[k];
    const double e = f * std::cos(omega * t - phase + psi);
    energy += e * e;
    const double ws = t * f * std::sin(omega * t + psi);
    const double wc = t * f * std::cos(omega * t + psi);
    sum_sin += ws * ws;
    sum_cos += wc * wc;
  }
  if (!(energy > 0.0)) throw ValidationError("slot has zero energy", "amplitude_envelope");
  return {width * std::sqrt(sum_sin / energy), width * std::sqrt(sum_cos / energy)};
}

ComponentDistSet component_dists_ml(const Scenario& scenario, MlCdfDenominator denominator,
                                    double orth_tol) {
  scenario.validate();
  const Eigen::MatrixXd gram = signal_gram(scenario.components);
  const double coupling = max_normalized_offdiag(gram);
  if (coupling > orth_tol) {
    throw ModelViolationError("signals are not orthogonal enough for the ML increment model "
                              "(normalized coupling " + std::to_string(coupling) + ")");
  }
  const auto slots = scenario.slots();
  const auto truth = scenario.slot_frequencies();
  const ResidualMeans means = residual_means(scenario, truth);
  const int nu0 = scenario.true_order();
  ComponentDistSet set;
  set.mode = DistMode::ml;
  for (int i = 0; i < scenario.max_order; ++i) {
    const bool present = i < nu0;
    const double phase = present ? scenario.components[i].phase : 0.0;
    const auto [xi_c, xi_s] = ml_xi(slots[i], truth[i], phase, slots[i].band.width());
    const double dc = present ? means.mean_c(i) * means.mean_c(i) + 1.0 : 0.0;
    const double ds = present ? means.mean_s(i) * means.mean_s(i) + 1.0 : 0.0;
    const Dist fc = ml_component_cdf(dc, xi_c, present, denominator);
    const Dist fs = ml_component_cdf(ds, xi_s, present, denominator);
    set.dists.push_back(tabulate(convolve_cdfs(fc, fs), kMlTablePoints));
    set.lambdas.push_back(present ? dc + ds - 2.0 : 0.0);
  }
  return set;
}

AbridgedReport abridged_gic(const ComponentDistSet& set, double threshold, int nu0) {
  check_nu0(set, nu0);
  const int n_max = set.size();
  const CriterionSpec spec = Gic{threshold / 2.0, 1.0};
  if (n_max == 1) return make_report(0.0, 0.0, spec, set.mode);
  if (nu0 == 1) return make_report(1.0 - set.dists[1].cdf(threshold), 0.0, spec, set.mode);
  const double fn = set.dists[nu0 - 1].cdf(threshold);
  if (nu0 == n_max) return make_report(fn, 0.0, spec, set.mode);
  const double fn1 = set.dists[nu0].cdf(threshold);
  return make_report(1.0 - fn1 + fn1 * fn, 0.0, spec, set.mode);
}

AbridgedReport abridged_pmep_ir(const ComponentDistSet& set, double kappa_ir, int nu0,
                                double tol) {
  check_nu0(set, nu0);
  if (!(kappa_ir > 0.0) || kappa_ir > 1.0) {
    throw ValidationError("abridged PMEP-IR formula needs 0 < kappa_ir <= 1", "kappa_ir");
  }
  const CriterionSpec spec = PmepIr{kappa_ir};
  const int n_max = set.size();
  if (n_max == 1) return make_report(0.0, 0.0, spec, set.mode);
  if (kappa_ir == 1.0) {
    // The maximum includes V_nu0 itself, so V_nu0 > max V never holds: the
    // lower comparison always fails and the upper one never does.
    return make_report(nu0 > 1 ? 1.0 : 0.0, 0.0, spec, set.mode);
  }
  const int a = nu0 - 1;  // V_nu0
  const int b = nu0;      // V_nu0+1 (may not exist)
  const double k = kappa_ir;
  std::vector<int> others;
  for (int j = 0; j < n_max; ++j) {
    if (j != a && j != b) others.push_back(j);
  }
  auto f_max = [&](double x) {
    double p = 1.0;
    for (int j : others) {
      p *= set.dists[j].cdf(x);
      if (p == 0.0) break;
    }
    return p;
  };
  std::vector<double> other_breaks;
  for (int j : others) append(other_breaks, set.dists[j].breakpoints());
  const std::vector<double> kb = scaled(other_breaks, k);

  if (nu0 == n_max) {
    // success: every other V_j < V_nu0 / kappa
    const QuadResult s = expect(set.dists[a], [&](double x) { return f_max(x / k); }, tol, kb);
    return make_report(1.0 - s.value, s.abs_error, spec, set.mode);
  }
  const Dist& da = set.dists[a];
  const Dist& db = set.dists[b];
  if (nu0 == 1) {
    // failure: V_2 exceeds kappa times every other increment
    std::vector<double> bps = kb;
    append(bps, scaled(da.breakpoints(), k));
    const QuadResult f =
        expect(db, [&](double y) { return da.cdf(y / k) * f_max(y / k); }, tol, bps);
    return make_report(f.value, f.abs_error, spec, set.mode);
  }
  std::vector<double> bps1 = kb;
  append(bps1, db.breakpoints());
  const QuadResult i1 =
      expect(da, [&](double x) { return f_max(x / k) * db.cdf(x); }, 0.5 * tol, bps1);
  std::vector<double> bps2 = kb;
  append(bps2, da.breakpoints());
  append(bps2, scaled(da.breakpoints(), k));
  const QuadResult i2 = expect(
      db, [&](double y) { return f_max(y / k) * (da.cdf(y / k) - da.cdf(y)); }, 0.5 * tol, bps2);
  return make_report(1.0 - i1.value + i2.value, i1.abs_error + i2.abs_error, spec, set.mode);
}

AbridgedReport abridged_pmep_i(const ComponentDistSet& set, double kappa_i, int nu0,
                               double tol) {
  check_nu0(set, nu0);
  if (!(kappa_i > 0.0) || !std::isfinite(kappa_i)) {
    throw ValidationError("kappa_i must be positive", "kappa_i");
  }
  const CriterionSpec spec = PmepI{kappa_i};
  const int n_max = set.size();
  if (n_max == 1) return make_report(0.0, 0.0, spec, set.mode);
  const double n = nu0;
  const double big_a = nu0 > 1 ? std::pow(n / (n - 1.0), 1.0 / kappa_i) - 1.0 : 0.0;
  const double big_b = nu0 < n_max ? std::pow((n + 1.0) / n, 1.0 / kappa_i) - 1.0 : 0.0;
  const Dist& dn = set.dists[nu0 - 1];

  if (nu0 == 1) {
    // success: V_2 <= B V_1
    const Dist& d2 = set.dists[1];
    const QuadResult s = expect(dn, [&](double x) { return d2.cdf(big_b * x); }, tol,
                                scaled(d2.breakpoints(), 1.0 / big_b));
    return make_report(1.0 - s.value, s.abs_error, spec, set.mode);
  }
  const Dist sigma = set.partial_sum(nu0 - 1);
  const std::vector<double> sigma_breaks = sigma.breakpoints();
  auto f_sigma = [&](double s) { return s > 0.0 ? sigma.cdf(s) : 0.0; };
  if (nu0 == n_max) {
    // success: V_1 + ... + V_{nu0-1} < V_nu0 / A
    const QuadResult s = expect(dn, [&](double x) { return f_sigma(x / big_a); }, tol,
                                scaled(sigma_breaks, big_a));
    return make_report(1.0 - s.value, s.abs_error, spec, set.mode);
  }

  // success: y / B - x <= S < x / A with x = V_nu0, y = V_nu0+1, S the lower
  // partial sum; nonempty only for x > y A / (B (A + 1))
  const Dist& dn1 = set.dists[nu0];
  const double support_n = dn.support_hint();
  const std::vector<double> n_breaks = dn.breakpoints();
  const double inner_tol = 0.1 * tol;
  double inner_error = 0.0;
  auto inner = [&](double y) {
    const double lo = y * big_a / (big_b * (big_a + 1.0));
    if (lo >= support_n) return 0.0;
    std::vector<double> bps = n_breaks;
    append(bps, scaled(sigma_breaks, big_a));
    bps.push_back(y / big_b);
    for (double p : sigma_breaks) bps.push_back(y / big_b - p);
    const QuadResult r = integrate(
        [&](double x) {
          return dn.pdf(x) * (f_sigma(x / big_a) - f_sigma(y / big_b - x));
        },
        lo, support_n, inner_tol, bps);
    inner_error = std::max(inner_error, r.abs_error);
    return r.value;
  };
  std::vector<double> outer_breaks = dn1.breakpoints();
  append(outer_breaks, scaled(n_breaks, big_b));
  const QuadResult s = expect(dn1, inner, tol, outer_breaks);
  return make_report(1.0 - s.value, s.abs_error + inner_error, spec, set.mode);
}

AbridgedReport abridged(const ComponentDistSet& set, const CriterionSpec& spec, int nu0) {
  AbridgedReport r;
  if (const auto* gic = std::get_if<Gic>(&spec)) {
    r = abridged_gic(set, 2.0 * gic->upsilon * gic->kappa, nu0);
  } else if (const auto* aic = std::get_if<Aic>(&spec)) {
    r = abridged_gic(set, 4.0 * aic->kappa, nu0);
  } else if (const auto* ir = std::get_if<PmepIr>(&spec)) {
    r = abridged_pmep_ir(set, ir->kappa_ir, nu0);
  } else if (const auto* pi = std::get_if<PmepI>(&spec)) {
    r = abridged_pmep_i(set, pi->kappa_i, nu0);
  } else {
    throw ValidationError("no abridged formula for " + criterion_name(spec), "criterion");
  }
  r.criterion = spec;
  return r;
}

bool ConsistencyRange::ir_consistent(double kappa, bool exact) const {
  return kappa > 0.0 && kappa < (exact ? kappa_ir_exact_max : kappa_ir_simple_max);
}

bool ConsistencyRange::i_consistent(double kappa, bool exact) const {
  return kappa > (exact ? kappa_i_exact_min : kappa_i_simple_min);
}

ConsistencyRange consistency_range(std::span<const double> d_n_sq, int max_order) {
  const int nu0 = static_cast<int>(d_n_sq.size());
  if (nu0 < 1) throw ValidationError("at least one normalized noncentrality", "d_n_sq");
  if (max_order < nu0) throw ValidationError("max_order below nu0", "max_order");
  for (int i = 0; i < nu0; ++i) {
    if (!(d_n_sq[i] > 0.0) || !std::isfinite(d_n_sq[i])) {
      throw ValidationError("must be positive", "d_n_sq[" + std::to_string(i) + "]");
    }
  }
  const double d_max = *std::max_element(d_n_sq.begin(), d_n_sq.end());
  const double d_min = *std::min_element(d_n_sq.begin(), d_n_sq.end());
  ConsistencyRange out;
  out.rho = d_min / d_max;
  out.kappa_ir_exact_max = std::numeric_limits<double>::infinity();
  out.kappa_i_exact_min = 0.0;
  for (int k = 1; k <= nu0 - 1; ++k) {
    double top = 0.0, bottom = 0.0;
    for (int i = nu0 - k; i < nu0; ++i) top += d_n_sq[i];
    for (int i = 0; i < nu0 - k; ++i) bottom += d_n_sq[i];
    out.kappa_ir_exact_max = std::min(out.kappa_ir_exact_max, top / (k * d_max));
    const double bound =
        std::log(static_cast<double>(nu0) / (nu0 - k)) / std::log1p(top / bottom);
    out.kappa_i_exact_min = std::max(out.kappa_i_exact_min, bound);
  }
  const double big_n = max_order;
  out.kappa_ir_simple_max = out.rho;
  out.kappa_i_simple_min = std::log(big_n) / std::log(out.rho / big_n + 1.0);
  return out;
}

double loss_value(Loss loss, double delta) {
  switch (loss) {
    case Loss::one:
      return 1.0;
    case Loss::abs:
      return std::abs(delta);
    case Loss::square:
      return delta * delta;
  }
  return 1.0;
}

FrequencyErrorSweep ql_sweep(const Scenario& scenario, const CriterionSpec& spec,
                             std::span<const double> delta_grid, Loss loss) {
  if (delta_grid.empty()) throw ValidationError("empty grid", "delta_omega_grid");
  FrequencyErrorSweep sweep;
  const auto truth = scenario.slot_frequencies();
  for (std::size_t g = 0; g < delta_grid.size(); ++g) {
    std::vector<double> eval(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) eval[i] = truth[i] + delta_grid[g];
    const auto bands = scenario.slot_bands();
    for (std::size_t i = 0; i < eval.size(); ++i) {
      if (!bands[i].contains(eval[i])) {
        throw ValidationError("shifted frequency leaves its band",
                              "delta_omega_grid[" + std::to_string(g) + "]");
      }
    }
    const ComponentDistSet set = component_dists_ql(scenario, eval);
    const double p = abridged(set, spec, scenario.true_order()).p_a;
    const double w = loss_value(loss, delta_grid[g]);
    sweep.deltas.push_back(delta_grid[g]);
    sweep.p_a.push_back(p);
    sweep.loss_weights.push_back(w);
    sweep.p_aq += p * w;
  }
  return sweep;
}

double weighted_average_abridged(const FrequencyErrorSweep& sweep,
                                 std::span<const double> delta_probabilities) {
  if (delta_probabilities.size() != sweep.p_a.size()) {
    throw ValidationError("one probability per grid point", "delta_probabilities");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < sweep.p_a.size(); ++i) {
    total += delta_probabilities[i] * sweep.p_a[i] * sweep.loss_weights[i];
  }
  return total;
}

BlInterval bl_interval(const FrequencyErrorSweep& sweep, double ml_reference_pe) {
  if (sweep.deltas.empty() || sweep.deltas.size() != sweep.p_a.size()) {
    throw ValidationError("sweep is empty or inconsistent", "sweep");
  }
  std::vector<std::size_t> order(sweep.deltas.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return std::abs(sweep.deltas[i]) < std::abs(sweep.deltas[j]);
  });
  if (sweep.deltas[order[0]] != 0.0) throw ValidationError("grid must contain 0", "sweep.deltas");
  BlInterval out;
  for (std::size_t idx : order) {
    if (sweep.p_a[idx] > ml_reference_pe) return out;
    out.half_width = std::abs(sweep.deltas[idx]);
  }
  out.saturated = true;
  return out;
}

}  // namespace mos
