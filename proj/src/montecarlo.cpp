#include "mos/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include <boost/math/distributions/binomial.hpp>

#include "mos/errors.hpp"
#include "mos/likelihood.hpp"
#include "mos/linalg.hpp"
#include "mos/rng.hpp"

namespace mos {
namespace {

constexpr double kZ95 = 1.959963984540054;

template <class Fn>
void parallel_for(long count, unsigned workers, Fn&& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<long>(workers, std::max(1L, count)));
  if (workers <= 1) {
    for (long k = 0; k < count; ++k) fn(k);
    return;
  }
  std::vector<std::thread> pool;
  const long chunk = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const long begin = w * chunk;
    const long end = std::min(count, begin + chunk);
    pool.emplace_back([&fn, begin, end] {
      for (long k = begin; k < end; ++k) fn(k);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

ProbabilityEstimate binomial_estimate(long count, long trials) {
  ProbabilityEstimate e;
  if (trials <= 0) return e;
  const double n = static_cast<double>(trials);
  e.p = static_cast<double>(count) / n;
  e.std_error = std::sqrt(e.p * (1.0 - e.p) / n);
  e.normal_low = std::max(0.0, e.p - kZ95 * e.std_error);
  e.normal_high = std::min(1.0, e.p + kZ95 * e.std_error);
  const double z2 = kZ95 * kZ95;
  const double centre = (e.p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = kZ95 / (1.0 + z2 / n) * std::sqrt(e.p * (1.0 - e.p) / n + z2 / (4.0 * n * n));
  e.wilson_low = count == 0 ? 0.0 : std::max(0.0, centre - half);
  e.wilson_high = count == trials ? 1.0 : std::min(1.0, centre + half);
  return e;
}

LoglikPaths simulate_paths(const Scenario& scenario, const Approach& approach, long trials,
                           std::uint64_t master_seed, unsigned workers) {
  scenario.validate();
  if (trials < 1) throw ValidationError("must be positive", "trials");
  const int n_max = scenario.max_order;
  const int n = scenario.n_samples;
  LoglikPaths paths;
  paths.max_order = n_max;
  paths.trials = trials;
  paths.master_seed = master_seed;
  paths.approach = approach_name(approach);
  paths.logliks.assign(static_cast<std::size_t>(trials) * n_max, 0.0);
  paths.degenerate.assign(trials, 0);

  const std::vector<double> clean = noiseless_signal(scenario);
  const double sigma = scenario.noise_level;
  auto make_samples = [&](long trial, std::vector<double>& x) {
    const std::uint64_t seed = derive_seed(master_seed, static_cast<std::uint64_t>(trial));
    x = clean;
    if (sigma > 0.0) {
      for (int k = 0; k < n; ++k) x[k] += sigma * normal_at(seed, static_cast<std::uint64_t>(k));
    }
  };

  if (const auto* ml = std::get_if<MaxLikelihood>(&approach)) {
    const MlSearchPlan plan(scenario.slots(), n, ml->search);
    const double scale = scenario.noise_known && sigma > 0.0 ? 1.0 / (sigma * sigma) : 1.0;
    parallel_for(trials, workers, [&](long trial) {
      std::vector<double> x;
      make_samples(trial, x);
      try {
        const MlSearchResult res = plan.search(x, n_max);
        double acc = 0.0;
        for (int i = 0; i < n_max; ++i) {
          acc += 0.5 * res.v[i] * scale;
          paths.logliks[trial * n_max + i] = acc;
        }
      } catch (const NumericDomainError&) {
        paths.degenerate[trial] = 1;
      }
    });
    return paths;
  }

  // fixed frequencies: one basis and one orthonormalizing matrix for all trials
  const std::vector<double> freqs = fixed_frequencies(scenario, approach);
  const Eigen::MatrixXd basis = basis_matrix(scenario, freqs);
  GramSystem system;
  system.gram = basis.transpose() * basis;
  Observation probe{clean, 0};
  (void)sufficient_stats(probe, freqs, scenario);  // degeneracy check on C
  const double scale = scenario.noise_known && sigma > 0.0 ? 1.0 / sigma : 1.0;
  const Eigen::MatrixXd projector = gram_schmidt_noniterative(system) * basis.transpose() * scale;
  parallel_for(trials, workers, [&](long trial) {
    std::vector<double> x;
    make_samples(trial, x);
    const Eigen::VectorXd l = projector * Eigen::Map<const Eigen::VectorXd>(x.data(), n);
    double acc = 0.0;
    for (int i = 0; i < n_max; ++i) {
      acc += 0.5 * (l(2 * i) * l(2 * i) + l(2 * i + 1) * l(2 * i + 1));
      paths.logliks[trial * n_max + i] = acc;
    }
  });
  return paths;
}

McReport evaluate_paths(const LoglikPaths& paths, const CriterionSpec& spec, int nu0) {
  validate(spec);
  const int n_max = paths.max_order;
  if (nu0 < 1 || nu0 > n_max) throw ValidationError("nu0 outside [1, N]", "nu0");
  McReport r;
  r.criterion = spec;
  r.approach = paths.approach;
  r.master_seed = paths.master_seed;
  r.histogram_offset = -(nu0 - 1);
  r.histogram.assign(n_max, 0);
  r.correct.reserve(paths.trials);
  long gt1 = 0, eq1 = 0;
  for (long t = 0; t < paths.trials; ++t) {
    if (paths.degenerate[t]) {
      ++r.degenerate;
      continue;
    }
    const std::vector<double> rv = decision_values(spec, paths.row(t));
    const int nu_hat = argmin_order(rv);
    const int diff = nu_hat - nu0;
    ++r.histogram[diff - r.histogram_offset];
    r.correct.push_back(diff == 0 ? 1 : 0);
    if (diff != 0) ++r.errors;
    if (std::abs(diff) == 1) ++eq1;
    if (std::abs(diff) > 1) ++gt1;
    if (abridged_failure(rv, nu0)) ++r.abridged_errors;
    ++r.trials;
  }
  r.degenerate_warning = r.degenerate * 100 > paths.trials;
  r.p_e = binomial_estimate(r.errors, r.trials);
  r.p_a = binomial_estimate(r.abridged_errors, r.trials);
  if (eq1 > 0) {
    r.ratio_gt1_eq1 = static_cast<double>(gt1) / static_cast<double>(eq1);
  } else {
    r.ratio_gt1_eq1 = gt1 > 0 ? std::numeric_limits<double>::infinity()
                              : std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

std::vector<McReport> estimate(const Scenario& scenario, const std::vector<CriterionSpec>& specs,
                               const Approach& approach, long trials, std::uint64_t master_seed,
                               unsigned workers) {
  if (trials < 100) throw ValidationError("at least 100 trials required", "trials");
  const LoglikPaths paths = simulate_paths(scenario, approach, trials, master_seed, workers);
  std::vector<McReport> out;
  out.reserve(specs.size());
  for (const auto& spec : specs) out.push_back(evaluate_paths(paths, spec, scenario.true_order()));
  return out;
}

PairedComparison paired_compare(const McReport& a, const McReport& b) {
  if (a.master_seed != b.master_seed) {
    throw ValidationError("reports use different master seeds", "master_seed");
  }
  if (a.correct.size() != b.correct.size() || a.degenerate != b.degenerate) {
    throw ValidationError("reports use different trial sets", "trials");
  }
  PairedComparison out;
  for (std::size_t t = 0; t < a.correct.size(); ++t) {
    if (a.correct[t] && !b.correct[t]) ++out.only_a_correct;
    if (!a.correct[t] && b.correct[t]) ++out.only_b_correct;
  }
  out.p_e_difference = a.p_e.p - b.p_e.p;
  const long discordant = out.only_a_correct + out.only_b_correct;
  if (discordant == 0) {
    out.p_value = 1.0;
    return out;
  }
  const boost::math::binomial_distribution<double> dist(static_cast<double>(discordant), 0.5);
  const double tail =
      boost::math::cdf(dist, static_cast<double>(std::min(out.only_a_correct, out.only_b_correct)));
  out.p_value = std::min(1.0, 2.0 * tail);
  return out;
}

FrequencyErrorSweep mc_sweep(const Scenario& scenario, const CriterionSpec& spec,
                             std::span<const double> delta_grid, long trials,
                             std::uint64_t master_seed, Loss loss) {
  if (delta_grid.empty()) throw ValidationError("empty grid", "delta_omega_grid");
  FrequencyErrorSweep sweep;
  for (double delta : delta_grid) {
    const Approach approach = Blind{BlRule::offset(delta)};
    const LoglikPaths paths = simulate_paths(scenario, approach, trials, master_seed);
    const McReport r = evaluate_paths(paths, spec, scenario.true_order());
    const double w = loss_value(loss, delta);
    sweep.deltas.push_back(delta);
    sweep.p_a.push_back(r.p_a.p);
    sweep.loss_weights.push_back(w);
    sweep.p_aq += r.p_a.p * w;
  }
  return sweep;
}

}  // namespace mos
