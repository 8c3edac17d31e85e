#include "mos/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include "mos/errors.hpp"
#include "mos/montecarlo.hpp"
#include "mos/theory.hpp"

namespace mos {

TuneConfig TuneConfig::defaults_for(TuneFamily family) {
  TuneConfig c;
  c.family = family;
  if (family == TuneFamily::pmep_i) {
    c.low = 1.0;
    c.high = 12.0;
    c.refine_tol = 1e-2;
  }
  return c;
}

CriterionSpec tuned_spec(TuneFamily family, double kappa) {
  if (family == TuneFamily::pmep_ir) return PmepIr{kappa};
  return PmepI{kappa};
}

TuneResult tune(const Scenario& scenario, const TuneConfig& config) {
  scenario.validate();
  if (!(config.low <= config.high) || !std::isfinite(config.low) || !std::isfinite(config.high)) {
    throw ValidationError("search range is empty", "tune.range");
  }
  if (!(config.low > 0.0)) throw ValidationError("kappa must be positive", "tune.range");
  if (config.grid < 1) throw ValidationError("at least one grid point", "tune.grid");
  const int nu0 = scenario.true_order();

  std::function<double(double)> objective;
  std::optional<ComponentDistSet> set;
  std::optional<LoglikPaths> paths;
  if (config.objective == TuneObjective::abridged_theory) {
    set = component_dists_ql(scenario, scenario.slot_frequencies());
    objective = [&](double k) { return abridged(*set, tuned_spec(config.family, k), nu0).p_a; };
  } else {
    paths = simulate_paths(scenario, config.approach, config.trials, config.master_seed);
    objective = [&](double k) {
      return evaluate_paths(*paths, tuned_spec(config.family, k), nu0).p_e.p;
    };
  }

  TuneResult result;
  result.objective = config.objective;
  auto record = [&](double k) {
    const double v = objective(k);
    result.trace.emplace_back(k, v);
    return v;
  };

  if (config.low == config.high || config.grid == 1) {
    const double k = config.grid == 1 ? 0.5 * (config.low + config.high) : config.low;
    result.kappa_opt = k;
    result.value = record(k);
  } else {
    const int g = config.grid;
    const double step = (config.high - config.low) / (g - 1);
    std::vector<double> ks(g), vs(g);
    for (int i = 0; i < g; ++i) {
      ks[i] = config.low + i * step;
      vs[i] = record(ks[i]);
    }
    const auto [lo_it, hi_it] = std::minmax_element(vs.begin(), vs.end());
    if (*hi_it - *lo_it <= config.flat_tol) {
      result.flat = true;
      result.kappa_opt = 0.5 * (config.low + config.high);
      result.value = record(result.kappa_opt);
    } else {
      const int best = static_cast<int>(lo_it - vs.begin());
      result.kappa_opt = ks[best];
      result.value = vs[best];
      if (config.refine) {
        double a = ks[std::max(0, best - 1)];
        double b = ks[std::min(g - 1, best + 1)];
        const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
        double f1 = record(x1), f2 = record(x2);
        auto consider = [&](double k, double v) {
          if (v < result.value) {
            result.value = v;
            result.kappa_opt = k;
          }
        };
        consider(x1, f1);
        consider(x2, f2);
        while (b - a > config.refine_tol) {
          if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = record(x1);
            consider(x1, f1);
          } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = record(x2);
            consider(x2, f2);
          }
        }
      }
    }
  }

  const ResidualMeans means = residual_means(scenario, scenario.slot_frequencies());
  std::vector<double> d(means.lambda.data(), means.lambda.data() + nu0);
  if (std::all_of(d.begin(), d.end(), [](double x) { return x > 0.0; })) {
    const ConsistencyRange range = consistency_range(d, scenario.max_order);
    result.consistency_ok = config.family == TuneFamily::pmep_ir
                                ? range.ir_consistent(result.kappa_opt)
                                : range.i_consistent(result.kappa_opt);
  }
  return result;
}

}  // namespace mos
