#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mos/criteria.hpp"
#include "mos/signal_model.hpp"

namespace mos {

enum class TuneFamily { pmep_ir, pmep_i };
enum class TuneObjective { abridged_theory, monte_carlo };

struct TuneConfig {
  TuneFamily family = TuneFamily::pmep_ir;
  TuneObjective objective = TuneObjective::abridged_theory;
  double low = 0.01;
  double high = 1.0;
  int grid = 32;
  bool refine = true;
  double refine_tol = 1e-3;
  // Monte Carlo objective: p_e over `trials` common-random-number trials.
  long trials = 10000;
  std::uint64_t master_seed = 1;
  Approach approach = KnownFrequencies{};
  double flat_tol = 1e-12;

  static TuneConfig defaults_for(TuneFamily family);
};

struct TuneResult {
  double kappa_opt = 0.0;
  TuneObjective objective = TuneObjective::abridged_theory;
  double value = 0.0;
  std::vector<std::pair<double, double>> trace;  // grid scan, then refinement points
  bool consistency_ok = false;
  bool flat = false;
};

/// Coarse grid scan, then golden-section refinement on the bracket around the
/// best grid point. Consistency is checked against the exact inequalities for
/// the scenario's noncentralities at the true frequencies.
TuneResult tune(const Scenario& scenario, const TuneConfig& config);

CriterionSpec tuned_spec(TuneFamily family, double kappa);

}  // namespace mos
