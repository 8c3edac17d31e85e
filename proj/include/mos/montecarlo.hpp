#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mos/criteria.hpp"
#include "mos/signal_model.hpp"
#include "mos/theory.hpp"

namespace mos {

struct ProbabilityEstimate {
  double p = 0.0;
  double normal_low = 0.0;
  double normal_high = 0.0;
  double wilson_low = 0.0;
  double wilson_high = 0.0;
  double std_error = 0.0;  // sqrt(p (1 - p) / M)
};

/// 95% normal-approximation and Wilson intervals.
ProbabilityEstimate binomial_estimate(long count, long trials);

/// Per-trial log-likelihood paths L(1..N), shared by every criterion so that
/// criteria are compared on common random numbers.
struct LoglikPaths {
  int max_order = 0;
  long trials = 0;
  std::uint64_t master_seed = 0;
  std::string approach;
  std::vector<double> logliks;  // trials x max_order, row-major
  std::vector<char> degenerate;

  std::span<const double> row(long trial) const {
    return {logliks.data() + trial * max_order, static_cast<std::size_t>(max_order)};
  }
};

/// Trial k uses noise seed derive_seed(master_seed, k); output is independent
/// of `workers` (0 = hardware concurrency).
LoglikPaths simulate_paths(const Scenario& scenario, const Approach& approach, long trials,
                           std::uint64_t master_seed, unsigned workers = 0);

struct McReport {
  CriterionSpec criterion;
  std::string approach;
  long trials = 0;  // valid trials
  long degenerate = 0;
  bool degenerate_warning = false;  // more than 1% degenerate
  ProbabilityEstimate p_e;
  ProbabilityEstimate p_a;
  long errors = 0;
  long abridged_errors = 0;
  int histogram_offset = 0;  // histogram[k] counts nu_hat - nu0 == k + offset
  std::vector<long> histogram;
  double ratio_gt1_eq1 = 0.0;  // NaN when both counts are zero
  std::uint64_t master_seed = 0;
  std::vector<char> correct;  // per valid trial, for paired tests
};

McReport evaluate_paths(const LoglikPaths& paths, const CriterionSpec& spec, int nu0);

std::vector<McReport> estimate(const Scenario& scenario, const std::vector<CriterionSpec>& specs,
                               const Approach& approach, long trials, std::uint64_t master_seed,
                               unsigned workers = 0);

struct PairedComparison {
  long only_a_correct = 0;
  long only_b_correct = 0;
  double p_e_difference = 0.0;  // p_e(a) - p_e(b)
  double p_value = 1.0;         // exact two-sided McNemar
};

PairedComparison paired_compare(const McReport& a, const McReport& b);

/// Monte Carlo p_a over a grid of blind offsets, for criteria without an
/// abridged formula.
FrequencyErrorSweep mc_sweep(const Scenario& scenario, const CriterionSpec& spec,
                             std::span<const double> delta_grid, long trials,
                             std::uint64_t master_seed, Loss loss = Loss::one);

}  // namespace mos
