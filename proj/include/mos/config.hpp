#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mos/criteria.hpp"
#include "mos/distributions.hpp"
#include "mos/signal_model.hpp"
#include "mos/theory.hpp"
#include "mos/tuner.hpp"

namespace mos {

using Json = nlohmann::json;

// JSON layout (all keys optional unless noted):
//
// {
//   "scenario": {"reference": {"n_samples": 64, "true_order": 3, "max_order": 5,
//                              "snr_db": 0}}
//            or {"n_samples", "noise_level", "max_order", "noise_known",
//                "noiseless_override",
//                "components": [{"amplitude", "frequency", "phase",
//                                "band": [lo, hi], "amplitude_envelope": [...],
//                                "phase_envelope": [...]}],
//                "extra_slots": [{"frequency", "band", ...}]},       (required)
//   "criteria": [{"type": "gic", "upsilon": 2, "kappa": 2},
//                {"type": "aic", "kappa": 2}, {"type": "eef"},
//                {"type": "pmep_ir", "kappa": 0.25}, {"type": "pmep_i", "kappa": 3}],
//   "approach": {"type": "known"} | {"type": "blind", "rule": "center"}
//             | {"type": "blind", "rule": "offset", "delta": 0.0025}
//             | {"type": "blind", "rule": "fixed", "values": [...]}
//             | {"type": "ml", "grid_points": 256, "refine_tol": 1e-6},
//   "snr_grid_db": [-4, 0, 4], "delta_omega_grid": [0, 0.001, ...],
//   "trials": 10000, "master_seed": 1, "loss": "one" | "abs" | "square",
//   "ml_cdf_denominator": "squared" | "stddev",
//   "ml_reference_pe": [per-criterion values for bl-interval],
//   "tune": {"family": "pmep_ir" | "pmep_i",
//            "objective": "abridged_theory" | "monte_carlo",
//            "range": [lo, hi], "grid": 32, "refine": true}
// }

struct ExperimentConfig {
  Scenario scenario;
  std::vector<CriterionSpec> criteria;
  Approach approach = KnownFrequencies{};
  std::vector<double> snr_grid_db;
  std::vector<double> delta_omega_grid;
  long trials = 10000;
  std::uint64_t master_seed = 1;
  Loss loss = Loss::one;
  MlCdfDenominator ml_cdf_denominator = MlCdfDenominator::squared;
  std::vector<double> ml_reference_pe;
  TuneConfig tune;
};

/// Throws ValidationError whose field() is the dotted path of the offending
/// entry, e.g. "scenario.components[1].frequency".
ExperimentConfig parse_config(const Json& doc);
Json to_json(const ExperimentConfig& config);

Json scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const Json& doc, const std::string& path = "scenario");
Json criterion_to_json(const CriterionSpec& spec);
CriterionSpec criterion_from_json(const Json& doc, const std::string& path);
Json approach_to_json(const Approach& approach);
Approach approach_from_json(const Json& doc, const std::string& path = "approach");

/// FNV-1a 64 over the compact serialization.
std::uint64_t config_hash(const Json& doc);
std::string hex64(std::uint64_t value);

}  // namespace mos
