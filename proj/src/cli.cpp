#include "mos/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mos/config.hpp"
#include "mos/errors.hpp"
#include "mos/montecarlo.hpp"
#include "mos/theory.hpp"
#include "mos/tuner.hpp"

namespace mos {
namespace {

struct Options {
  std::string config_path;
  std::string out_path;
  std::string format = "csv";
  std::optional<std::uint64_t> seed;
  std::optional<long> trials;
  std::vector<double> snr_db;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;
  Json extra = Json::object();  // JSON-only payload
};

std::string format_cell(const Json& v) {
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) {
    const double d = v.get<double>();
    if (std::isnan(d)) return "nan";
    if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", d);
    return buf;
  }
  if (v.is_null()) return "nan";
  const std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string render(const Table& table, const std::string& format, const std::string& command,
                   const Json& config_json, std::uint64_t seed) {
  const std::string hash = hex64(config_hash(config_json));
  std::ostringstream out;
  if (format == "json") {
    Json doc;
    doc["config_hash"] = hash;
    doc["seed"] = seed;
    doc["command"] = command;
    doc["config"] = config_json;
    Json rows = Json::array();
    for (const auto& row : table.rows) {
      Json r = Json::object();
      for (std::size_t c = 0; c < table.columns.size(); ++c) r[table.columns[c]] = row[c];
      rows.push_back(r);
    }
    doc["rows"] = rows;
    for (auto it = table.extra.begin(); it != table.extra.end(); ++it) doc[it.key()] = it.value();
    out << doc.dump(2) << "\n";
    return out.str();
  }
  out << "# config_hash=" << hash << " seed=" << seed << " command=" << command << "\n";
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    out << (c ? "," : "") << table.columns[c];
  }
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_cell(row[c]);
    out << "\n";
  }
  return out.str();
}

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'", "config");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what(), "config");
  }
}

std::vector<double> snr_points(const ExperimentConfig& c) {
  if (!c.snr_grid_db.empty()) return c.snr_grid_db;
  // rounded so that a configured 0 dB does not print as 1e-15
  const double snr = snr_db(c.scenario.components.front(), c.scenario.noise_level);
  return {std::round(snr * 1e9) / 1e9};
}

Scenario at_snr(const ExperimentConfig& c, double snr) { return with_snr_db(c.scenario, snr); }

// GIC/AIC weights count free parameters per signal; the ML design also
// estimates the frequency.
CriterionSpec ml_counterpart(const CriterionSpec& spec) {
  if (const auto* g = std::get_if<Gic>(&spec)) return Gic{g->upsilon, g->kappa + 1.0};
  if (const auto* a = std::get_if<Aic>(&spec)) return Aic{a->kappa + 1.0};
  return spec;
}

bool has_formula(const CriterionSpec& spec) { return !std::holds_alternative<Eef>(spec); }

// Default: 41 points from 0 to 90% of the tightest distance from a slot
// frequency to its band edge, so every shifted frequency stays in band.
std::vector<double> blind_deltas(const ExperimentConfig& c) {
  if (!c.delta_omega_grid.empty()) return c.delta_omega_grid;
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& slot : c.scenario.slots()) {
    margin = std::min({margin, slot.frequency - slot.band.low, slot.band.high - slot.frequency});
  }
  std::vector<double> g;
  for (int k = 0; k <= 40; ++k) g.push_back(0.9 * margin * k / 40.0);
  return g;
}

FrequencyErrorSweep sweep_for(const ExperimentConfig& c, const Scenario& s,
                              const CriterionSpec& spec, std::string& method) {
  const auto deltas = blind_deltas(c);
  if (has_formula(spec)) {
    method = "theory";
    return ql_sweep(s, spec, deltas, c.loss);
  }
  method = "monte_carlo";
  return mc_sweep(s, spec, deltas, c.trials, c.master_seed, c.loss);
}

Table cmd_synth(const ExperimentConfig& c) {
  Scenario s = c.snr_grid_db.empty() ? c.scenario : at_snr(c, c.snr_grid_db.front());
  const Observation obs = synthesize(s, c.master_seed);
  Table t;
  t.columns = {"t", "x"};
  for (std::size_t k = 0; k < obs.samples.size(); ++k) {
    t.rows.push_back({static_cast<long long>(k + 1), obs.samples[k]});
  }
  return t;
}

Table cmd_mc(const ExperimentConfig& c, std::ostream& err) {
  Table t;
  t.columns = {"snr_db", "criterion", "approach", "trials", "degenerate", "p_e", "p_e_low",
               "p_e_high", "p_a", "p_a_low", "p_a_high", "ratio_gt1_eq1"};
  for (double snr : snr_points(c)) {
    const auto reports = estimate(at_snr(c, snr), c.criteria, c.approach, c.trials, c.master_seed);
    for (const auto& r : reports) {
      if (r.degenerate_warning) {
        err << "warning [montecarlo]: " << r.degenerate << " degenerate trials at " << snr
            << " dB\n";
      }
      t.rows.push_back({snr, criterion_name(r.criterion), r.approach,
                        static_cast<long long>(r.trials), static_cast<long long>(r.degenerate),
                        r.p_e.p, r.p_e.wilson_low, r.p_e.wilson_high, r.p_a.p, r.p_a.wilson_low,
                        r.p_a.wilson_high, r.ratio_gt1_eq1});
    }
  }
  return t;
}

Table cmd_theory(const ExperimentConfig& c, std::ostream& err) {
  Table t;
  t.columns = {"snr_db", "criterion", "mode", "p_a", "error_estimate"};
  const bool ml = std::holds_alternative<MaxLikelihood>(c.approach);
  for (double snr : snr_points(c)) {
    const Scenario s = at_snr(c, snr);
    const ComponentDistSet set = ml ? component_dists_ml(s, c.ml_cdf_denominator)
                                    : component_dists_ql(s, fixed_frequencies(s, c.approach));
    for (const auto& spec : c.criteria) {
      if (!has_formula(spec)) {
        err << "note [theory]: no abridged formula for " << criterion_name(spec)
            << "; use the mc command\n";
        continue;
      }
      const AbridgedReport r = abridged(set, spec, s.true_order());
      t.rows.push_back({snr, criterion_name(spec), ml ? "ml" : "ql", r.p_a, r.error_estimate});
    }
  }
  return t;
}

Table cmd_tune(const ExperimentConfig& c) {
  Table t;
  t.columns = {"snr_db", "family", "objective", "kappa_opt", "objective_value",
               "consistency_ok", "flat"};
  Json traces = Json::array();
  for (double snr : snr_points(c)) {
    const TuneResult r = tune(at_snr(c, snr), c.tune);
    t.rows.push_back({snr, c.tune.family == TuneFamily::pmep_ir ? "pmep_ir" : "pmep_i",
                      r.objective == TuneObjective::abridged_theory ? "abridged_theory"
                                                                    : "monte_carlo",
                      r.kappa_opt, r.value, r.consistency_ok, r.flat});
    Json trace = Json::array();
    for (const auto& [k, v] : r.trace) trace.push_back({k, v});
    traces.push_back({{"snr_db", snr}, {"trace", trace}});
  }
  t.extra["search_trace"] = traces;
  return t;
}

Table cmd_ql_sweep(const ExperimentConfig& c) {
  Table t;
  t.columns = {"snr_db", "criterion", "method", "delta_omega", "p_a", "loss_weight"};
  Json summary = Json::array();
  for (double snr : snr_points(c)) {
    const Scenario s = at_snr(c, snr);
    for (const auto& spec : c.criteria) {
      std::string method;
      const FrequencyErrorSweep sw = sweep_for(c, s, spec, method);
      for (std::size_t i = 0; i < sw.deltas.size(); ++i) {
        t.rows.push_back({snr, criterion_name(spec), method, sw.deltas[i], sw.p_a[i],
                          sw.loss_weights[i]});
      }
      summary.push_back({{"snr_db", snr}, {"criterion", criterion_name(spec)}, {"p_aq", sw.p_aq}});
    }
  }
  t.extra["p_aq"] = summary;
  return t;
}

Table cmd_bl_interval(const ExperimentConfig& c) {
  Table t;
  t.columns = {"snr_db", "criterion", "ml_reference_pe", "half_width", "saturated"};
  for (double snr : snr_points(c)) {
    const Scenario s = at_snr(c, snr);
    std::vector<double> refs = c.ml_reference_pe;
    if (refs.empty()) {
      std::vector<CriterionSpec> ml_specs;
      for (const auto& spec : c.criteria) ml_specs.push_back(ml_counterpart(spec));
      const auto reports = estimate(s, ml_specs, MaxLikelihood{}, c.trials, c.master_seed);
      for (const auto& r : reports) refs.push_back(r.p_e.p);
    }
    for (std::size_t i = 0; i < c.criteria.size(); ++i) {
      std::string method;
      const FrequencyErrorSweep sw = sweep_for(c, s, c.criteria[i], method);
      const BlInterval iv = bl_interval(sw, refs[i]);
      t.rows.push_back({snr, criterion_name(c.criteria[i]), refs[i], iv.half_width, iv.saturated});
    }
  }
  return t;
}

Table cmd_consistency(const ExperimentConfig& c, std::ostream& out) {
  const Scenario& s = c.scenario;
  std::vector<double> z;
  double z_max = 0.0;
  for (const auto& comp : s.components) {
    z.push_back(std::pow(10.0, snr_db(comp, s.noise_level) / 10.0));
    z_max = std::max(z_max, z.back());
  }
  for (double& v : z) v /= z_max;
  const ConsistencyRange r = consistency_range(z, s.max_order);
  char line[160];
  std::snprintf(line, sizeof line, "kappa_IR < %.4g\nkappa_I > %.4g\n", r.kappa_ir_simple_max,
                r.kappa_i_simple_min);
  out << line;
  std::snprintf(line, sizeof line, "exact: kappa_IR < %.4g, kappa_I > %.4g\n",
                r.kappa_ir_exact_max, r.kappa_i_exact_min);
  out << line;
  Table t;
  t.columns = {"kappa_ir_exact_max", "kappa_ir_simple_max", "kappa_i_exact_min",
               "kappa_i_simple_min", "rho"};
  t.rows.push_back({r.kappa_ir_exact_max, r.kappa_ir_simple_max, r.kappa_i_exact_min,
                    r.kappa_i_simple_min, r.rho});
  return t;
}

int run_command(const std::string& command, const Options& opt, std::ostream& out,
                std::ostream& err) {
  ExperimentConfig c = parse_config(load_json(opt.config_path));
  if (opt.seed) c.master_seed = *opt.seed;
  if (opt.trials) {
    if (*opt.trials < 1) throw ValidationError("must be positive", "trials");
    c.trials = *opt.trials;
  }
  if (!opt.snr_db.empty()) c.snr_grid_db = opt.snr_db;
  c.tune.trials = c.trials;
  c.tune.master_seed = c.master_seed;
  const Json config_json = to_json(c);

  Table table;
  std::ostringstream side;  // human-readable lines of the consistency command
  if (command == "synth") {
    table = cmd_synth(c);
  } else if (command == "mc") {
    table = cmd_mc(c, err);
  } else if (command == "theory") {
    table = cmd_theory(c, err);
  } else if (command == "tune") {
    table = cmd_tune(c);
  } else if (command == "ql-sweep") {
    table = cmd_ql_sweep(c);
  } else if (command == "bl-interval") {
    table = cmd_bl_interval(c);
  } else if (command == "consistency") {
    table = cmd_consistency(c, side);
  }
  const std::string text = render(table, opt.format, command, config_json, c.master_seed);
  out << side.str();
  if (opt.out_path.empty()) {
    out << text;
  } else {
    std::ofstream file(opt.out_path, std::ios::binary);
    if (!file) throw ValidationError("cannot write '" + opt.out_path + "'", "out");
    file << text;
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Model order selection for sinusoids in noise"};
  app.require_subcommand(1, 1);
  Options opt;
  std::optional<std::uint64_t> seed;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"synth", "write one noisy observation"},
      {"mc", "Monte Carlo p_e and p_a versus SNR"},
      {"theory", "abridged error probability versus SNR"},
      {"tune", "optimize the PMEP tuning parameter"},
      {"ql-sweep", "p_a versus blind frequency error"},
      {"bl-interval", "blind-frequency intervals against the ML reference"},
      {"consistency", "SNR-consistency ranges of the PMEP parameters"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config_path, "JSON experiment config")->required();
    sub->add_option("--seed", opt.seed, "master seed");
    sub->add_option("--trials", opt.trials, "Monte Carlo trials");
    sub->add_option("--snr-db", opt.snr_db, "SNR grid in dB")->delimiter(',');
    sub->add_option("--out", opt.out_path, "output path (default stdout)");
    sub->add_option("--format", opt.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0; every other parse failure is a usage error
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run_command(command, opt, out, err);
  } catch (const ValidationError& e) {
    err << "error [config]: " << e.what() << "\n";
    return 2;
  } catch (const QuadratureError& e) {
    err << "error [linalg-stats]: " << e.what() << " (estimate " << e.estimate()
        << ", achieved error " << e.achieved_error() << ")\n";
  } catch (const NumericDomainError& e) {
    err << "error [linalg-stats]: " << e.what() << "\n";
  } catch (const DegenerateStatsError& e) {
    err << "error [likelihood]: " << e.what() << "\n";
  } catch (const ModelViolationError& e) {
    err << "error [theory]: " << e.what() << "\n";
  } catch (const SelectionError& e) {
    err << "error [criteria]: " << e.what() << "\n";
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
  }
  return 3;
}

}  // namespace mos
