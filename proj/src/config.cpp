#include "mos/config.hpp"

#include <cmath>
#include <cstdio>

#include "mos/errors.hpp"

namespace mos {
namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string at(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

const Json* find(const Json& obj, const std::string& key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError("expected an object", path);
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ValidationError("expected a number", path);
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ValidationError("must be finite", path);
  return v;
}

double number_or(const Json& obj, const std::string& key, double fallback,
                 const std::string& path) {
  const Json* j = find(obj, key);
  return j ? number(*j, join(path, key)) : fallback;
}

long integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ValidationError("expected an integer", path);
  return j.get<long>();
}

long integer_or(const Json& obj, const std::string& key, long fallback, const std::string& path) {
  const Json* j = find(obj, key);
  return j ? integer(*j, join(path, key)) : fallback;
}

bool boolean_or(const Json& obj, const std::string& key, bool fallback, const std::string& path) {
  const Json* j = find(obj, key);
  if (!j) return fallback;
  if (!j->is_boolean()) throw ValidationError("expected a boolean", join(path, key));
  return j->get<bool>();
}

std::string string_or(const Json& obj, const std::string& key, const std::string& fallback,
                      const std::string& path) {
  const Json* j = find(obj, key);
  if (!j) return fallback;
  if (!j->is_string()) throw ValidationError("expected a string", join(path, key));
  return j->get<std::string>();
}

std::vector<double> numbers(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ValidationError("expected an array", path);
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], at(path, i)));
  return out;
}

Band band_from(const Json& j, const std::string& path) {
  const auto v = numbers(j, path);
  if (v.size() != 2) throw ValidationError("band needs [low, high]", path);
  return {v[0], v[1]};
}

bool unit_envelopes(const std::vector<double>& f, const std::vector<double>& psi) {
  for (double x : f) {
    if (x != 1.0) return false;
  }
  for (double x : psi) {
    if (x != 0.0) return false;
  }
  return true;
}

// Envelopes default to f = 1, Psi = 0 of length n.
void read_envelopes(const Json& obj, int n, const std::string& path, std::vector<double>& f,
                    std::vector<double>& psi) {
  f.assign(n, 1.0);
  psi.assign(n, 0.0);
  if (const Json* j = find(obj, "amplitude_envelope")) f = numbers(*j, join(path, "amplitude_envelope"));
  if (const Json* j = find(obj, "phase_envelope")) psi = numbers(*j, join(path, "phase_envelope"));
}

template <class T>
void write_envelopes(Json& out, const T& item) {
  if (!unit_envelopes(item.amplitude_envelope, item.phase_envelope)) {
    out["amplitude_envelope"] = item.amplitude_envelope;
    out["phase_envelope"] = item.phase_envelope;
  }
}

std::string loss_name(Loss loss) {
  switch (loss) {
    case Loss::one:
      return "one";
    case Loss::abs:
      return "abs";
    case Loss::square:
      return "square";
  }
  return "one";
}

}  // namespace

Json scenario_to_json(const Scenario& s) {
  Json out;
  out["n_samples"] = s.n_samples;
  out["noise_level"] = s.noise_level;
  out["max_order"] = s.max_order;
  out["noise_known"] = s.noise_known;
  if (s.noiseless_override) out["noiseless_override"] = true;
  Json comps = Json::array();
  for (const auto& c : s.components) {
    Json j;
    j["amplitude"] = c.amplitude;
    j["frequency"] = c.frequency;
    j["phase"] = c.phase;
    j["band"] = {c.band.low, c.band.high};
    write_envelopes(j, c);
    comps.push_back(j);
  }
  out["components"] = comps;
  Json extra = Json::array();
  for (const auto& e : s.extra_slots) {
    Json j;
    j["frequency"] = e.frequency;
    j["band"] = {e.band.low, e.band.high};
    write_envelopes(j, e);
    extra.push_back(j);
  }
  out["extra_slots"] = extra;
  return out;
}

Scenario scenario_from_json(const Json& doc, const std::string& path) {
  require_object(doc, path);
  Scenario s;
  if (const Json* ref = find(doc, "reference")) {
    const std::string rp = join(path, "reference");
    require_object(*ref, rp);
    const int n = static_cast<int>(integer_or(*ref, "n_samples", 64, rp));
    const int nu0 = static_cast<int>(integer_or(*ref, "true_order", 3, rp));
    const int big_n = static_cast<int>(integer_or(*ref, "max_order", 5, rp));
    const double snr = number_or(*ref, "snr_db", 0.0, rp);
    if (n < 2) throw ValidationError("must be at least 2", join(rp, "n_samples"));
    if (nu0 < 1) throw ValidationError("must be at least 1", join(rp, "true_order"));
    if (big_n < nu0) throw ValidationError("must be >= true_order", join(rp, "max_order"));
    s = make_reference_scenario(n, nu0, big_n, snr);
    s.noise_known = boolean_or(*ref, "noise_known", true, rp);
  } else {
    s.n_samples = static_cast<int>(integer_or(doc, "n_samples", 64, path));
    s.noise_level = number_or(doc, "noise_level", 1.0, path);
    s.noise_known = boolean_or(doc, "noise_known", true, path);
    s.noiseless_override = boolean_or(doc, "noiseless_override", false, path);
    const Json* comps = find(doc, "components");
    if (!comps || !comps->is_array()) {
      throw ValidationError("expected an array of components", join(path, "components"));
    }
    for (std::size_t i = 0; i < comps->size(); ++i) {
      const std::string cp = at(join(path, "components"), i);
      const Json& cj = (*comps)[i];
      require_object(cj, cp);
      SinusoidComponent c;
      const Json* freq = find(cj, "frequency");
      if (!freq) throw ValidationError("required", join(cp, "frequency"));
      c.frequency = number(*freq, join(cp, "frequency"));
      c.amplitude = number_or(cj, "amplitude", 1.0, cp);
      c.phase = number_or(cj, "phase", 0.0, cp);
      c.band = find(cj, "band") ? band_from(cj["band"], join(cp, "band"))
                                : default_band(c.frequency, s.n_samples);
      read_envelopes(cj, s.n_samples, cp, c.amplitude_envelope, c.phase_envelope);
      s.components.push_back(std::move(c));
    }
    if (const Json* extra = find(doc, "extra_slots")) {
      if (!extra->is_array()) throw ValidationError("expected an array", join(path, "extra_slots"));
      for (std::size_t i = 0; i < extra->size(); ++i) {
        const std::string ep = at(join(path, "extra_slots"), i);
        const Json& ej = (*extra)[i];
        require_object(ej, ep);
        CandidateSlot e;
        const Json* freq = find(ej, "frequency");
        if (!freq) throw ValidationError("required", join(ep, "frequency"));
        e.frequency = number(*freq, join(ep, "frequency"));
        e.band = find(ej, "band") ? band_from(ej["band"], join(ep, "band"))
                                  : default_band(e.frequency, s.n_samples);
        read_envelopes(ej, s.n_samples, ep, e.amplitude_envelope, e.phase_envelope);
        s.extra_slots.push_back(std::move(e));
      }
    }
    s.max_order = static_cast<int>(
        integer_or(doc, "max_order", static_cast<long>(s.components.size() + s.extra_slots.size()), path));
  }
  try {
    s.validate();
  } catch (const ValidationError& e) {
    if (e.field().empty()) throw ValidationError(e.what(), path);
    throw;
  }
  return s;
}

Json criterion_to_json(const CriterionSpec& spec) {
  Json j;
  if (const auto* c = std::get_if<Aic>(&spec)) {
    j = {{"type", "aic"}, {"kappa", c->kappa}};
  } else if (const auto* c = std::get_if<Gic>(&spec)) {
    j = {{"type", "gic"}, {"upsilon", c->upsilon}, {"kappa", c->kappa}};
  } else if (std::holds_alternative<Eef>(spec)) {
    j = {{"type", "eef"}};
  } else if (const auto* c = std::get_if<PmepIr>(&spec)) {
    j = {{"type", "pmep_ir"}, {"kappa", c->kappa_ir}};
  } else if (const auto* c = std::get_if<PmepI>(&spec)) {
    j = {{"type", "pmep_i"}, {"kappa", c->kappa_i}};
  }
  return j;
}

CriterionSpec criterion_from_json(const Json& doc, const std::string& path) {
  require_object(doc, path);
  const std::string type = string_or(doc, "type", "", path);
  CriterionSpec spec;
  if (type == "aic") {
    spec = Aic{number_or(doc, "kappa", 2.0, path)};
  } else if (type == "gic") {
    spec = Gic{number_or(doc, "upsilon", 2.0, path), number_or(doc, "kappa", 2.0, path)};
  } else if (type == "eef") {
    spec = Eef{};
  } else if (type == "pmep_ir") {
    spec = PmepIr{number_or(doc, "kappa", 0.25, path)};
  } else if (type == "pmep_i") {
    spec = PmepI{number_or(doc, "kappa", 3.0, path)};
  } else {
    throw ValidationError("unknown criterion type '" + type + "'", join(path, "type"));
  }
  try {
    validate(spec);
  } catch (const ValidationError& e) {
    const std::string key = e.field() == "kappa_ir" || e.field() == "kappa_i" ? "kappa" : e.field();
    throw ValidationError("must be positive and finite", join(path, key));
  }
  return spec;
}

Json approach_to_json(const Approach& approach) {
  Json j;
  if (std::holds_alternative<KnownFrequencies>(approach)) {
    j = {{"type", "known"}};
  } else if (const auto* b = std::get_if<Blind>(&approach)) {
    j = {{"type", "blind"}};
    switch (b->rule.kind) {
      case BlRule::Kind::center:
        j["rule"] = "center";
        break;
      case BlRule::Kind::fixed:
        j["rule"] = "fixed";
        j["values"] = b->rule.values;
        break;
      case BlRule::Kind::offset:
        j["rule"] = "offset";
        j["delta"] = b->rule.delta;
        break;
    }
  } else if (const auto* m = std::get_if<MaxLikelihood>(&approach)) {
    j = {{"type", "ml"},
         {"grid_points", m->search.grid_points},
         {"refine_tol", m->search.refine_tol}};
  }
  return j;
}

Approach approach_from_json(const Json& doc, const std::string& path) {
  require_object(doc, path);
  const std::string type = string_or(doc, "type", "known", path);
  if (type == "known") return KnownFrequencies{};
  if (type == "blind") {
    const std::string rule = string_or(doc, "rule", "center", path);
    if (rule == "center") return Blind{BlRule::center()};
    if (rule == "offset") return Blind{BlRule::offset(number_or(doc, "delta", 0.0, path))};
    if (rule == "fixed") {
      const Json* v = find(doc, "values");
      if (!v) throw ValidationError("required for the fixed rule", join(path, "values"));
      return Blind{BlRule::fixed(numbers(*v, join(path, "values")))};
    }
    throw ValidationError("unknown rule '" + rule + "'", join(path, "rule"));
  }
  if (type == "ml") {
    MaxLikelihood ml;
    ml.search.grid_points = static_cast<int>(integer_or(doc, "grid_points", 256, path));
    ml.search.refine_tol = number_or(doc, "refine_tol", 1e-6, path);
    if (ml.search.grid_points < 2) {
      throw ValidationError("at least 2 grid points", join(path, "grid_points"));
    }
    if (!(ml.search.refine_tol > 0.0)) throw ValidationError("must be positive", join(path, "refine_tol"));
    return ml;
  }
  throw ValidationError("unknown approach '" + type + "'", join(path, "type"));
}

ExperimentConfig parse_config(const Json& doc) {
  require_object(doc, "config");
  ExperimentConfig c;
  const Json* scenario = find(doc, "scenario");
  if (!scenario) throw ValidationError("required", "scenario");
  c.scenario = scenario_from_json(*scenario, "scenario");

  if (const Json* crit = find(doc, "criteria")) {
    if (!crit->is_array()) throw ValidationError("expected an array", "criteria");
    for (std::size_t i = 0; i < crit->size(); ++i) {
      c.criteria.push_back(criterion_from_json((*crit)[i], at("criteria", i)));
    }
  } else {
    c.criteria = {Gic{}, Eef{}, PmepIr{}, PmepI{}};
  }
  if (const Json* a = find(doc, "approach")) c.approach = approach_from_json(*a, "approach");
  if (const auto* b = std::get_if<Blind>(&c.approach)) {
    try {
      (void)fixed_frequencies(c.scenario, *b);
    } catch (const ValidationError& e) {
      throw ValidationError(e.what(), "approach");
    }
  }
  if (const Json* g = find(doc, "snr_grid_db")) {
    c.snr_grid_db = numbers(*g, "snr_grid_db");
    if (c.snr_grid_db.empty()) throw ValidationError("must not be empty", "snr_grid_db");
  }
  if (const Json* g = find(doc, "delta_omega_grid")) {
    c.delta_omega_grid = numbers(*g, "delta_omega_grid");
  }
  c.trials = integer_or(doc, "trials", 10000, "");
  if (c.trials < 1) throw ValidationError("must be positive", "trials");
  if (const Json* s = find(doc, "master_seed")) {
    if (!s->is_number_unsigned() && !(s->is_number_integer() && s->get<long long>() >= 0)) {
      throw ValidationError("expected a nonnegative integer", "master_seed");
    }
    c.master_seed = s->get<std::uint64_t>();
  }
  const std::string loss = string_or(doc, "loss", "one", "");
  if (loss == "one") {
    c.loss = Loss::one;
  } else if (loss == "abs") {
    c.loss = Loss::abs;
  } else if (loss == "square") {
    c.loss = Loss::square;
  } else {
    throw ValidationError("unknown loss '" + loss + "'", "loss");
  }
  const std::string den = string_or(doc, "ml_cdf_denominator", "squared", "");
  if (den == "squared") {
    c.ml_cdf_denominator = MlCdfDenominator::squared;
  } else if (den == "stddev") {
    c.ml_cdf_denominator = MlCdfDenominator::stddev;
  } else {
    throw ValidationError("expected 'squared' or 'stddev'", "ml_cdf_denominator");
  }
  if (const Json* r = find(doc, "ml_reference_pe")) {
    c.ml_reference_pe = numbers(*r, "ml_reference_pe");
    if (c.ml_reference_pe.size() != c.criteria.size()) {
      throw ValidationError("one value per criterion", "ml_reference_pe");
    }
  }

  c.tune = TuneConfig::defaults_for(TuneFamily::pmep_ir);
  if (const Json* t = find(doc, "tune")) {
    require_object(*t, "tune");
    const std::string family = string_or(*t, "family", "pmep_ir", "tune");
    if (family == "pmep_ir") {
      c.tune = TuneConfig::defaults_for(TuneFamily::pmep_ir);
    } else if (family == "pmep_i") {
      c.tune = TuneConfig::defaults_for(TuneFamily::pmep_i);
    } else {
      throw ValidationError("expected 'pmep_ir' or 'pmep_i'", "tune.family");
    }
    const std::string objective = string_or(*t, "objective", "abridged_theory", "tune");
    if (objective == "abridged_theory") {
      c.tune.objective = TuneObjective::abridged_theory;
    } else if (objective == "monte_carlo") {
      c.tune.objective = TuneObjective::monte_carlo;
    } else {
      throw ValidationError("expected 'abridged_theory' or 'monte_carlo'", "tune.objective");
    }
    if (const Json* r = find(*t, "range")) {
      const auto v = numbers(*r, "tune.range");
      if (v.size() != 2 || !(v[0] <= v[1]) || !(v[0] > 0.0)) {
        throw ValidationError("expected [low, high] with 0 < low <= high", "tune.range");
      }
      c.tune.low = v[0];
      c.tune.high = v[1];
    }
    c.tune.grid = static_cast<int>(integer_or(*t, "grid", 32, "tune"));
    if (c.tune.grid < 1) throw ValidationError("must be positive", "tune.grid");
    c.tune.refine = boolean_or(*t, "refine", true, "tune");
  }
  c.tune.trials = c.trials;
  c.tune.master_seed = c.master_seed;
  c.tune.approach = c.approach;
  return c;
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["scenario"] = scenario_to_json(c.scenario);
  Json crit = Json::array();
  for (const auto& s : c.criteria) crit.push_back(criterion_to_json(s));
  j["criteria"] = crit;
  j["approach"] = approach_to_json(c.approach);
  j["snr_grid_db"] = c.snr_grid_db;
  j["delta_omega_grid"] = c.delta_omega_grid;
  j["trials"] = c.trials;
  j["master_seed"] = c.master_seed;
  j["loss"] = loss_name(c.loss);
  j["ml_cdf_denominator"] = c.ml_cdf_denominator == MlCdfDenominator::squared ? "squared" : "stddev";
  if (!c.ml_reference_pe.empty()) j["ml_reference_pe"] = c.ml_reference_pe;
  j["tune"] = {{"family", c.tune.family == TuneFamily::pmep_ir ? "pmep_ir" : "pmep_i"},
               {"objective", c.tune.objective == TuneObjective::abridged_theory
                                 ? "abridged_theory"
                                 : "monte_carlo"},
               {"range", {c.tune.low, c.tune.high}},
               {"grid", c.tune.grid},
               {"refine", c.tune.refine}};
  return j;
}

std::uint64_t config_hash(const Json& doc) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : doc.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace mos
