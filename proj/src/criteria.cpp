#include "mos/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mos {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

void validate(const CriterionSpec& spec) {
  std::visit(overloaded{
                 [](const Aic& c) {
                   if (!std::isfinite(c.kappa)) throw ValidationError("must be finite", "kappa");
                 },
                 [](const Gic& c) {
                   if (!std::isfinite(c.upsilon)) {
                     throw ValidationError("must be finite", "upsilon");
                   }
                   if (!std::isfinite(c.kappa)) throw ValidationError("must be finite", "kappa");
                 },
                 [](const Eef&) {},
                 [](const PmepIr& c) {
                   if (!(c.kappa_ir > 0.0) || !std::isfinite(c.kappa_ir)) {
                     throw ValidationError("must be positive", "kappa_ir");
                   }
                 },
                 [](const PmepI& c) {
                   if (!(c.kappa_i > 0.0) || !std::isfinite(c.kappa_i)) {
                     throw ValidationError("must be positive", "kappa_i");
                   }
                 },
             },
             spec);
}

std::string criterion_name(const CriterionSpec& spec) {
  std::ostringstream out;
  std::visit(overloaded{
                 [&](const Aic& c) { out << "AIC(kappa=" << c.kappa << ")"; },
                 [&](const Gic& c) {
                   out << "GIC(upsilon=" << c.upsilon << ",kappa=" << c.kappa << ")";
                 },
                 [&](const Eef&) { out << "EEF"; },
                 [&](const PmepIr& c) { out << "PMEP-IR(kappa=" << c.kappa_ir << ")"; },
                 [&](const PmepI& c) { out << "PMEP-I(kappa=" << c.kappa_i << ")"; },
             },
             spec);
  return out.str();
}

std::vector<double> decision_values(const CriterionSpec& spec, std::span<const double> logliks) {
  const std::size_t n = logliks.size();
  std::vector<double> r(n);
  std::vector<double> increments(n);
  double max_increment = 0.0;
  double max_loglik = 0.0;
  double previous = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    increments[k] = logliks[k] - previous;
    max_increment = std::max(max_increment, increments[k]);
    max_loglik = std::max(max_loglik, logliks[k]);
    previous = logliks[k];
  }
  if (const auto* ir = std::get_if<PmepIr>(&spec)) {
    // Accumulated step by step so that R(nu) == R(nu - 1) exactly when the
    // increment equals kappa times the maximum.
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      acc += ir->kappa_ir * max_increment - increments[k];
      r[k] = acc;
    }
    return r;
  }
  if (const auto* pi = std::get_if<PmepI>(&spec)) {
    // Divided by max(L)^kappa (a positive constant) to stay finite for large
    // kappa; every comparison between orders is unchanged.
    for (std::size_t k = 0; k < n; ++k) {
      const double ratio = max_loglik > 0.0 ? logliks[k] / max_loglik : 0.0;
      r[k] = -std::pow(ratio, pi->kappa_i) / static_cast<double>(k + 1);
    }
    return r;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double nu = static_cast<double>(k + 1);
    const double l = logliks[k];
    r[k] = std::visit(
        overloaded{
            [&](const Aic& c) { return -l + 2.0 * c.kappa * nu; },
            [&](const Gic& c) { return -l + c.upsilon * c.kappa * nu; },
            [&](const Eef&) {
              if (!(l / nu > 1.0)) return 0.0;
              return -(l - nu * (std::log(l / nu) + 1.0));
            },
            [](const PmepIr&) { return 0.0; },
            [](const PmepI&) { return 0.0; },
        },
        spec);
  }
  return r;
}

int argmin_order(std::span<const double> r) {
  if (r.empty()) throw ValidationError("no candidate orders");
  int best = 0;
  for (std::size_t k = 1; k < r.size(); ++k) {
    if (r[k] < r[best]) best = static_cast<int>(k);
  }
  return best + 1;
}

bool abridged_failure(std::span<const double> r, int nu0) {
  const int n = static_cast<int>(r.size());
  if (nu0 < 1 || nu0 > n) throw ValidationError("nu0 outside candidate range", "nu0");
  const double at = r[nu0 - 1];
  if (nu0 > 1 && !(at < r[nu0 - 2])) return true;
  if (nu0 < n && at > r[nu0]) return true;
  return false;
}

std::vector<double> logliks_from_increments(std::span<const double> v) {
  std::vector<double> out(v.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    acc += 0.5 * v[i];
    out[i] = acc;
  }
  return out;
}

std::string approach_name(const Approach& approach) {
  return std::visit(overloaded{
                        [](const KnownFrequencies&) { return std::string("known"); },
                        [](const Blind&) { return std::string("blind"); },
                        [](const MaxLikelihood&) { return std::string("ml"); },
                    },
                    approach);
}

std::vector<double> fixed_frequencies(const Scenario& scenario, const Approach& approach) {
  const auto truth = scenario.slot_frequencies();
  if (std::holds_alternative<KnownFrequencies>(approach)) return truth;
  if (const auto* blind = std::get_if<Blind>(&approach)) {
    const auto bands = scenario.slot_bands();
    return bl_frequencies(bands, blind->rule, truth);
  }
  throw ValidationError("ML approach has no fixed frequencies", "approach");
}

std::vector<double> loglik_path(const Observation& observation, const Scenario& scenario,
                                const Approach& approach, std::vector<double>* frequencies_out) {
  std::vector<double> v;
  std::vector<double> freqs;
  if (const auto* ml = std::get_if<MaxLikelihood>(&approach)) {
    const MlSearchResult res =
        ml_frequency_search(observation, scenario, scenario.max_order, ml->search);
    const double sigma = scenario.noise_level;
    const double scale = scenario.noise_known && sigma > 0.0 ? 1.0 / (sigma * sigma) : 1.0;
    for (double x : res.v) v.push_back(x * scale);
    freqs = res.frequencies;
  } else {
    freqs = fixed_frequencies(scenario, approach);
    const SufficientStats stats = sufficient_stats(observation, freqs, scenario);
    const LoglikIncrements inc = loglik_increments(stats);
    v.assign(inc.v.data(), inc.v.data() + inc.v.size());
  }
  if (frequencies_out) *frequencies_out = freqs;
  return logliks_from_increments(v);
}

namespace {

// Diagnostics after a degenerate order: the frequencies in use and the
// log-likelihoods of every order below the first singular one.
void partial_path(const Observation& observation, const Scenario& scenario,
                  const Approach& approach, SelectionRecord& record) {
  if (std::holds_alternative<MaxLikelihood>(approach)) return;
  record.frequencies = fixed_frequencies(scenario, approach);
  for (int nu = 1; nu <= scenario.max_order; ++nu) {
    const std::span<const double> prefix(record.frequencies.data(), nu);
    try {
      const SufficientStats stats = sufficient_stats(observation, prefix, scenario);
      record.logliks.push_back(profile_loglik(stats, scenario.noise_known));
    } catch (const Error&) {
      return;
    }
  }
}

}  // namespace

SelectionRecord select_order(const CriterionSpec& spec, const Observation& observation,
                             const Approach& approach, const Scenario& scenario) {
  validate(spec);
  SelectionRecord record;
  try {
    record.logliks = loglik_path(observation, scenario, approach, &record.frequencies);
  } catch (const DegenerateStatsError& e) {
    partial_path(observation, scenario, approach, record);
    throw SelectionError(std::string("selection failed: ") + e.what(), record);
  } catch (const NumericDomainError& e) {
    partial_path(observation, scenario, approach, record);
    throw SelectionError(std::string("selection failed: ") + e.what(), record);
  }
  record.decision = decision_values(spec, record.logliks);
  record.order = argmin_order(record.decision);
  return record;
}

}  // namespace mos
