#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mos/errors.hpp"
#include "mos/likelihood.hpp"
#include "mos/signal_model.hpp"

namespace mos {

// R(nu) = -L_nu + 2 kappa nu
struct Aic {
  double kappa = 2.0;
};
// R(nu) = -L_nu + upsilon kappa nu
struct Gic {
  double upsilon = 2.0;
  double kappa = 2.0;
};
// R(nu) = -[L_nu - nu (ln(L_nu / nu) + 1)] H(L_nu / nu - 1)
struct Eef {};
// R(nu) = -L_nu + kappa_ir nu max_i (L_i - L_{i-1})
struct PmepIr {
  double kappa_ir = 0.25;
};
// R(nu) = -L_nu^kappa_i / nu
struct PmepI {
  double kappa_i = 3.0;
};

using CriterionSpec = std::variant<Aic, Gic, Eef, PmepIr, PmepI>;

void validate(const CriterionSpec& spec);
std::string criterion_name(const CriterionSpec& spec);

/// R(1..N) from L(1..N) (L_0 = 0 implied). PMEP-I values are reported
/// divided by max(L)^kappa_i, which leaves every comparison unchanged.
std::vector<double> decision_values(const CriterionSpec& spec, std::span<const double> logliks);

/// Smallest minimizing order, 1-based.
int argmin_order(std::span<const double> r);

/// Failure of the two-neighbour event: R(nu0) >= R(nu0 - 1) or
/// R(nu0) > R(nu0 + 1). A missing neighbour at the boundaries is skipped.
/// The non-strict upper comparison matches the smallest-index tie rule.
bool abridged_failure(std::span<const double> r, int nu0);

/// Cumulative L(1..N) = sum_{i<=nu} v_i / 2.
std::vector<double> logliks_from_increments(std::span<const double> v);

struct KnownFrequencies {};
struct Blind {
  BlRule rule;
};
struct MaxLikelihood {
  MlSearchConfig search;
};

using Approach = std::variant<KnownFrequencies, Blind, MaxLikelihood>;

std::string approach_name(const Approach& approach);

struct SelectionRecord {
  int order = 0;
  std::vector<double> logliks;
  std::vector<double> decision;
  std::vector<double> frequencies;
};

class SelectionError : public Error {
 public:
  SelectionError(const std::string& message, SelectionRecord partial)
      : Error(message), partial_(std::move(partial)) {}
  const SelectionRecord& partial() const { return partial_; }

 private:
  SelectionRecord partial_;
};

/// Frequencies at which the approach evaluates the candidate models when they
/// do not depend on the data (known and blind approaches).
std::vector<double> fixed_frequencies(const Scenario& scenario, const Approach& approach);

/// L(1..N) for one observation: fixed frequencies for known/blind, greedy
/// search for ML.
std::vector<double> loglik_path(const Observation& observation, const Scenario& scenario,
                                const Approach& approach,
                                std::vector<double>* frequencies_out = nullptr);

SelectionRecord select_order(const CriterionSpec& spec, const Observation& observation,
                             const Approach& approach, const Scenario& scenario);

}  // namespace mos
