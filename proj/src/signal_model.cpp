#include "mos/signal_model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mos/errors.hpp"
#include "mos/rng.hpp"

namespace mos {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_envelopes(const std::vector<double>& amplitude, const std::vector<double>& phase,
                     int n_samples, const std::string& path) {
  if (static_cast<int>(amplitude.size()) != n_samples) {
    throw ValidationError("amplitude envelope length " + std::to_string(amplitude.size()) +
                              " != n_samples " + std::to_string(n_samples),
                          path + ".amplitude_envelope");
  }
  if (static_cast<int>(phase.size()) != n_samples) {
    throw ValidationError("phase envelope length " + std::to_string(phase.size()) +
                              " != n_samples " + std::to_string(n_samples),
                          path + ".phase_envelope");
  }
}

void check_band(const Band& band, double omega, const std::string& path) {
  if (!(band.low < band.high)) throw ValidationError("band is empty", path + ".band");
  if (!band.contains(omega)) {
    throw ValidationError("frequency " + std::to_string(omega) + " outside band (" +
                              std::to_string(band.low) + ", " + std::to_string(band.high) + ")",
                          path + ".frequency");
  }
}

CandidateSlot slot_of(const SinusoidComponent& c) {
  return {c.frequency, c.band, c.amplitude_envelope, c.phase_envelope};
}

}  // namespace

Band default_band(double omega, int n_samples) {
  const double half = std::numbers::pi / n_samples;
  return {omega - half, omega + half};
}

void Scenario::validate() const {
  const int nu0 = true_order();
  if (n_samples < 1) throw ValidationError("must be positive", "scenario.n_samples");
  if (nu0 < 1) throw ValidationError("at least one component required", "scenario.components");
  if (max_order < nu0) {
    throw ValidationError("max_order must be >= number of components", "scenario.max_order");
  }
  if (n_samples < 2 * max_order) {
    throw ValidationError("n_samples must be >= 2 * max_order", "scenario.n_samples");
  }
  if (!(noise_level > 0.0) && !(noiseless_override && noise_level == 0.0)) {
    throw ValidationError("must be positive", "scenario.noise_level");
  }
  if (static_cast<int>(extra_slots.size()) != max_order - nu0) {
    throw ValidationError("expected " + std::to_string(max_order - nu0) + " extra slots",
                          "scenario.extra_slots");
  }
  for (int i = 0; i < nu0; ++i) {
    const auto& c = components[i];
    const std::string path = "scenario.components[" + std::to_string(i) + "]";
    if (!(c.amplitude > 0.0) || !std::isfinite(c.amplitude)) {
      throw ValidationError("must be positive", path + ".amplitude");
    }
    if (!std::isfinite(c.phase)) throw ValidationError("must be finite", path + ".phase");
    check_band(c.band, c.frequency, path);
    check_envelopes(c.amplitude_envelope, c.phase_envelope, n_samples, path);
  }
  for (std::size_t i = 0; i < extra_slots.size(); ++i) {
    const auto& s = extra_slots[i];
    const std::string path = "scenario.extra_slots[" + std::to_string(i) + "]";
    check_band(s.band, s.frequency, path);
    check_envelopes(s.amplitude_envelope, s.phase_envelope, n_samples, path);
  }
}

std::vector<CandidateSlot> Scenario::slots() const {
  std::vector<CandidateSlot> out;
  out.reserve(max_order);
  for (const auto& c : components) out.push_back(slot_of(c));
  for (const auto& s : extra_slots) out.push_back(s);
  return out;
}

std::vector<double> Scenario::slot_frequencies() const {
  std::vector<double> out;
  for (const auto& c : components) out.push_back(c.frequency);
  for (const auto& s : extra_slots) out.push_back(s.frequency);
  return out;
}

std::vector<Band> Scenario::slot_bands() const {
  std::vector<Band> out;
  for (const auto& c : components) out.push_back(c.band);
  for (const auto& s : extra_slots) out.push_back(s.band);
  return out;
}

SinusoidComponent make_component(double amplitude, double frequency, double phase,
                                 int n_samples) {
  SinusoidComponent c;
  c.amplitude = amplitude;
  c.frequency = frequency;
  c.phase = phase;
  c.amplitude_envelope.assign(n_samples, 1.0);
  c.phase_envelope.assign(n_samples, 0.0);
  c.band = default_band(frequency, n_samples);
  return c;
}

CandidateSlot make_slot(double frequency, int n_samples) {
  return {frequency, default_band(frequency, n_samples), std::vector<double>(n_samples, 1.0),
          std::vector<double>(n_samples, 0.0)};
}

double amplitude_for_snr_db(double snr_db_value, double sigma) {
  return sigma * std::sqrt(2.0 * std::pow(10.0, snr_db_value / 10.0));
}

Scenario with_snr_db(Scenario scenario, double snr_db_value) {
  const double a = amplitude_for_snr_db(snr_db_value, scenario.noise_level);
  for (auto& c : scenario.components) c.amplitude = a;
  return scenario;
}

Scenario make_reference_scenario(int n_samples, int true_order, int max_order,
                                 double snr_db_value) {
  static constexpr double kPhases[] = {0.0, -std::numbers::pi / 8.0, -std::numbers::pi / 6.0};
  Scenario s;
  s.n_samples = n_samples;
  s.max_order = max_order;
  s.noise_level = 1.0;
  const double a = amplitude_for_snr_db(snr_db_value, 1.0);
  for (int i = 0; i < max_order; ++i) {
    const double omega = kTwoPi * (0.2 + static_cast<double>(i) / n_samples);
    if (i < true_order) {
      double phase = i < 3 ? kPhases[i] : 0.0;
      phase = std::fmod(phase + kTwoPi, kTwoPi);
      s.components.push_back(make_component(a, omega, phase, n_samples));
    } else {
      s.extra_slots.push_back(make_slot(omega, n_samples));
    }
  }
  return s;
}

std::vector<double> component_signal(const SinusoidComponent& c) {
  const std::size_t n = c.amplitude_envelope.size();
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k + 1);
    out[k] = c.amplitude * c.amplitude_envelope[k] *
             std::cos(c.frequency * t - c.phase + c.phase_envelope[k]);
  }
  return out;
}

std::vector<double> noiseless_signal(const Scenario& scenario) {
  std::vector<double> out(scenario.n_samples, 0.0);
  for (const auto& c : scenario.components) {
    const auto s = component_signal(c);
    for (int k = 0; k < scenario.n_samples; ++k) out[k] += s[k];
  }
  return out;
}

Observation synthesize(const Scenario& scenario, std::uint64_t seed) {
  scenario.validate();
  Observation obs{noiseless_signal(scenario), seed};
  if (scenario.noise_level > 0.0) {
    for (int k = 0; k < scenario.n_samples; ++k) {
      obs.samples[k] += scenario.noise_level * normal_at(seed, static_cast<std::uint64_t>(k));
    }
  }
  return obs;
}

double snr_db(const SinusoidComponent& component, double noise_level) {
  if (!(noise_level > 0.0)) throw ValidationError("noise level must be positive");
  const double a = component.amplitude;
  return 10.0 * std::log10(a * a / (2.0 * noise_level * noise_level));
}

Eigen::MatrixXd signal_gram(std::span<const SinusoidComponent> components) {
  const auto m = static_cast<Eigen::Index>(components.size());
  std::vector<std::vector<double>> signals;
  signals.reserve(components.size());
  for (std::size_t i = 0; i < components.size(); ++i) {
    const auto& c = components[i];
    if (c.amplitude_envelope.size() != components.front().amplitude_envelope.size() ||
        c.phase_envelope.size() != c.amplitude_envelope.size()) {
      throw ValidationError("envelope lengths differ",
                            "components[" + std::to_string(i) + "]");
    }
    signals.push_back(component_signal(c));
  }
  Eigen::MatrixXd gram(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      double sum = 0.0;
      for (std::size_t k = 0; k < signals[i].size(); ++k) sum += signals[i][k] * signals[j][k];
      gram(i, j) = gram(j, i) = sum;
    }
  }
  return gram;
}

double max_normalized_offdiag(const Eigen::MatrixXd& gram) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const double denom = std::sqrt(gram(i, i) * gram(j, j));
      if (denom > 0.0) worst = std::max(worst, std::abs(gram(i, j)) / denom);
    }
  }
  return worst;
}

void slot_basis(const CandidateSlot& slot, double omega, std::span<double> cos_out,
                std::span<double> sin_out) {
  for (std::size_t k = 0; k < cos_out.size(); ++k) {
    const double arg = omega * static_cast<double>(k + 1) + slot.phase_envelope[k];
    cos_out[k] = slot.amplitude_envelope[k] * std::cos(arg);
    sin_out[k] = slot.amplitude_envelope[k] * std::sin(arg);
  }
}

}  // namespace mos
