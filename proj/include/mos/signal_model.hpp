#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mos {

/// Open frequency interval (low, high), radians/sample.
struct Band {
  double low = 0.0;
  double high = 0.0;

  bool contains(double omega) const { return omega > low && omega < high; }
  double width() const { return high - low; }
  double center() const { return 0.5 * (low + high); }
};

/// Symmetric band of half-width pi/N_s around `omega`.
Band default_band(double omega, int n_samples);

/// One modulated sinusoid a f(t) cos(w t - phi + Psi(t)), t = 1..N_s.
struct SinusoidComponent {
  double amplitude = 1.0;
  double frequency = 0.0;
  double phase = 0.0;
  std::vector<double> amplitude_envelope;  // f(t)
  std::vector<double> phase_envelope;      // Psi(t), radians
  Band band;
};

/// Basis shape for a candidate order index. The first nu0 slots coincide with
/// the true components; the remaining ones describe where the larger
/// candidate models look for additional signals.
struct CandidateSlot {
  double frequency = 0.0;
  Band band;
  std::vector<double> amplitude_envelope;
  std::vector<double> phase_envelope;
};

struct Scenario {
  std::vector<SinusoidComponent> components;  // nu0 true signals
  std::vector<CandidateSlot> extra_slots;      // slots nu0+1 .. max_order
  double noise_level = 1.0;
  int n_samples = 64;
  int max_order = 1;
  bool noise_known = true;
  // Permits noise_level == 0 for noiseless checks.
  bool noiseless_override = false;

  int true_order() const { return static_cast<int>(components.size()); }
  /// Throws ValidationError naming the offending field.
  void validate() const;
  /// All max_order candidate slots, true components first.
  std::vector<CandidateSlot> slots() const;
  std::vector<double> slot_frequencies() const;
  std::vector<Band> slot_bands() const;
};

struct Observation {
  std::vector<double> samples;
  std::uint64_t seed = 0;
};

/// Unit f and zero Psi of length n.
SinusoidComponent make_component(double amplitude, double frequency, double phase,
                                 int n_samples);
CandidateSlot make_slot(double frequency, int n_samples);

/// Amplitude giving `snr_db` against noise level `sigma` (z = a^2 / 2 sigma^2).
double amplitude_for_snr_db(double snr_db, double sigma);

/// Sets every component amplitude to the one matching `snr_db`.
Scenario with_snr_db(Scenario scenario, double snr_db);

/// Equal-amplitude sinusoids at w_i = 2 pi (0.2 + (i-1)/N_s), phases
/// (0, -pi/8, -pi/6) mapped to [0, 2 pi), unit envelopes, default bands,
/// sigma = 1. Extra slots continue the frequency grid.
Scenario make_reference_scenario(int n_samples, int true_order, int max_order,
                                 double snr_db);

/// s(t) = a f(t) cos(w t - phi + Psi(t)) for t = 1..N_s.
std::vector<double> component_signal(const SinusoidComponent& component);
std::vector<double> noiseless_signal(const Scenario& scenario);

/// Deterministic in (scenario, seed).
Observation synthesize(const Scenario& scenario, std::uint64_t seed);

double snr_db(const SinusoidComponent& component, double noise_level);

/// Pairwise inner products of the full modulated signals.
Eigen::MatrixXd signal_gram(std::span<const SinusoidComponent> components);

/// max_{i != j} |G_ij| / sqrt(G_ii G_jj); 0 for a single signal.
double max_normalized_offdiag(const Eigen::MatrixXd& gram);

/// Cosine and sine basis rows f(t){cos,sin}(w t + Psi(t)) for a slot at
/// frequency `omega`.
void slot_basis(const CandidateSlot& slot, double omega, std::span<double> cos_out,
                std::span<double> sin_out);

}  // namespace mos
