#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace mos {

/// Distribution of a nonnegative random variable: an optional point mass at
/// zero plus a density on (0, inf).
class DistModel {
 public:
  virtual ~DistModel() = default;
  /// P(V <= x); includes the atom for x >= 0.
  virtual double cdf(double x) const = 0;
  /// Density of the continuous part.
  virtual double pdf(double x) const = 0;
  virtual double atom() const { return 0.0; }
  /// Point T with 1 - cdf(T) < 1e-12.
  virtual double support_hint() const = 0;
  /// Characteristic points (bulk edges, mode) for seeding quadrature.
  virtual std::vector<double> breakpoints() const { return {}; }
};

class Dist {
 public:
  explicit Dist(std::shared_ptr<const DistModel> model) : model_(std::move(model)) {}

  double cdf(double x) const { return model_->cdf(x); }
  double pdf(double x) const { return model_->pdf(x); }
  double atom() const { return model_->atom(); }
  double support_hint() const { return model_->support_hint(); }
  std::vector<double> breakpoints() const { return model_->breakpoints(); }

 private:
  std::shared_ptr<const DistModel> model_;
};

// Noncentral chi-square with an even number of degrees of freedom, evaluated
// as a Poisson mixture of central chi-squares; terms are summed outward from
// the dominant index until they fall below 1e-14 of the running sum. Beyond
// lambda = 1e6 a normal approximation is used.
double nc_chisq_cdf(double x, int dof, double lambda);
double nc_chisq_pdf(double x, int dof, double lambda);

/// Noncentral chi-square, 2 degrees of freedom, noncentrality `lambda`.
Dist nc_chisq2(double lambda);
/// Even `dof` >= 2.
Dist nc_chisq(int dof, double lambda);

Dist point_mass_zero();

enum class MlCdfDenominator {
  squared,  // Phi((x - d^2) / (2 d^2))
  stddev,  // Phi((x - d^2) / (2 d))
};

/// Approximate CDF of a squared residual after maximizing over a frequency
/// band:
///   signal present: Phi((x - d^2)/den) exp(-(xi/pi) exp(-x/2))
///   signal absent:  exp(-(xi/pi) exp(-x/2))
/// for x > 0 and 0 below. The value at 0+ is carried as an atom at zero.
Dist ml_component_cdf(double dbar_sq, double xi, bool signal_present,
                      MlCdfDenominator denominator = MlCdfDenominator::squared);

/// Distribution of the sum of independent a and b, by quadrature against b.
Dist convolve_cdfs(const Dist& a, const Dist& b, double tol = 1e-10);

/// Piecewise cubic Hermite table of `dist` on [0, support_hint] (cdf with pdf
/// as slope), for repeated evaluation of expensive models.
Dist tabulate(const Dist& dist, int points = 4096);

/// E[g(V)] = atom * g(0) + int pdf(x) g(x) dx over [0, support_hint].
double expectation(const Dist& dist, const std::function<double(double)>& g, double tol,
                   std::span<const double> extra_breakpoints = {});

double normal_cdf(double z);

}  // namespace mos
