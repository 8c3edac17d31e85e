#pragma once

#include <functional>
#include <optional>
#include <span>

namespace mos {

struct QuadResult {
  double value = 0.0;
  double abs_error = 0.0;
  int evaluations = 0;
};

using Integrand = std::function<double(double)>;

inline constexpr double kDefaultQuadTol = 1e-8;

/// Globally adaptive 7/15-point Gauss-Kronrod on [a, b]. Interior
/// `breakpoints` (kinks, peaks) seed the initial partition. Throws
/// QuadratureError when the absolute error estimate cannot be brought under
/// `tol` within `max_intervals` subintervals.
QuadResult integrate(const Integrand& f, double a, double b, double tol = kDefaultQuadTol,
                     std::span<const double> breakpoints = {}, int max_intervals = 4000);

/// Integral over [0, inf) of a function that decays beyond a finite point.
/// With `truncation` the domain is cut at T; otherwise T is found by doubling
/// until a segment contributes less than tol / 100.
QuadResult integrate_semiinfinite(const Integrand& f, double tol = kDefaultQuadTol,
                                  std::optional<double> truncation = std::nullopt,
                                  std::span<const double> breakpoints = {});

}  // namespace mos
