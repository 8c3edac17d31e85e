#include "mos/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "mos/errors.hpp"

namespace mos {
namespace {

// QUADPACK qk15 abscissae and weights.
constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

Segment kronrod15(const Integrand& f, double a, double b, int& evals) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    kronrod += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
  }
  evals += 15;
  const double value = kronrod * half;
  const double error = std::abs((kronrod - gauss) * half);
  if (!std::isfinite(value)) {
    throw QuadratureError("non-finite integrand on [" + std::to_string(a) + ", " +
                              std::to_string(b) + "]",
                          value, std::numeric_limits<double>::infinity());
  }
  return {a, b, value, error};
}

}  // namespace

QuadResult integrate(const Integrand& f, double a, double b, double tol,
                     std::span<const double> breakpoints, int max_intervals) {
  QuadResult result;
  if (!(b > a)) return result;
  std::vector<double> cuts{a};
  for (double p : breakpoints) {
    if (p > a && p < b) cuts.push_back(p);
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<Segment> heap;
  double total = 0.0;
  double total_error = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] - cuts[i] <= 0.0) continue;
    Segment s = kronrod15(f, cuts[i], cuts[i + 1], result.evaluations);
    total += s.value;
    total_error += s.error;
    heap.push(s);
  }
  int intervals = static_cast<int>(heap.size());
  while (total_error > tol && !heap.empty()) {
    Segment worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    // Interval too small to split further in double precision.
    if (mid <= worst.a || mid >= worst.b ||
        (worst.b - worst.a) < 64.0 * std::numeric_limits<double>::epsilon() *
                                  std::max(std::abs(worst.a), std::abs(worst.b))) {
      break;
    }
    if (intervals >= max_intervals) break;
    heap.pop();
    Segment left = kronrod15(f, worst.a, mid, result.evaluations);
    Segment right = kronrod15(f, mid, worst.b, result.evaluations);
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++intervals;
  }
  // Re-sum to shed accumulated rounding from the running totals.
  total = 0.0;
  total_error = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    total_error += heap.top().error;
    heap.pop();
  }
  result.value = total;
  result.abs_error = total_error;
  if (total_error > tol) {
    throw QuadratureError("quadrature did not reach tolerance " + std::to_string(tol) +
                              " (achieved " + std::to_string(total_error) + ", estimate " +
                              std::to_string(total) + ")",
                          total, total_error);
  }
  return result;
}

QuadResult integrate_semiinfinite(const Integrand& f, double tol,
                                  std::optional<double> truncation,
                                  std::span<const double> breakpoints) {
  if (truncation) return integrate(f, 0.0, *truncation, tol, breakpoints);
  QuadResult total = integrate(f, 0.0, 1.0, 0.25 * tol, breakpoints);
  double lo = 1.0;
  double budget = 0.25 * tol;
  double last_break = 0.0;
  for (double p : breakpoints) last_break = std::max(last_break, p);
  for (int k = 0; k < 60; ++k) {
    const double hi = 2.0 * lo;
    const QuadResult seg = integrate(f, lo, hi, budget, breakpoints);
    budget = std::max(0.5 * budget, 1e-3 * tol);
    total.value += seg.value;
    total.abs_error += seg.abs_error;
    total.evaluations += seg.evaluations;
    if (hi > last_break && std::abs(seg.value) < 0.01 * tol && std::abs(f(hi)) * hi < 0.01 * tol) {
      return total;
    }
    lo = hi;
  }
  throw QuadratureError("integrand does not decay", total.value, total.abs_error);
}

}  // namespace mos
