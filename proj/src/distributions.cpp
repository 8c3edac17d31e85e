#include "mos/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "mos/errors.hpp"
#include "mos/quadrature.hpp"

namespace mos {
namespace {

constexpr double kSeriesEps = 1e-14;
constexpr double kNormalApproxLambda = 1e6;
constexpr long kMaxSeriesTerms = 4'000'000;

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

void check_nc_args(int dof, double lambda) {
  if (dof < 2 || dof % 2 != 0) throw ValidationError("degrees of freedom must be even and >= 2");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("noncentrality must be finite and nonnegative");
  }
}

double log_poisson(double mu, long j) {
  return -mu + static_cast<double>(j) * std::log(mu) - std::lgamma(static_cast<double>(j) + 1.0);
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double nc_chisq_cdf(double x, int dof, double lambda) {
  check_nc_args(dof, lambda);
  if (!(x > 0.0)) return 0.0;
  if (std::isinf(x)) return 1.0;
  const int m = dof / 2;
  const double mean = dof + lambda;
  const double sd = std::sqrt(2.0 * dof + 4.0 * lambda);
  if (lambda > kNormalApproxLambda) return normal_cdf((x - mean) / sd);
  const double z = (x - mean) / sd;
  if (z < -38.0) return 0.0;
  if (z > 40.0) return 1.0;
  const double y = 0.5 * x;
  const double mu = 0.5 * lambda;
  if (mu == 0.0) return boost::math::gamma_p(static_cast<double>(m), y);

  // sum_j w_j P(m + j, y), w_j Poisson(mu). Start at the Poisson mode; the
  // backward recursion P(a-1) = P(a) + t(a-1) adds, the forward one
  // P(a+1) = P(a) - t(a) subtracts with error bounded by eps * P(start).
  const long j0 = static_cast<long>(std::floor(mu));
  const double a0 = static_cast<double>(m + j0);
  const double w0 = std::exp(log_poisson(mu, j0));
  const double p0 = boost::math::gamma_p(a0, y);
  // t(a) = e^-y y^a / Gamma(a + 1)
  const double t0 = std::exp(-y + a0 * std::log(y) - std::lgamma(a0 + 1.0));
  double sum = w0 * p0;

  double w = w0, p = p0, t = t0;
  for (long j = j0 + 1; j < j0 + kMaxSeriesTerms; ++j) {
    const double a_prev = static_cast<double>(m + j - 1);
    p -= t;  // P(m + j) = P(m + j - 1) - t(m + j - 1)
    t *= y / (a_prev + 1.0);
    w *= mu / static_cast<double>(j);
    if (p <= 0.0) break;
    const double term = w * p;
    sum += term;
    const double ratio = mu / static_cast<double>(j + 1);
    if (ratio < 1.0 && term / (1.0 - ratio) < kSeriesEps * sum) break;
    if (w == 0.0) break;
  }

  w = w0;
  p = p0;
  double t_back = t0;  // t(a) with a = m + j
  double previous = w0 * p0;
  for (long j = j0 - 1; j >= 0; --j) {
    const double a = static_cast<double>(m + j);
    t_back *= (a + 1.0) / y;  // t(a) from t(a + 1)
    p += t_back;
    w *= static_cast<double>(j + 1) / mu;
    const double term = w * p;
    sum += term;
    const double ratio = static_cast<double>(j) / mu;
    const bool decreasing = term <= previous;
    previous = term;
    if (decreasing && ratio < 1.0 && w / (1.0 - ratio) < kSeriesEps * sum) break;
    if (w == 0.0) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

double nc_chisq_pdf(double x, int dof, double lambda) {
  check_nc_args(dof, lambda);
  if (x < 0.0 || std::isinf(x)) return 0.0;
  const int m = dof / 2;
  const double mean = dof + lambda;
  const double sd = std::sqrt(2.0 * dof + 4.0 * lambda);
  if (lambda > kNormalApproxLambda) return normal_pdf((x - mean) / sd) / sd;
  const double y = 0.5 * x;
  const double mu = 0.5 * lambda;
  if (x == 0.0) {
    // only the j = 0 term with m = 1 is nonzero at the origin
    return m == 1 ? 0.5 * std::exp(-mu) : 0.0;
  }
  if ((x - mean) / sd > 60.0) return 0.0;
  if (mu == 0.0) return 0.5 * boost::math::gamma_p_derivative(static_cast<double>(m), y);

  // log-concave terms w_j g_{m+j}(y); start near the product mode
  const double md = static_cast<double>(m);
  const long js = std::max(0L, static_cast<long>(std::floor(0.5 * (-md + std::sqrt(md * md + 4.0 * mu * y)))));
  auto log_term = [&](long j) {
    const double a = md + static_cast<double>(j);
    return log_poisson(mu, j) + std::log(0.5) - y + (a - 1.0) * std::log(y) - std::lgamma(a);
  };
  const double log_start = log_term(js);
  double sum = 1.0;  // scaled by exp(log_start)
  double term = 1.0;
  for (long j = js + 1; j < js + kMaxSeriesTerms; ++j) {
    // w_j / w_{j-1} = mu / j, g_{a}/g_{a-1} = y / (a - 1)
    const double ratio = (mu / static_cast<double>(j)) * (y / (md + static_cast<double>(j) - 1.0));
    const double next = term * ratio;
    sum += next;
    const bool decreasing = next <= term;
    term = next;
    if (decreasing && term < kSeriesEps * sum) break;
  }
  term = 1.0;
  for (long j = js - 1; j >= 0; --j) {
    const double ratio = (static_cast<double>(j + 1) / mu) * ((md + static_cast<double>(j)) / y);
    const double next = term * ratio;
    sum += next;
    const bool decreasing = next <= term;
    term = next;
    if (decreasing && term < kSeriesEps * sum) break;
  }
  return std::exp(log_start + std::log(sum));
}

namespace {

class NcChiSqModel final : public DistModel {
 public:
  NcChiSqModel(int dof, double lambda) : dof_(dof), lambda_(lambda) {
    check_nc_args(dof, lambda);
    mean_ = dof + lambda;
    sd_ = std::sqrt(2.0 * dof + 4.0 * lambda);
    double x = mean_ + 8.0 * sd_ + 10.0;
    while (1.0 - nc_chisq_cdf(x, dof_, lambda_) >= 1e-13) x += 2.0 * sd_ + 5.0;
    support_ = x;
  }
  double cdf(double x) const override { return nc_chisq_cdf(x, dof_, lambda_); }
  double pdf(double x) const override { return nc_chisq_pdf(x, dof_, lambda_); }
  double support_hint() const override { return support_; }
  std::vector<double> breakpoints() const override {
    std::vector<double> out;
    for (double k : {-8.0, -3.0, 0.0, 3.0, 8.0}) {
      const double p = mean_ + k * sd_;
      if (p > 0.0 && p < support_) out.push_back(p);
    }
    return out;
  }

 private:
  int dof_;
  double lambda_;
  double mean_ = 0.0;
  double sd_ = 0.0;
  double support_ = 0.0;
};

class PointMassModel final : public DistModel {
 public:
  double cdf(double x) const override { return x >= 0.0 ? 1.0 : 0.0; }
  double pdf(double) const override { return 0.0; }
  double atom() const override { return 1.0; }
  double support_hint() const override { return 0.0; }
};

class MlComponentModel final : public DistModel {
 public:
  MlComponentModel(double dbar_sq, double xi, bool present, MlCdfDenominator denominator)
      : d2_(dbar_sq), rate_(xi / std::numbers::pi), present_(present) {
    if (!(xi > 0.0) || !std::isfinite(xi)) throw ValidationError("xi must be finite and positive");
    if (present_) {
      if (!(dbar_sq > 0.0) || !std::isfinite(dbar_sq)) {
        throw ValidationError("dbar_sq must be finite and positive when a signal is present");
      }
      den_ = denominator == MlCdfDenominator::squared ? 2.0 * d2_ : 2.0 * std::sqrt(d2_);
    }
    atom_ = value(0.0);
    double support = 2.0 * std::log(std::max(rate_, 1e-300) / 1e-13);
    if (present_) support = std::max(support, d2_ + 7.6 * den_);
    support_ = std::max(support, 1.0);
  }
  double cdf(double x) const override { return x < 0.0 ? 0.0 : value(x); }
  double pdf(double x) const override {
    if (x < 0.0) return 0.0;
    const double e = std::exp(-0.5 * x);
    const double g = std::exp(-rate_ * e);
    const double dg = g * rate_ * 0.5 * e;
    if (!present_) return dg;
    const double u = (x - d2_) / den_;
    return normal_pdf(u) / den_ * g + normal_cdf(u) * dg;
  }
  double atom() const override { return atom_; }
  double support_hint() const override { return support_; }
  std::vector<double> breakpoints() const override {
    std::vector<double> out;
    const double gumbel_mode = 2.0 * std::log(rate_);
    if (gumbel_mode > 0.0) out.push_back(gumbel_mode);
    if (present_) {
      for (double k : {-3.0, 0.0, 3.0}) {
        const double p = d2_ + k * den_;
        if (p > 0.0 && p < support_) out.push_back(p);
      }
    }
    return out;
  }

 private:
  double value(double x) const {
    const double g = std::exp(-rate_ * std::exp(-0.5 * x));
    return present_ ? normal_cdf((x - d2_) / den_) * g : g;
  }

  double d2_;
  double rate_;
  bool present_;
  double den_ = 1.0;
  double atom_ = 0.0;
  double support_ = 0.0;
};

class ConvolutionModel final : public DistModel {
 public:
  ConvolutionModel(Dist a, Dist b, double tol) : a_(std::move(a)), b_(std::move(b)), tol_(tol) {
    support_ = a_.support_hint() + b_.support_hint();
    const auto ba = a_.breakpoints();
    const auto bb = b_.breakpoints();
    for (double p : ba) breaks_.push_back(p);
    for (double p : bb) breaks_.push_back(p);
    for (double p : ba) {
      for (double q : bb) breaks_.push_back(p + q);
    }
    std::sort(breaks_.begin(), breaks_.end());
    breaks_.erase(std::unique(breaks_.begin(), breaks_.end()), breaks_.end());
  }
  double cdf(double x) const override {
    if (x < 0.0) return 0.0;
    if (x >= support_) return 1.0;
    const double upper = std::min(x, b_.support_hint());
    const auto bps = inner_breaks(x);
    const QuadResult r =
        integrate([&](double y) { return a_.cdf(x - y) * b_.pdf(y); }, 0.0, upper, tol_, bps);
    return std::clamp(b_.atom() * a_.cdf(x) + r.value, 0.0, 1.0);
  }
  double pdf(double x) const override {
    if (x < 0.0) return 0.0;
    const double upper = std::min(x, b_.support_hint());
    const auto bps = inner_breaks(x);
    const QuadResult r =
        integrate([&](double y) { return a_.pdf(x - y) * b_.pdf(y); }, 0.0, upper, tol_, bps);
    return std::max(0.0, b_.atom() * a_.pdf(x) + a_.atom() * b_.pdf(x) + r.value);
  }
  double atom() const override { return a_.atom() * b_.atom(); }
  double support_hint() const override { return support_; }
  std::vector<double> breakpoints() const override { return breaks_; }

 private:
  std::vector<double> inner_breaks(double x) const {
    std::vector<double> out = b_.breakpoints();
    for (double p : a_.breakpoints()) out.push_back(x - p);
    return out;
  }

  Dist a_;
  Dist b_;
  double tol_;
  double support_ = 0.0;
  std::vector<double> breaks_;
};

class TabulatedModel final : public DistModel {
 public:
  TabulatedModel(const Dist& source, int points) {
    if (points < 8) throw ValidationError("tabulation needs at least 8 points");
    atom_ = source.atom();
    support_ = source.support_hint();
    breaks_ = source.breakpoints();
    step_ = support_ / (points - 1);
    cdf_.resize(points);
    pdf_.resize(points);
    double running = 0.0;
    for (int k = 0; k < points; ++k) {
      const double x = k * step_;
      running = std::max(running, std::clamp(source.cdf(x), 0.0, 1.0));
      cdf_[k] = running;
      pdf_[k] = std::max(0.0, source.pdf(x));
    }
  }
  double cdf(double x) const override {
    if (x < 0.0) return 0.0;
    if (x >= support_) return 1.0;
    const auto [k, s] = locate(x);
    // cubic Hermite with derivative = pdf
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    const double v = h00 * cdf_[k] + h10 * step_ * pdf_[k] + h01 * cdf_[k + 1] +
                     h11 * step_ * pdf_[k + 1];
    return std::clamp(v, cdf_[k], cdf_[k + 1]);
  }
  double pdf(double x) const override {
    if (x < 0.0 || x >= support_) return 0.0;
    const auto [k, s] = locate(x);
    return (1.0 - s) * pdf_[k] + s * pdf_[k + 1];
  }
  double atom() const override { return atom_; }
  double support_hint() const override { return support_; }
  std::vector<double> breakpoints() const override { return breaks_; }

 private:
  std::pair<std::size_t, double> locate(double x) const {
    const double u = x / step_;
    std::size_t k = static_cast<std::size_t>(u);
    if (k + 1 >= cdf_.size()) k = cdf_.size() - 2;
    return {k, u - static_cast<double>(k)};
  }

  double atom_ = 0.0;
  double support_ = 0.0;
  double step_ = 1.0;
  std::vector<double> cdf_;
  std::vector<double> pdf_;
  std::vector<double> breaks_;
};

}  // namespace

Dist nc_chisq2(double lambda) { return nc_chisq(2, lambda); }

Dist nc_chisq(int dof, double lambda) {
  return Dist(std::make_shared<NcChiSqModel>(dof, lambda));
}

Dist point_mass_zero() { return Dist(std::make_shared<PointMassModel>()); }

Dist ml_component_cdf(double dbar_sq, double xi, bool signal_present,
                      MlCdfDenominator denominator) {
  return Dist(std::make_shared<MlComponentModel>(dbar_sq, xi, signal_present, denominator));
}

Dist convolve_cdfs(const Dist& a, const Dist& b, double tol) {
  if (b.support_hint() <= 0.0) return a;
  if (a.support_hint() <= 0.0) return b;
  return Dist(std::make_shared<ConvolutionModel>(a, b, tol));
}

Dist tabulate(const Dist& dist, int points) {
  if (dist.support_hint() <= 0.0) return dist;
  return Dist(std::make_shared<TabulatedModel>(dist, points));
}

double expectation(const Dist& dist, const std::function<double(double)>& g, double tol,
                   std::span<const double> extra_breakpoints) {
  double total = dist.atom() > 0.0 ? dist.atom() * g(0.0) : 0.0;
  const double support = dist.support_hint();
  if (support <= 0.0) return total;
  std::vector<double> bps = dist.breakpoints();
  bps.insert(bps.end(), extra_breakpoints.begin(), extra_breakpoints.end());
  total += integrate([&](double x) { return dist.pdf(x) * g(x); }, 0.0, support, tol, bps).value;
  return total;
}

}  // namespace mos
