#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/distributions/non_central_chi_squared.hpp>

#include "mos/distributions.hpp"
#include "mos/errors.hpp"
#include "mos/quadrature.hpp"

using namespace mos;

namespace {

// Shape checks every distribution must satisfy.
void check_dist_invariants(const Dist& d, double mass_tol = 1e-6) {
  const double top = d.support_hint();
  REQUIRE(top > 0.0);
  CHECK(d.cdf(-1e-9) == 0.0);
  CHECK(d.cdf(top) >= 1.0 - 1e-10);
  double prev = 0.0;
  for (int k = 0; k <= 1000; ++k) {
    const double x = top * k / 1000.0;
    const double c = d.cdf(x);
    CHECK(c >= prev - 1e-15);
    CHECK(d.pdf(x) >= 0.0);
    prev = c;
  }
  const auto bps = d.breakpoints();
  const double mass =
      d.atom() + integrate([&](double x) { return d.pdf(x); }, 0.0, top, 1e-10, bps, 20000).value;
  CHECK(mass == doctest::Approx(1.0).epsilon(mass_tol));
}

}  // namespace

TEST_CASE("central chi-square with two degrees of freedom") {
  const Dist d = nc_chisq2(0.0);
  CHECK(d.cdf(2.0 * std::log(2.0)) == doctest::Approx(0.5).epsilon(1e-14));
  double worst = 0.0;
  for (int k = 0; k <= 400; ++k) {
    const double x = 0.1 * k;
    worst = std::max(worst, std::abs(d.cdf(x) - (1.0 - std::exp(-0.5 * x))));
    CHECK(d.pdf(x) == doctest::Approx(0.5 * std::exp(-0.5 * x)).epsilon(1e-13));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("cdf is the integral of the pdf") {
  const Dist d = nc_chisq2(4.0);
  const double integral = integrate([&](double x) { return d.pdf(x); }, 0.0, 4.0, 1e-12).value;
  CHECK(std::abs(d.cdf(4.0) - integral) < 1e-8);
}

TEST_CASE("noncentral chi-square agrees with an independent implementation") {
  for (int dof : {2, 4, 6, 10}) {
    for (double lambda : {0.3, 5.0, 50.0, 500.0, 5000.0}) {
      boost::math::non_central_chi_squared ref(dof, lambda);
      const double mean = dof + lambda;
      const double sd = std::sqrt(2.0 * (dof + 2.0 * lambda));
      for (double z = -3.0; z <= 6.0; z += 0.5) {
        const double x = mean + z * sd;
        if (x <= 0.0) continue;
        CHECK(std::abs(nc_chisq_cdf(x, dof, lambda) - boost::math::cdf(ref, x)) < 1e-9);
        const double p = boost::math::pdf(ref, x);
        CHECK(nc_chisq_pdf(x, dof, lambda) == doctest::Approx(p).epsilon(1e-8).scale(1e-12));
      }
    }
  }
}

TEST_CASE("noncentral chi-square matches simulation within the DKW band") {
  const long m = 100000;
  const double alpha = 1e-3;
  const double eps = std::sqrt(std::log(2.0 / alpha) / (2.0 * m));
  std::mt19937_64 gen(31);
  std::normal_distribution<double> normal;
  for (double lambda : {0.0, 2.0, 9.0, 40.0}) {
    std::vector<double> draws(m);
    for (auto& v : draws) {
      const double a = normal(gen) + std::sqrt(lambda);
      const double b = normal(gen);
      v = a * a + b * b;
    }
    std::sort(draws.begin(), draws.end());
    const Dist d = nc_chisq2(lambda);
    double sup = 0.0;
    for (long i = 0; i < m; i += 10) {
      const double f = d.cdf(draws[i]);
      sup = std::max({sup, std::abs(f - double(i) / m), std::abs(f - double(i + 1) / m)});
    }
    CHECK(sup < eps);
  }
}

TEST_CASE("distribution invariants for the kernels") {
  for (double lambda : {0.0, 0.5, 7.0, 80.0, 2000.0}) check_dist_invariants(nc_chisq2(lambda));
  check_dist_invariants(nc_chisq(6, 12.0));
  check_dist_invariants(ml_component_cdf(30.0, 8.0, true));
  check_dist_invariants(ml_component_cdf(30.0, 8.0, true, MlCdfDenominator::stddev));
  check_dist_invariants(ml_component_cdf(0.0, 8.0, false));
  check_dist_invariants(convolve_cdfs(nc_chisq2(3.0), nc_chisq2(1.0)));
  check_dist_invariants(tabulate(convolve_cdfs(ml_component_cdf(20.0, 6.0, true),
                                               ml_component_cdf(20.0, 6.0, true))),
                        1e-5);
}

TEST_CASE("nc_chisq2 rejects invalid noncentrality") {
  CHECK_THROWS_AS(nc_chisq2(-1.0), ValidationError);
  CHECK_THROWS_AS(nc_chisq2(std::nan("")), ValidationError);
  CHECK_THROWS_AS(nc_chisq(3, 1.0), ValidationError);
}

TEST_CASE("ML component distribution") {
  const double xi = 10.0;
  const Dist absent = ml_component_cdf(0.0, xi, false);
  CHECK(absent.cdf(1e6) == doctest::Approx(1.0));
  const double x = 2.0 * std::log(xi / std::numbers::pi);
  CHECK(absent.cdf(x) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(absent.cdf(-0.5) == 0.0);
  CHECK(absent.atom() == doctest::Approx(std::exp(-xi / std::numbers::pi)));

  const Dist present = ml_component_cdf(25.0, xi, true);
  const double pi = std::numbers::pi;
  auto closed = [&](double v) {
    return normal_cdf((v - 25.0) / (2.0 * 25.0)) * std::exp(-(xi / pi) * std::exp(-0.5 * v));
  };
  for (double v : {0.5, 5.0, 20.0, 40.0}) {
    CHECK(present.cdf(v) == doctest::Approx(closed(v)).epsilon(1e-12));
    const double h = 1e-5;
    CHECK(present.pdf(v) == doctest::Approx((closed(v + h) - closed(v - h)) / (2 * h)).epsilon(1e-5));
  }
  const Dist sd = ml_component_cdf(25.0, xi, true, MlCdfDenominator::stddev);
  CHECK(sd.cdf(30.0) ==
        doctest::Approx(normal_cdf(5.0 / 10.0) * std::exp(-(xi / pi) * std::exp(-15.0))));

  CHECK_THROWS_AS(ml_component_cdf(1.0, 0.0, true), ValidationError);
  CHECK_THROWS_AS(ml_component_cdf(std::nan(""), 1.0, true), ValidationError);
  CHECK_THROWS_AS(ml_component_cdf(-1.0, 1.0, true), ValidationError);
}

TEST_CASE("convolution of two central components is chi-square with four dof") {
  const Dist d = convolve_cdfs(nc_chisq2(0.0), nc_chisq2(0.0));
  for (double x : {1.0, 4.0, 10.0}) {
    CHECK(std::abs(d.cdf(x) - (1.0 - std::exp(-0.5 * x) * (1.0 + 0.5 * x))) < 1e-6);
  }
}

TEST_CASE("convolution is additive in the noncentrality") {
  const Dist d = convolve_cdfs(nc_chisq2(3.0), nc_chisq2(7.5));
  boost::math::non_central_chi_squared ref(4, 10.5);
  for (double x : {2.0, 8.0, 14.0, 20.0, 35.0}) {
    CHECK(std::abs(d.cdf(x) - boost::math::cdf(ref, x)) < 1e-6);
    CHECK(std::abs(d.cdf(x) - nc_chisq_cdf(x, 4, 10.5)) < 1e-6);
  }
}

TEST_CASE("point mass at zero is the convolution identity") {
  const Dist a = nc_chisq2(6.0);
  const Dist d = convolve_cdfs(a, point_mass_zero());
  const Dist e = convolve_cdfs(point_mass_zero(), a);
  for (double x : {0.5, 3.0, 9.0, 20.0}) {
    CHECK(d.cdf(x) == doctest::Approx(a.cdf(x)).epsilon(1e-9));
    CHECK(e.cdf(x) == doctest::Approx(a.cdf(x)).epsilon(1e-9));
  }
}

TEST_CASE("tabulated distribution reproduces its source") {
  const Dist src = convolve_cdfs(nc_chisq2(4.0), ml_component_cdf(0.0, 6.0, false));
  const Dist tab = tabulate(src);
  double worst = 0.0;
  for (int k = 0; k <= 500; ++k) {
    const double x = src.support_hint() * k / 500.0 + 1e-3;
    worst = std::max(worst, std::abs(tab.cdf(x) - src.cdf(x)));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("normalization of the noncentral pdf over the half line") {
  const Dist d = nc_chisq2(5.0);
  const auto r = integrate_semiinfinite([&](double x) { return d.pdf(x); }, 1e-10);
  CHECK(std::abs(r.value - 1.0) < 1e-8);
}

TEST_CASE("expectation against a distribution") {
  const Dist d = nc_chisq2(3.0);
  CHECK(expectation(d, [](double x) { return x; }, 1e-10) == doctest::Approx(5.0).epsilon(1e-8));
  const Dist m = ml_component_cdf(0.0, 12.0, false);
  CHECK(expectation(m, [](double) { return 1.0; }, 1e-10) == doctest::Approx(1.0).epsilon(1e-7));
}
