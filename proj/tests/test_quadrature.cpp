#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sbmpot/quadrature.hpp"

using namespace sbm;

TEST_CASE("polynomial and exponential integrals") {
  auto r = integrate([](double x) { return x * x; }, 0.0, 1.0);
  CHECK(r.value == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(r.converged);

  auto e = integrate_positive_axis([](double t) { return std::exp(-t); });
  CHECK(e.value == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(e.converged);
}

TEST_CASE("integrable endpoint singularity") {
  // int_0^inf t^{-1/2} e^{-t} dt = sqrt(pi)
  auto r = integrate_positive_axis(
      [](double t) { return std::exp(-t) / std::sqrt(t); });
  CHECK(r.value == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-9));
  CHECK(r.converged);
}

TEST_CASE("divergent tails are detected") {
  auto r = integrate_positive_axis([](double t) { return 1.0 / (1.0 + t); });
  CHECK_FALSE(r.converged);
}

TEST_CASE("oscillatory integrand stays accurate") {
  auto r = integrate([](double x) { return std::sin(10.0 * x); }, 0.0, M_PI);
  double exact = (1.0 - std::cos(10.0 * M_PI)) / 10.0;
  CHECK(r.value == doctest::Approx(exact).epsilon(1e-10));
}
