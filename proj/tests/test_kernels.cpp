#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sbmpot/kernels.hpp"
#include "sbmpot/quadrature.hpp"

using namespace sbm;

namespace {

// independent Gamma-function oracle for the stable jump constant
double jump_constant_oracle(int d, double alpha) {
  return alpha * std::pow(2.0, alpha - 1.0) * std::pow(M_PI, -0.5 * d) *
         std::tgamma(0.5 * (d + alpha)) / std::tgamma(1.0 - 0.5 * alpha);
}

}  // namespace

TEST_CASE("model construction refuses recurrence and bad dimensions") {
  CHECK_THROWS_AS(make_model(BernsteinSpec::stable(1.0), 1), ModelError);
  CHECK_THROWS_AS(make_model(BernsteinSpec::relativistic(1.0, 1.0), 2),
                  ModelError);
  auto m = make_model(BernsteinSpec::stable(1.0), 2);
  CHECK(m.transient);
}

TEST_CASE("stable jumping kernel matches the Gamma-function oracle") {
  for (int d : {2, 3})
    for (double a : {0.5, 1.0, 1.5})
      CHECK(stable_jump_constant(d, a) ==
            doctest::Approx(jump_constant_oracle(d, a)).epsilon(1e-8));
}

TEST_CASE("stable kernel power law and scaling consistency") {
  auto m = make_model(BernsteinSpec::stable(1.0), 3);
  CHECK(jumping_kernel(m, 2.0) / jumping_kernel(m, 1.0) ==
        doctest::Approx(std::pow(2.0, -4.0)).epsilon(1e-12));
  // exact self-similarity of the fast path
  double lam = 1.7, r = 0.3;
  CHECK(jumping_kernel(m, lam * r) ==
        doctest::Approx(std::pow(lam, -4.0) * jumping_kernel(m, r))
            .epsilon(1e-13));
}

TEST_CASE("subordination quadrature tracks the power law across radii") {
  for (int d : {2, 3}) {
    auto spec = BernsteinSpec::stable(1.0);
    double c = jump_constant_oracle(d, 1.0);
    for (double r : {0.1, 0.5, 1.0, 4.0, 10.0}) {
      // bypass the fast path: integrate the subordination integral directly
      auto q = integrate_positive_axis([&](double t) {
        double e = -r * r / (4.0 * t);
        if (e < -700.0) return 0.0;
        return std::pow(4.0 * M_PI * t, -0.5 * d) * std::exp(e) *
               levy_density(spec, t);
      });
      CHECK(q.value ==
            doctest::Approx(c * std::pow(r, -(d + 1.0))).epsilon(1e-7));
    }
  }
}

TEST_CASE("relativistic kernel is positive, decreasing, with bounded shift ratio") {
  auto m = make_model(BernsteinSpec::relativistic(1.0, 1.0), 3);
  double prev = std::numeric_limits<double>::infinity();
  double worst_ratio = 0.0;
  for (int i = 0; i <= 40; ++i) {
    double r = 1.0 + 9.0 * i / 40.0;
    double v = jumping_kernel(m, r);
    CHECK(v > 0.0);
    CHECK(v < prev);
    prev = v;
    worst_ratio = std::max(worst_ratio, v / jumping_kernel(m, r + 1.0));
  }
  CHECK(std::isfinite(worst_ratio));
}

TEST_CASE("shift inequality j(r) <= C j(r+1) is uniform on [1,20]") {
  for (const auto& spec :
       {BernsteinSpec::stable(1.2), BernsteinSpec::relativistic(1.0, 1.0)}) {
    auto m = make_model(spec, 3);
    double C = 0.0;
    for (double r = 1.0; r <= 2.0; r += 0.1)
      C = std::max(C, jumping_kernel(m, r) / jumping_kernel(m, r + 1.0));
    for (double r = 1.0; r <= 20.0; r += 0.5)
      CHECK(jumping_kernel(m, r) <=
            1.001 * C * jumping_kernel(m, r + 1.0));
  }
}

TEST_CASE("kernel table interpolates within budget and dumps csv") {
  auto m = make_model(BernsteinSpec::relativistic(1.0, 1.0), 3);
  auto table = KernelTable::build(m, 0.05, 30.0, 400);
  CHECK(table.validate(m, 40) < 1e-6);
  std::ostringstream os;
  table.dump_csv(os);
  CHECK(os.str().substr(0, 13) == "radius,value\n");
}

TEST_CASE("kernel ratio audit approaches one") {
  auto m = make_model(BernsteinSpec::stable(1.0), 2);
  auto audit = kernel_ratio_audit(m, 0.5, {0.1, 0.01, 0.001});
  for (const auto& [delta, sup] : audit) CHECK(sup >= 1.0);
  // decreasing toward 1 as delta decreases
  CHECK(audit[2].second <= audit[1].second);
  CHECK(audit[1].second <= audit[0].second);
  CHECK(audit[2].second == doctest::Approx(1.0).epsilon(1e-2));
  // oracle: the sup of (r/(r+delta))^{-d-alpha} sits at r = r0
  double expected = std::pow(0.5 / (0.5 + 0.001), -3.0);
  CHECK(audit[2].second == doctest::Approx(expected).epsilon(1e-3));
}

TEST_CASE("comparability radii") {
  auto m = make_model(BernsteinSpec::stable(1.0), 2);
  auto inner = comparability_radius(m, 0.5, 0.1, 1.0,
                                    ComparabilityDirection::kInner);
  CHECK(inner.found);
  CHECK(inner.p > 0.0);
  CHECK(inner.p < 1.0);
  for (const auto& [s, w] : inner.certificate) CHECK(w <= 1.1 * (1.0 + 1e-6));

  // huge epsilon makes the bound vacuous: p approaches q
  auto loose = comparability_radius(m, 0.5, 1e6, 1.0,
                                    ComparabilityDirection::kInner);
  CHECK(loose.p > 0.99);

  auto outer =
      comparability_radius(m, 1.0, 0.25, 2.0, ComparabilityDirection::kOuter);
  CHECK(outer.found);
  CHECK(outer.p > 2.0);

  // exponential tails do not satisfy the outer comparability
  auto rel = make_model(BernsteinSpec::relativistic(1.0, 1.0), 3);
  auto rel_outer =
      comparability_radius(rel, 1.0, 0.25, 2.0, ComparabilityDirection::kOuter);
  CHECK_FALSE(rel_outer.found);
}

TEST_CASE("free Green function") {
  auto m3 = make_model(BernsteinSpec::stable(1.0), 3);
  auto g1 = free_green(m3, 1.0);
  auto g2 = free_green(m3, 2.0);
  CHECK_FALSE(g1.profile_only);
  CHECK(g2.value / g1.value == doctest::Approx(0.25).epsilon(1e-9));
  // G(r) r^3 phi(r^{-2}) is constant for the stable kind
  double prev = 0.0;
  for (double r : {0.01, 0.1, 0.5, 1.0}) {
    double v = free_green(m3, r).value * std::pow(r, 3.0) *
               phi(m3.spec, 1.0 / (r * r));
    if (prev != 0.0) CHECK(v == doctest::Approx(prev).epsilon(1e-10));
    prev = v;
  }
  // Riesz kernel oracle: Gamma((d-a)/2) / (2^a pi^{d/2} Gamma(a/2)) r^{a-d}
  double riesz = std::tgamma(1.0) /
                 (2.0 * std::pow(M_PI, 1.5) * std::tgamma(0.5));
  CHECK(g1.value == doctest::Approx(riesz).epsilon(1e-6));

  auto rel = make_model(BernsteinSpec::relativistic(1.0, 1.0), 3);
  auto p1 = free_green(rel, 0.5);
  auto p2 = free_green(rel, 1.0);
  CHECK(p1.profile_only);
  CHECK(p1.value > p2.value);
  CHECK(p2.value > 0.0);
}

TEST_CASE("ball Poisson kernel normalization and symmetry") {
  for (int d : {2, 3}) {
    // exterior integral equals one: radial quadrature oracle
    double alpha = 1.0;
    auto radial = [&](double s) {
      Pt y{};
      y[0] = s;
      return ball::poisson_kernel(alpha, d, 1.0, Pt{}, y) *
             sphere_area(d) * std::pow(s, d - 1.0);
    };
    double total = 0.0;
    double lo = 1.0;
    for (int seg = 0; seg < 60; ++seg) {
      double hi = lo * 1.5;
      total += integrate(radial, lo + (seg == 0 ? 1e-13 : 0.0), hi).value;
      lo = hi;
    }
    // remaining tail beyond lo: integrand ~ C s^{-1-alpha}
    total += radial(lo) * lo / alpha;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));

    // Gamma oracle for the normalizer
    double cp = std::tgamma(0.5 * d) * std::pow(M_PI, -0.5 * d - 1.0) *
                std::sin(M_PI * alpha / 2.0);
    CHECK(ball::poisson_normalizer(d, alpha) ==
          doctest::Approx(cp).epsilon(1e-9));
  }
  // rotational symmetry from the center, exact
  double a = ball::poisson_kernel(1.0, 2, 1.0, Pt{}, pt(2.0, 0.0));
  double b = ball::poisson_kernel(1.0, 2, 1.0, Pt{}, pt(0.0, 2.0));
  CHECK(a == b);
  CHECK_THROWS_AS(ball::poisson_kernel(1.0, 2, 1.0, pt(1.5, 0.0), pt(2.0, 0.0)),
                  GeometryError);
  CHECK_THROWS_AS(ball::poisson_kernel(1.0, 2, 1.0, Pt{}, pt(0.5, 0.0)),
                  GeometryError);
}

TEST_CASE("ball Green function: symmetry, vanishing, occupation identity") {
  double alpha = 1.0;
  CHECK(ball::green_function(alpha, 2, 1.0, pt(1.2, 0.0), pt(0.2, 0.0)) == 0.0);
  CHECK(ball::green_function(alpha, 2, 1.0, pt(0.2, 0.0), pt(1.2, 0.0)) == 0.0);
  double g1 = ball::green_function(alpha, 2, 1.0, pt(0.3, 0.1), pt(-0.2, 0.4));
  double g2 = ball::green_function(alpha, 2, 1.0, pt(-0.2, 0.4), pt(0.3, 0.1));
  CHECK(g1 == doctest::Approx(g2).epsilon(1e-14));
  CHECK_THROWS_AS(ball::green_function(alpha, 2, 1.0, pt(0.1, 0.1), pt(0.1, 0.1)),
                  GeometryError);

  for (int d : {2, 3}) {
    for (double a : {0.5, 1.0, 1.5}) {
      // quadrature rule integrates G(0,.) exactly to the expected exit time
      const auto& rule = ball::green_quad_rule(d, a, 24);
      double mass = 0.0;
      for (double w : rule.weight) mass += w;
      CHECK(mass == doctest::Approx(ball::exit_time_coefficient(d, a))
                        .epsilon(5e-5));
      // adaptive radial quadrature of the occupation identity, 1e-6 oracle
      auto rad = [&](double s) {
        double z = (1.0 - s * s) / (s * s);
        return std::pow(s, a - 1.0) * ball::green_profile(d, a, z);
      };
      QuadOptions qo;
      qo.rel_tol = 1e-9;
      double s_lo = 1e-9;
      double occ = ball::green_profile_total(d, a) * std::pow(s_lo, a) / a;
      double lo = s_lo;
      while (lo < 1.0) {
        double hi = std::min(1.0, lo * 4.0);
        occ += integrate(rad, lo, hi == 1.0 ? 1.0 - 1e-13 : hi, qo).value;
        lo = hi;
      }
      occ *= ball::green_normalizer(d, a) * sphere_area(d);
      CHECK(occ == doctest::Approx(ball::exit_time_coefficient(d, a))
                       .epsilon(1e-6));
      // Gamma oracle for the Green normalizer
      double kappa = std::tgamma(0.5 * d) /
                     (std::pow(2.0, a) * std::pow(M_PI, 0.5 * d) *
                      std::pow(std::tgamma(0.5 * a), 2.0));
      CHECK(ball::green_normalizer(d, a) ==
            doctest::Approx(kappa).epsilon(1e-7));
    }
  }
}

TEST_CASE("expected exit time closed form") {
  CHECK(ball::expected_exit_time(1.0, 2, 1.0, pt(1.0, 0.0)) == 0.0);
  double v1 = ball::expected_exit_time(1.0, 2, 1.0, Pt{});
  double v2 = ball::expected_exit_time(1.0, 2, 2.0, Pt{});
  CHECK(v2 / v1 == doctest::Approx(2.0).epsilon(1e-12));
  // d=2, alpha=1 value is 2/pi
  CHECK(v1 == doctest::Approx(2.0 / M_PI).epsilon(1e-12));
}

TEST_CASE("Poisson kernel is the j-smoothed Green function") {
  // P_B(0,y) = int_B G_B(0,w) j(|w-y|) dw via the quadrature rule
  double alpha = 1.0;
  int d = 2;
  auto m = make_model(BernsteinSpec::stable(alpha), d);
  const auto& rule = ball::green_quad_rule(d, alpha, 48);
  Pt y = pt(1.8, 0.4);
  const int nang = 512;
  double total = 0.0;
  for (size_t i = 0; i < rule.factor.size(); ++i) {
    double mean = 0.0;
    for (int k = 0; k < nang; ++k) {
      double t = 2.0 * M_PI * (k + 0.5) / nang;
      Pt w = pt(rule.factor[i] * std::cos(t), rule.factor[i] * std::sin(t));
      mean += jumping_kernel(m, dist(w, y, d));
    }
    total += rule.weight[i] * mean / nang;
  }
  double exact = ball::poisson_kernel(alpha, d, 1.0, Pt{}, y);
  CHECK(total == doctest::Approx(exact).epsilon(2e-3));
}

TEST_CASE("exit radius cdf against the arctan closed form") {
  // alpha = 1: P(Z <= z) = (2/pi) arctan(sqrt(z))
  for (double z : {1e-6, 0.01, 0.5, 1.0, 10.0, 1e4}) {
    double exact = 2.0 / M_PI * std::atan(std::sqrt(z));
    CHECK(ball::exit_radius_cdf(2, 1.0, z) ==
          doctest::Approx(exact).epsilon(1e-8));
  }
  // quantile inverts the cdf
  for (double u : {0.001, 0.1, 0.5, 0.9, 0.999}) {
    double z = ball::exit_radius_quantile(2, 1.0, u);
    CHECK(ball::exit_radius_cdf(2, 1.0, z) ==
          doctest::Approx(u).epsilon(1e-8));
  }
  // other alphas: quantile built from a different table still inverts
  for (double u : {0.01, 0.5, 0.99}) {
    double z = ball::exit_radius_quantile(3, 0.6, u);
    CHECK(ball::exit_radius_cdf(3, 0.6, z) ==
          doctest::Approx(u).epsilon(1e-8));
  }
}

TEST_CASE("Martin kernel boundary normalization") {
  Pt x0 = pt(0.1, -0.2);
  Pt z = pt(0.0, 1.0);
  CHECK(ball::martin_kernel_boundary(1.0, 2, 1.0, x0, x0, z) == 1.0);
  double v = ball::martin_kernel_boundary(1.0, 2, 1.0, pt(0.4, 0.0), x0, z);
  CHECK(v > 0.0);
}
