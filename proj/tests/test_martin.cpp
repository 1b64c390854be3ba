#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sbmpot/martin.hpp"
#include "test_util.hpp"

using namespace sbm;

namespace {
ProcessModel stable2() { return make_model(BernsteinSpec::stable(1.0), 2); }

std::vector<double> halving(double top, int n) {
  std::vector<double> v;
  for (int k = 0; k < n; ++k) v.push_back(top / (1 << k));
  return v;
}
}  // namespace

TEST_CASE("boundary points of the ball are accessible") {
  auto model = stable2();
  auto B = Domain::ball(Pt{}, 1.0, 2);
  MartinOptions mo;
  mo.n_paths = 8000;
  mo.seed = 301;
  auto v = classify_accessible(model, B, BoundaryPoint{pt(1.0, 0.0), false},
                               Pt{}, halving(0.2, 5), mo);
  CHECK(v.verdict == Verdict::kAccessible);
  CHECK(v.fitted_slope < -0.1);
  CHECK(v.r_squared > 0.9);
  // evidence grows as the truncation tightens
  CHECK(v.evidence.front().second < v.evidence.back().second);
}

TEST_CASE("infinity classification") {
  auto model = stable2();
  auto B = Domain::ball(Pt{}, 1.0, 2);
  MartinOptions mo;
  mo.seed = 302;
  // bounded domain: infinity is not a boundary point
  CHECK_THROWS_AS(classify_accessible(model, B, BoundaryPoint{{}, true}, Pt{},
                                      {4.0, 8.0}, mo),
                  ModelError);

  // exterior of the closed unit ball in d = 3: escape is certain
  auto model3 = make_model(BernsteinSpec::stable(1.0), 3);
  auto ext = Domain::parse("diff(all(), ball(0 0 0; 1))", 3);
  MartinOptions mo3;
  mo3.n_paths = 600;
  mo3.dt = 5e-3;
  mo3.seed = 303;
  auto v = classify_accessible(model3, ext, BoundaryPoint{{}, true},
                               pt(3.0, 0.0, 0.0), {6.0, 12.0, 24.0}, mo3);
  CHECK(v.verdict == Verdict::kAccessible);
  CHECK(v.escape_probability > 0.0);
  CHECK(v.escape_probability > 4.0 * v.escape_std_error);
}

TEST_CASE("martin kernel on the ball matches the closed-form limit") {
  auto model = stable2();
  auto B = Domain::ball(Pt{}, 1.0, 2);
  MartinOptions mo;
  mo.seed = 304;
  Pt x0{};
  Pt z = pt(std::cos(0.5), std::sin(0.5));
  auto approach = halving(0.08, 5);

  // normalization at x = x0 is exactly one
  auto unit = martin_kernel(model, B, x0, BoundaryPoint{z, false}, x0,
                            approach, mo);
  CHECK(unit.value == 1.0);
  CHECK(unit.std_error == 0.0);

  for (const Pt& x : {pt(0.4, 0.0), pt(-0.2, 0.55), pt(0.05, -0.7)}) {
    auto est = martin_kernel(model, B, x, BoundaryPoint{z, false}, x0,
                             approach, mo);
    double exact = ball::martin_kernel_boundary(1.0, 2, 1.0, x, x0, z);
    CHECK(est.value == doctest::Approx(exact).epsilon(1e-2));
  }

  // continuity in the boundary point: nearby z give nearby kernels
  Pt z2 = pt(std::cos(0.52), std::sin(0.52));
  auto a = martin_kernel(model, B, pt(0.4, 0.0), BoundaryPoint{z, false}, x0,
                         approach, mo);
  auto b = martin_kernel(model, B, pt(0.4, 0.0), BoundaryPoint{z2, false}, x0,
                         approach, mo);
  CHECK(std::abs(a.value - b.value) < 0.1 * std::abs(a.value));
}

TEST_CASE("martin kernel on a CSG domain by paired Monte Carlo") {
  auto model = stable2();
  // union of two overlapping balls; z on the right cap
  auto D = Domain::unite(Domain::ball(Pt{}, 1.0, 2),
                         Domain::ball(pt(0.8, 0.0), 0.8, 2));
  Pt z = pt(1.6, 0.0);
  Pt x0 = pt(0.2, 0.0);
  MartinOptions mo;
  mo.n_paths = 3000;
  mo.seed = 305;
  auto est = martin_kernel(model, D, pt(0.9, 0.0), BoundaryPoint{z, false},
                           x0, {0.1, 0.05, 0.025}, mo);
  CHECK(est.value > 0.0);
  CHECK(std::isfinite(est.value));
  CHECK(est.std_error > 0.0);
}

TEST_CASE("martin integral: normalization and Dirac reduction") {
  auto model = stable2();
  auto B = Domain::ball(Pt{}, 1.0, 2);
  Pt x0{};
  MartinOptions mo;
  mo.seed = 306;

  BoundaryMeasure empty;
  auto zero = martin_integral(model, B, empty, std::nullopt, pt(0.3, 0.0), x0,
                              mo, true);
  CHECK(zero.value == 0.0);

  BoundaryMeasure mu;
  Pt z = pt(0.0, 1.0);
  mu.atoms.push_back({BoundaryPoint{z, false}, 0.8});
  // at x0 the integral equals the total mass
  auto at0 = martin_integral(model, B, mu, std::nullopt, x0, x0, mo, true);
  CHECK(at0.value == doctest::Approx(0.8).epsilon(1e-9));
  // at a generic point it reduces to mass * kernel
  Pt x = pt(0.25, -0.3);
  auto atx = martin_integral(model, B, mu, std::nullopt, x, x0, mo, true);
  double exact = 0.8 * ball::martin_kernel_boundary(1.0, 2, 1.0, x, x0, z);
  CHECK(atx.value == doctest::Approx(exact).epsilon(1e-2));
  // the accessibility check passes for ball boundary points without a waiver
  auto checked = martin_integral(model, B, mu, std::nullopt, x, x0, mo, false);
  CHECK(checked.value == doctest::Approx(exact).epsilon(1e-2));
}

TEST_CASE("boundary trace: bounded functions vanish, Martin kernels return their atom") {
  auto model = stable2();
  auto B = Domain::ball(Pt{}, 1.0, 2);
  Pt x0{};
  Rng rng(307, 0);
  BoundaryBins bins = make_boundary_bins(B, 16, rng);
  Exhaustion ex = default_exhaustion(B, 5);
  TraceOptions to;
  to.seed = 307;
  to.tolerance = 0.1;

  // u = 1: eta_U mass is the probability of landing in the shell, known in
  // closed form through the radial exit law
  auto t1 = boundary_trace(model, B, [](const Pt&) { return 1.0; }, ex, x0,
                           bins, to);
  REQUIRE(t1.stages.size() == 5);
  for (size_t k = 0; k < ex.stages.size(); ++k) {
    Pt c{};
    double rho = 0.0;
    REQUIRE(ex.stages[k].as_ball(c, rho));
    double zmax = (1.0 - rho * rho) / (rho * rho);
    double exact = ball::exit_radius_cdf(2, 1.0, zmax);
    CHECK(t1.stages[k].total_mass == doctest::Approx(exact).epsilon(0.02));
  }
  // masses decrease to zero and the interior trend vanishes
  for (size_t k = 1; k < t1.stages.size(); ++k)
    CHECK(t1.stages[k].total_mass < t1.stages[k - 1].total_mass);
  CHECK(t1.stages.back().total_mass < 0.05 * t1.stages.front().total_mass);
  CHECK(t1.interior_mass_trend.back() < 0.02);

  // u = M(., z): the trace concentrates at z with unit mass
  Pt z = pt(std::cos(1.1), std::sin(1.1));
  auto mf = [&](const Pt& p) {
    return ball::martin_kernel_boundary(1.0, 2, 1.0, p, x0, z);
  };
  auto t2 = boundary_trace(model, B, mf, ex, x0, bins, to);
  const auto& last = t2.stages.back();
  CHECK(last.total_mass == doctest::Approx(1.0).epsilon(0.05));
  int zb = bins.find(z);
  CHECK(last.bin_masses[static_cast<size_t>(zb)] >= 0.95 * last.total_mass);
  CHECK(t2.converged);
  REQUIRE(t2.limit.has_value());
  double interior_limit = 0.0;
  for (double m : t2.limit->bin_masses) interior_limit += m;
  CHECK(interior_limit == doctest::Approx(last.total_mass - last.interior_mass)
                              .epsilon(1e-12));
}

TEST_CASE("stage masses for the Martin trace stay near one at every stage") {
  // harmonicity makes eta_U[M](U) = M(x0) = 1 exactly, for every stage
  auto model = stable2();
  auto B = Domain::ball(Pt{}, 1.0, 2);
  Pt x0{};
  Rng rng(308, 0);
  BoundaryBins bins = make_boundary_bins(B, 12, rng);
  Exhaustion ex = default_exhaustion(B, 4);
  TraceOptions to;
  to.seed = 308;
  Pt z = pt(-1.0, 0.0);
  auto mf = [&](const Pt& p) {
    return ball::martin_kernel_boundary(1.0, 2, 1.0, p, x0, z);
  };
  auto tr = boundary_trace(model, B, mf, ex, x0, bins, to);
  for (const auto& st : tr.stages)
    CHECK(st.total_mass == doctest::Approx(1.0).epsilon(0.03));
}
