#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sbmpot/potential.hpp"
#include "sbmpot/simulate.hpp"
#include "test_util.hpp"

using namespace sbm;

TEST_CASE("one-sided stable draws match the Laplace transform") {
  Rng rng(101, 0);
  const long n = 400000;
  for (double rho : {0.5, 0.75}) {
    for (double lambda : {0.5, 1.0, 2.0}) {
      std::vector<double> v(n);
      for (long i = 0; i < n; ++i) {
        double s = stable_subordinator_increment(rho, 1.0, rng);
        CHECK(s > 0.0);
        v[static_cast<size_t>(i)] = std::exp(-lambda * s);
      }
      double expect = std::exp(-std::pow(lambda, rho));
      CHECK(std::abs(mean_of(v) - expect) < 4.0 * stderr_of(v));
    }
  }
}

TEST_CASE("subordinator self-similarity in distribution") {
  Rng rng(102, 0);
  const long n = 50000;
  double rho = 0.5, t = 0.3;
  std::vector<double> a(n), b(n);
  for (long i = 0; i < n; ++i) {
    a[static_cast<size_t>(i)] = stable_subordinator_increment(rho, t, rng);
    b[static_cast<size_t>(i)] =
        std::pow(t, 1.0 / rho) * stable_subordinator_increment(rho, 1.0, rng);
  }
  CHECK(ks_statistic(a, b) < ks_critical_1pct(n, n));
}

TEST_CASE("sbm increments match the characteristic function") {
  const long n = 400000;
  double dt = 0.25;
  for (const auto& spec :
       {BernsteinSpec::stable(1.0), BernsteinSpec::relativistic(1.0, 1.0),
        BernsteinSpec::stable_sum({{0.7, 0.8}, {0.3, 1.4}})}) {
    auto model = make_model(spec, 3);
    Rng rng(103, 0);
    std::vector<Pt> xs(n);
    for (long i = 0; i < n; ++i)
      xs[static_cast<size_t>(i)] = sbm_increment(model, dt, rng);
    for (const Pt& xi : {pt(0.5, 0.0, 0.0), pt(0.0, 1.0, 0.5)}) {
      std::vector<double> v(n);
      for (long i = 0; i < n; ++i)
        v[static_cast<size_t>(i)] = std::cos(dot(xi, xs[static_cast<size_t>(i)], 3));
      double expect = std::exp(-dt * char_exponent(spec, xi, 3));
      CHECK(std::abs(mean_of(v) - expect) < 4.0 * stderr_of(v));
    }
    // isotropy
    for (int c = 0; c < 3; ++c) {
      std::vector<double> v(n);
      for (long i = 0; i < n; ++i) v[static_cast<size_t>(i)] = xs[static_cast<size_t>(i)][c];
      CHECK(std::abs(mean_of(v)) < 4.0 * stderr_of(v));
    }
  }
}

TEST_CASE("stable increment self-similarity") {
  auto model = make_model(BernsteinSpec::stable(1.0), 2);
  Rng rng(104, 0);
  const long n = 50000;
  double dt = 0.1;
  std::vector<double> a(n), b(n);
  for (long i = 0; i < n; ++i) {
    a[static_cast<size_t>(i)] = norm(sbm_increment(model, dt, rng), 2);
    b[static_cast<size_t>(i)] = dt * norm(sbm_increment(model, 1.0, rng), 2);
  }
  CHECK(ks_statistic(a, b) < ks_critical_1pct(n, n));
}

TEST_CASE("time-stepped exit sampling") {
  auto model = make_model(BernsteinSpec::stable(1.0), 2);
  auto B = Domain::ball(Pt{}, 1.0, 2);
  std::vector<Functional> ones{{"one", [](const Pt&) { return 1.0; }}};
  Rng rng(105, 0);
  TimestepParams tp;
  tp.dt = 1e-2;
  for (int i = 0; i < 200; ++i) {
    auto rec = exit_sample_timestep(model, B, Pt{}, tp, rng, ones);
    CHECK_FALSE(B.contains(rec.exit_position));
    CHECK(rec.accumulators[0] == doctest::Approx(rec.exit_time).epsilon(1e-12));
    CHECK(rec.time_tracked);
  }
}

TEST_CASE("Richardson-extrapolated exit time hits the closed form") {
  auto model = make_model(BernsteinSpec::stable(1.0), 2);
  auto B = Domain::ball(Pt{}, 1.0, 2);
  auto fit = expected_exit_time_mc(model, B, Pt{}, {1.6e-2, 4e-3, 1e-3}, 20000,
                                   106, 0);
  double exact = ball::expected_exit_time(1.0, 2, 1.0, Pt{});
  CHECK(std::abs(fit.extrapolated.value - exact) <
        4.0 * fit.extrapolated.std_error);
}

TEST_CASE("one-step walk-on-spheres exit law is exact") {
  auto model = make_model(BernsteinSpec::stable(1.0), 2);
  auto B = Domain::ball(Pt{}, 1.0, 2);
  const long n = 100000;
  auto records = run_paths(n, 0, [&](long i) {
    Rng rng(107, stream_id(1, static_cast<uint64_t>(i)));
    return exit_sample_wos(model, B, Pt{}, WosParams{}, rng);
  });
  std::vector<double> radii(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    CHECK_FALSE(B.contains(records[i].exit_position));
    CHECK(records[i].steps == 1);  // first ball is maximal: exits immediately
    radii[i] = norm(records[i].exit_position, 2);
  }
  // exact radial cdf for alpha = 1: (2/pi) arctan(sqrt(s^2-1))
  double d = ks_statistic_one_sample(radii, [](double s) {
    return s <= 1.0 ? 0.0 : 2.0 / M_PI * std::atan(std::sqrt(s * s - 1.0));
  });
  CHECK(d < 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("rejection fallback agrees with the tabulated inverse cdf") {
  Rng rng(108, 0);
  const long n = 50000;
  double alpha = 0.7;
  std::vector<double> a(n), b(n);
  for (long i = 0; i < n; ++i) {
    a[static_cast<size_t>(i)] = sample_exit_radius_rejection(alpha, rng);
    b[static_cast<size_t>(i)] = ball::exit_radius_quantile(2, alpha, rng.uniform());
  }
  CHECK(ks_statistic(a, b) < ks_critical_1pct(n, n));
}

TEST_CASE("WoS and time stepping draw the same exit law") {
  auto model = make_model(BernsteinSpec::stable(1.0), 2);
  auto B = Domain::ball(Pt{}, 1.0, 2);
  Pt x = pt(0.3, 0.0);
  const long n = 20000;
  auto wos = run_paths(n, 0, [&](long i) {
    Rng rng(109, stream_id(1, static_cast<uint64_t>(i)));
    return exit_sample_wos(model, B, x, WosParams{}, rng);
  });
  auto ts = run_paths(n, 0, [&](long i) {
    Rng rng(109, stream_id(2, static_cast<uint64_t>(i)));
    TimestepParams tp;
    tp.dt = 2e-4;
    return exit_sample_timestep(model, B, x, tp, rng);
  });
  std::vector<double> a(wos.size()), b(ts.size());
  for (size_t i = 0; i < wos.size(); ++i) a[i] = norm(wos[i].exit_position, 2);
  for (size_t i = 0; i < ts.size(); ++i) b[i] = norm(ts[i].exit_position, 2);
  CHECK(ks_statistic(a, b) < ks_critical_1pct(n, n));
}

TEST_CASE("WoS occupation accumulator reproduces the expected exit time") {
  auto model = make_model(BernsteinSpec::stable(1.0), 2);
  auto B = Domain::ball(Pt{}, 1.0, 2);
  Pt x = pt(0.4, 0.1);
  std::vector<Functional> ones{{"one", [](const Pt&) { return 1.0; }}};
  const long n = 20000;
  auto records = run_paths(n, 0, [&](long i) {
    Rng rng(110, stream_id(1, static_cast<uint64_t>(i)));
    return exit_sample_wos(model, B, x, WosParams{}, rng, ones);
  });
  std::vector<double> acc(records.size());
  for (size_t i = 0; i < records.size(); ++i) acc[i] = records[i].accumulators[0];
  double exact = ball::expected_exit_time(1.0, 2, 1.0, x);
  CHECK(std::abs(mean_of(acc) - exact) < 4.0 * stderr_of(acc));
}

TEST_CASE("strong Markov consistency of exit laws") {
  // exit through D directly vs exit U then continue from landings inside D
  auto model = make_model(BernsteinSpec::stable(1.0), 2);
  auto D = Domain::ball(Pt{}, 1.0, 2);
  auto U = Domain::ball(Pt{}, 0.5, 2);
  Pt x = pt(0.1, 0.0);
  const long n = 30000;
  auto direct = run_paths(n, 0, [&](long i) {
    Rng rng(111, stream_id(1, static_cast<uint64_t>(i)));
    return exit_sample_wos(model, D, x, WosParams{}, rng);
  });
  auto staged = run_paths(n, 0, [&](long i) {
    Rng rng(111, stream_id(2, static_cast<uint64_t>(i)));
    auto rec = exit_sample_wos(model, U, x, WosParams{}, rng);
    while (D.contains(rec.exit_position))
      rec = exit_sample_wos(model, D, rec.exit_position, WosParams{}, rng);
    return rec;
  });
  // coarse radial bins; each within 4 combined standard errors
  std::vector<double> edges{1.0, 1.1, 1.25, 1.5, 2.0, 3.0, 6.0};
  auto bin_of = [&](double r) {
    int b = 0;
    while (b + 1 < static_cast<int>(edges.size()) && r >= edges[static_cast<size_t>(b) + 1]) ++b;
    return b;
  };
  std::vector<double> p1(edges.size(), 0.0), p2(edges.size(), 0.0);
  for (const auto& r : direct) p1[static_cast<size_t>(bin_of(norm(r.exit_position, 2)))] += 1.0 / n;
  for (const auto& r : staged) p2[static_cast<size_t>(bin_of(norm(r.exit_position, 2)))] += 1.0 / n;
  for (size_t b = 0; b < edges.size(); ++b) {
    double p = 0.5 * (p1[b] + p2[b]);
    double se = std::sqrt(std::max(p * (1.0 - p), 1e-8) * 2.0 / n);
    CHECK(std::abs(p1[b] - p2[b]) <= 4.0 * se);
  }
}

TEST_CASE("harmonic measure: mass, support, and the ball Poisson density") {
  auto model = make_model(BernsteinSpec::stable(1.0), 2);
  auto B = Domain::ball(Pt{}, 1.0, 2);
  HarmonicMeasureParams hp;
  const long n = 100000;
  auto em = harmonic_measure(model, B, Pt{}, n, 112, hp);
  CHECK(em.escaped_fraction == 0.0);
  CHECK(static_cast<long>(em.points.size()) == n);
  for (size_t i = 0; i < 100; ++i) CHECK_FALSE(B.contains(em.points[i]));

  // chi^2 on 20 equal-probability radial bins at the 1% level
  const int nb = 20;
  std::vector<double> qedges(nb + 1);
  for (int b = 0; b <= nb; ++b) {
    double u = std::max(1e-9, std::min(1.0 - 1e-9, static_cast<double>(b) / nb));
    qedges[static_cast<size_t>(b)] =
        std::sqrt(1.0 + ball::exit_radius_quantile(2, 1.0, u));
  }
  std::vector<long> counts(nb, 0);
  for (const auto& p : em.points) {
    double r = norm(p, 2);
    int b = static_cast<int>(std::upper_bound(qedges.begin(), qedges.end(), r) -
                             qedges.begin()) - 1;
    b = std::clamp(b, 0, nb - 1);
    counts[static_cast<size_t>(b)]++;
  }
  double chi2 = 0.0;
  double expect = static_cast<double>(n) / nb;
  for (long c : counts) chi2 += (c - expect) * (c - expect) / expect;
  CHECK(chi2 < 36.191);  // chi^2_{0.99}, 19 dof
}

TEST_CASE("batch drivers are deterministic and worker-independent") {
  auto model = make_model(BernsteinSpec::stable(1.0), 2);
  auto B = Domain::ball(Pt{}, 1.0, 2);
  auto make = [&](long i) {
    Rng rng(113, stream_id(1, static_cast<uint64_t>(i)));
    return exit_sample_wos(model, B, pt(0.2, 0.1), WosParams{}, rng);
  };
  auto a = run_paths(500, 4, make);
  auto b = run_paths(500, 1, make);
  auto c = run_paths_serial(500, make);
  REQUIRE(a.size() == b.size());
  REQUIRE(a.size() == c.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].exit_position[0] == b[i].exit_position[0]);
    CHECK(a[i].exit_position[1] == c[i].exit_position[1]);
    CHECK(a[i].steps == c[i].steps);
  }
}

TEST_CASE("occupation histogram integrates to the exit time") {
  auto model = make_model(BernsteinSpec::stable(1.0), 2);
  auto U = Domain::ball(Pt{}, 1.0, 2);
  Mesh mesh = grid_mesh(U, 24);
  auto occ = occupation_histogram(model, U, Pt{}, mesh, 4000, 114, WosParams{}, 0);
  double total = 0.0;
  for (size_t c = 0; c < occ.value.size(); ++c) total += occ.value[c] * mesh.cell_volume;
  // cells near the boundary are clipped by the grid: generous 5% band
  CHECK(total == doctest::Approx(ball::expected_exit_time(1.0, 2, 1.0, Pt{}))
                     .epsilon(0.05));
  // density near the center matches the closed form within noise
  Pt probe = pt(0.31, 0.0);
  int best = 0;
  double bd = 1e9;
  for (size_t c = 0; c < mesh.centers.size(); ++c) {
    double dd = dist(mesh.centers[c], probe, 2);
    if (dd < bd) {
      bd = dd;
      best = static_cast<int>(c);
    }
  }
  double g = ball::green_function(1.0, 2, 1.0, Pt{}, mesh.centers[static_cast<size_t>(best)]);
  CHECK(std::abs(occ.value[static_cast<size_t>(best)] - g) <
        std::max(5.0 * occ.std_error[static_cast<size_t>(best)], 0.05 * g));
}

TEST_CASE("relativistic kind: tilting produces the right exit scale") {
  auto model = make_model(BernsteinSpec::relativistic(1.0, 1.0), 3);
  auto B = Domain::ball(Pt{}, 1.0, 3);
  Rng rng(115, 0);
  TimestepParams tp;
  tp.dt = 1e-2;
  double mean_t = 0.0;
  const int n = 400;
  for (int i = 0; i < n; ++i) {
    auto rec = exit_sample_timestep(model, B, Pt{}, tp, rng);
    CHECK_FALSE(B.contains(rec.exit_position));
    mean_t += rec.exit_time / n;
  }
  CHECK(mean_t > 0.05);
  CHECK(mean_t < 5.0);
}
