#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sbmpot/geometry.hpp"

using namespace sbm;

TEST_CASE("membership follows the open-set convention") {
  auto B = Domain::ball(Pt{}, 1.0, 2);
  CHECK(B.contains(Pt{}));
  CHECK_FALSE(B.contains(pt(1.0, 0.0)));
  CHECK_FALSE(B.contains(pt(1.1, 0.0)));

  auto shell = Domain::subtract(Domain::ball(Pt{}, 2.0, 2),
                                Domain::ball(Pt{}, 1.0, 2));
  CHECK(shell.contains(pt(1.5, 0.0)));
  CHECK_FALSE(shell.contains(pt(1.0, 0.0)));  // closed inner ball removed
  CHECK_FALSE(shell.contains(pt(0.5, 0.0)));
  CHECK_FALSE(shell.contains(pt(2.0, 0.0)));
}

TEST_CASE("distance to the complement") {
  auto B = Domain::ball(Pt{}, 1.0, 2);
  CHECK(B.dist_to_complement(Pt{}) == doctest::Approx(1.0));
  CHECK(B.dist_to_complement(pt(2.0, 0.0)) == 0.0);

  auto two = Domain::unite(Domain::ball(Pt{}, 1.0, 3),
                           Domain::ball(pt(3.0, 0.0, 0.0), 1.0, 3));
  CHECK(two.dist_to_complement(pt(3.0, 0.0, 0.0)) == doctest::Approx(1.0));

  auto box = Domain::box(pt(-1.0, -2.0), pt(1.0, 2.0), 2);
  CHECK(box.dist_to_complement(Pt{}) == doctest::Approx(1.0));
  CHECK(box.signed_dist(pt(2.0, 0.0)) == doctest::Approx(1.0));
  CHECK(box.signed_dist(pt(2.0, 3.0)) ==
        doctest::Approx(std::sqrt(2.0)));  // corner distance

  // intersections/differences compose exactly for primitives
  auto lens = Domain::intersect(Domain::ball(pt(-0.5, 0.0), 1.0, 2),
                                Domain::ball(pt(0.5, 0.0), 1.0, 2));
  CHECK(lens.dist_to_complement(Pt{}) == doctest::Approx(0.5));
}

TEST_CASE("the inscribed ball stays inside the domain") {
  Rng rng(11, 0);
  auto dom = Domain::subtract(
      Domain::unite(Domain::ball(Pt{}, 2.0, 2),
                    Domain::ball(pt(2.0, 0.5), 1.2, 2)),
      Domain::ball(pt(0.7, 0.0), 0.4, 2));
  for (int i = 0; i < 500; ++i) {
    Pt p = pt(6.0 * rng.uniform() - 3.0, 6.0 * rng.uniform() - 3.0);
    if (!dom.contains(p)) continue;
    double r = dom.dist_to_complement(p);
    CHECK(r > 0.0);
    // rejection-sample the inscribed ball
    for (int k = 0; k < 50; ++k) {
      Pt q = add(p, scale(rng.unit_sphere(2), r * rng.uniform() * 0.999));
      CHECK(dom.contains(q));
    }
  }
}

TEST_CASE("dist_to_complement positive iff inside") {
  Rng rng(13, 1);
  auto dom = Domain::subtract(Domain::box(pt(-2, -2), pt(2, 2), 2),
                              Domain::ball(pt(0.5, 0.5), 0.7, 2));
  for (int i = 0; i < 5000; ++i) {
    Pt p = pt(5.0 * (2 * rng.uniform() - 1), 5.0 * (2 * rng.uniform() - 1));
    CHECK((dom.dist_to_complement(p) > 0.0) == dom.contains(p));
  }
}

TEST_CASE("exhaustion stages nest with verified margins") {
  auto B = Domain::ball(Pt{}, 1.0, 2);
  auto ex = default_exhaustion(B, 3);
  REQUIRE(ex.stages.size() == 3);
  Rng rng(17, 0);
  for (size_t k = 0; k + 1 < ex.stages.size(); ++k) {
    // sampled boundary of stage k lies inside stage k+1 with margin
    auto bpts = boundary_sample(ex.stages[k], 200, rng);
    double margin = ex.margins[k] - ex.margins[k + 1];
    for (const auto& p : bpts) {
      CHECK(ex.stages[k + 1].contains(p));
      CHECK(ex.stages[k + 1].dist_to_complement(p) > 0.25 * margin);
    }
  }
  // two disjoint balls erode into two shrunk balls
  auto two = Domain::unite(Domain::ball(Pt{}, 1.0, 2),
                           Domain::ball(pt(4.0, 0.0), 1.0, 2));
  auto ex2 = default_exhaustion(two, 2);
  CHECK(ex2.stages[0].contains(pt(4.0, 0.0)));
  CHECK(ex2.stages[0].contains(Pt{}));
  CHECK_FALSE(ex2.stages[0].contains(pt(0.99, 0.0)));

  // over-eroding a small domain must fail loudly
  CHECK_THROWS_AS(default_exhaustion(Domain::ball(Pt{}, 0.05, 2), 2, 0.2, 0.5),
                  GeometryError);
}

TEST_CASE("boundary sampling statistics") {
  auto B = Domain::ball(Pt{}, 1.0, 2);
  Rng rng(19, 0);
  int n = 4000;
  auto pts = boundary_sample(B, n, rng);
  double mean_r = 0.0;
  Pt mean_p{};
  for (const auto& p : pts) {
    CHECK_FALSE(B.contains(p));
    CHECK(std::abs(B.signed_dist(p)) <= 1e-3);
    mean_r += norm(p, 2);
    mean_p = add(mean_p, p);
  }
  mean_r /= n;
  CHECK(mean_r == doctest::Approx(1.0).epsilon(3.0 / std::sqrt(n)));
  for (int i = 0; i < 2; ++i)
    CHECK(std::abs(mean_p[i] / n) < 4.0 / std::sqrt(n));
}

TEST_CASE("boundary bins cover the circle roughly evenly") {
  auto B = Domain::ball(Pt{}, 1.0, 2);
  Rng rng(23, 0);
  auto bins = make_boundary_bins(B, 16, rng);
  CHECK(bins.centers.size() == 16);
  for (const auto& c : bins.centers)
    CHECK(std::abs(norm(c, 2) - 1.0) < 2e-3);
  // bin counts of fresh samples are roughly even
  auto pts = boundary_sample(B, 3200, rng);
  std::vector<int> counts(16, 0);
  for (const auto& p : pts) counts[static_cast<size_t>(bins.find(p))]++;
  for (int c : counts) CHECK(c > 60);  // 200 expected per bin
}

TEST_CASE("literal parser round trip and diagnostics") {
  auto dom = Domain::parse("diff(ball(0 0; 2), ball(0 0; 1))", 2);
  CHECK(dom.contains(pt(1.5, 0.0)));
  CHECK_FALSE(dom.contains(pt(0.5, 0.0)));
  CHECK(dom.bounded());
  CHECK(dom.bounding_radius() == doctest::Approx(2.0));

  auto rt = Domain::parse(dom.literal(), 2);
  CHECK(rt.contains(pt(1.5, 0.0)));
  CHECK_FALSE(rt.contains(pt(0.5, 0.0)));

  auto ext = Domain::parse("diff(all(), ball(0 0 0; 1))", 3);
  CHECK_FALSE(ext.bounded());
  CHECK(ext.contains(pt(2.0, 0.0, 0.0)));
  CHECK(ext.core_radius() == doctest::Approx(1.0));

  CHECK_THROWS_WITH_AS(Domain::parse("ball(0 0; -1)", 2),
                       doctest::Contains("position"), ConfigError);
  CHECK_THROWS_WITH_AS(Domain::parse("blob(0 0; 1)", 2),
                       doctest::Contains("position"), ConfigError);
  CHECK_THROWS_AS(Domain::parse("ball(0 0 0; 1)", 2), ConfigError);
  CHECK_THROWS_AS(Domain::parse("ball(0 0; 1) trailing", 2), ConfigError);
}

TEST_CASE("halton cloud is deterministic and inside") {
  auto dom = Domain::ball(pt(0.3, 0.0), 0.5, 2);
  auto a = halton_cloud(dom, 100, 0.8);
  auto b = halton_cloud(dom, 100, 0.8);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i][0] == b[i][0]);
    CHECK(dom.contains(a[i]));
    CHECK(norm(a[i], 2) <= 0.8);
  }
}

TEST_CASE("deep point of a ball is near its center") {
  auto dom = Domain::ball(pt(0.4, -0.2), 0.7, 2);
  Pt dp = deep_point(dom);
  CHECK(dist(dp, pt(0.4, -0.2), 2) < 0.08);
}
