#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sbmpot/verify.hpp"

using namespace sbm;

namespace {
VerifyOptions small_opts() {
  VerifyOptions vo;
  vo.seed = 20240801;
  vo.scale = 0.5;
  return vo;
}
}  // namespace

TEST_CASE("mean value suite passes at reduced scale") {
  auto rep = mean_value_suite(small_opts());
  CHECK(rep.cases.size() == 15);
  for (const auto& c : rep.cases) {
    INFO(c.label, " at x=(", c.x[0], ",", c.x[1], ") residual ", c.residual,
         " se ", c.combined_se);
    CHECK(c.pass);
  }
  CHECK(rep.pass);
}

TEST_CASE("boundary Harnack cross-ratios are finite and stable") {
  auto rep = check_bhp(small_opts(), 0.5, 20);
  CHECK(rep.rows.size() == 20);
  CHECK(rep.all_finite);
  CHECK(rep.max_ratio > 0.0);
  CHECK(rep.max_ratio < 1e3);
  CHECK(rep.doubling_ratio >= 1.0);
  // quadrature rows carry no error bars
  bool has_exact = false;
  for (const auto& row : rep.rows)
    if (row.std_error == 0.0) has_exact = true;
  CHECK(has_exact);
}

TEST_CASE("oscillation sweep invariants") {
  auto rep = oscillation_sweep(small_opts(), 0.5, 0.25, 5, 128);
  REQUIRE(rep.configs.size() == 9);
  for (const auto& cfg : rep.configs) {
    for (size_t j = 0; j < cfg.ro.size(); ++j) {
      CHECK(cfg.ro[j] >= 1.0);  // sup/inf of the same cloud
      if (j > 0)
        CHECK(cfg.ro[j] <=
              cfg.ro[j - 1] + cfg.resolution[j] + cfg.resolution[j - 1] + 1e-9);
    }
    // proportional charge pair: the ratio is constant, RO exactly 1
    if (cfg.pair_idx == 2 && cfg.domain_idx != 1)
      for (double ro : cfg.ro) CHECK(ro == doctest::Approx(1.0).epsilon(1e-9));
  }
  // the domain away from the origin eventually has empty clouds -> RO = 1
  bool saw_empty = false;
  for (const auto& cfg : rep.configs)
    if (cfg.domain_idx == 2 && cfg.ro.back() == 1.0) saw_empty = true;
  CHECK(saw_empty);
  CHECK(rep.uniform_pass);
  CHECK(rep.passing_index >= 0);
}

TEST_CASE("martin oscillation sweep tames the Green ratio") {
  auto rep = martin_oscillation_sweep(small_opts(), 0.5, 0.2, 5, 192);
  CHECK(rep.configs.size() >= 4);
  for (const auto& cfg : rep.configs)
    for (size_t j = 1; j < cfg.ro.size(); ++j)
      CHECK(cfg.ro[j] <= cfg.ro[j - 1] + 1e-12);
  CHECK(rep.uniform_pass);
  // the far-away family member contributes the empty-set convention rows
  bool saw_unit = false;
  for (const auto& cfg : rep.configs) {
    bool all_one = true;
    for (double ro : cfg.ro) all_one = all_one && ro == 1.0;
    saw_unit = saw_unit || all_one;
  }
  CHECK(saw_unit);
}

TEST_CASE("representation round trip") {
  auto rep = representation_roundtrip(small_opts(), 0.5);
  INFO("recovered ", rep.recovered_mass.value, " +- ",
       rep.recovered_mass.std_error, " trace_total ", rep.trace_total,
       " share ", rep.trace_share_at_z);
  CHECK(rep.mass_pass);
  CHECK(rep.normalization.value == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(rep.trace_pass);
  CHECK(rep.mean_value_pass);
  CHECK(rep.pass);
  // linearity: doubling the atom mass doubles the recovered mass
  auto rep2 = representation_roundtrip(small_opts(), 1.0);
  CHECK(std::abs(rep2.recovered_mass.value - 2.0 * rep.recovered_mass.value) <
        4.0 * std::hypot(rep2.recovered_mass.std_error,
                         2.0 * rep.recovered_mass.std_error) + 1e-3);
}

TEST_CASE("trace vanishing for bounded functions and Poisson integrals") {
  auto rep = trace_vanishing_suite(small_opts());
  REQUIRE(rep.masses_constant.size() == 5);
  REQUIRE(rep.masses_poisson.size() == 5);
  for (size_t i = 1; i < 5; ++i) {
    CHECK(rep.masses_constant[i] < rep.masses_constant[i - 1]);
    CHECK(rep.masses_poisson[i] < rep.masses_poisson[i - 1]);
  }
  CHECK(rep.masses_constant[4] < 0.05 * rep.masses_constant[0]);
  CHECK(rep.masses_poisson[4] < 0.05 * rep.masses_poisson[0]);
  CHECK(rep.pass);
}
