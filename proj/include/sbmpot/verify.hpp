#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sbmpot/martin.hpp"
#include "sbmpot/potential.hpp"

namespace sbm {

struct VerifyOptions {
  uint64_t seed = 20240801;
  int workers = 0;
  double alpha = 1.0;
  int d = 2;
  long n_paths = 4000;   // per Monte Carlo evaluation inside the suites
  double scale = 1.0;    // multiplies every path budget
};

// ---- mean value -----------------------------------------------------------

// residual f(x) - [P_U charge part + exit average of f over D \ U], with U a
// ball compactly inside D; the charge part is quadrature, the exit part Monte
// Carlo via exact ball exits.
Estimate check_mean_value(const ProcessModel& model, const Domain& domain,
                          const std::function<double(const Pt&)>& f,
                          const OuterCharge& charge, const Pt& u_center,
                          double u_radius, const Pt& x, long n_paths,
                          uint64_t seed, int workers, uint64_t stream_tag = 7);

struct MeanValueCase {
  std::string label;
  Pt x{};
  Pt u_center{};
  double u_radius = 0.0;
  double residual = 0.0;
  double combined_se = 0.0;
  bool pass = false;
};

struct MeanValueReport {
  std::vector<MeanValueCase> cases;
  bool pass = false;
};

// Three function families (Poisson integral, Martin kernel, constant with
// Lebesgue charge) at five sampled (U, x) each, on the unit ball.
MeanValueReport mean_value_suite(const VerifyOptions& opts);

// ---- boundary Harnack -----------------------------------------------------

struct BhpRow {
  int domain_idx = 0;
  double cross_ratio = 0.0;
  double std_error = 0.0;
};

struct BhpReport {
  std::vector<BhpRow> rows;      // first n_config rows
  double max_ratio = 0.0;        // over the base set
  double max_ratio_doubled = 0.0;
  double doubling_ratio = 0.0;   // max(doubled)/max(base)
  bool all_finite = false;
  bool pass = false;
};

BhpReport check_bhp(const VerifyOptions& opts, double R = 0.5,
                    int n_config = 50);

// ---- relative oscillation -------------------------------------------------

struct SweepConfig {
  int domain_idx = 0;
  int pair_idx = 0;
  std::vector<double> ro;          // per delta; 1 on empty clouds
  std::vector<double> resolution;  // 2-SE resolution per delta
};

struct ROReport {
  std::vector<double> delta_grid;  // decreasing
  std::vector<double> sup_ro;      // per delta over configurations
  std::vector<int> argmax_config;
  std::vector<double> resolution;
  double eta_target = 0.0;
  bool uniform_pass = false;
  int passing_index = -1;
  std::vector<SweepConfig> configs;
};

// RO of quotients of Poisson integrals over D ∩ B_delta, 3 domains x 3
// charge pairs inside B_R with charges on B_R^c, nested point clouds.
ROReport oscillation_sweep(const VerifyOptions& opts, double R = 0.5,
                           double eta = 0.25, int n_deltas = 6,
                           int cloud_size = 256);

// RO in the second argument of the Martin kernel (Green ratios) over
// D ∩ B_r for a family of ball domains with 0 on or near the boundary.
ROReport martin_oscillation_sweep(const VerifyOptions& opts, double rho = 0.5,
                                  double eta = 0.2, int n_radii = 6,
                                  int cloud_size = 256);

// ---- representation round trip ---------------------------------------------

struct RoundTripReport {
  double input_mass = 0.0;
  Estimate recovered_mass;       // f(x0) - MC Poisson integral at x0
  Estimate normalization;        // Martin integral of mu at x0
  struct Residual {
    Pt x{};
    double residual = 0.0;
    double combined_se = 0.0;
  };
  std::vector<Residual> pointwise;
  double trace_total = 0.0;
  double trace_share_at_z = 0.0;  // fraction of the last-stage mass in z's bin
  std::vector<double> trace_stage_masses;
  bool mass_pass = false;
  bool trace_pass = false;
  bool mean_value_pass = false;
  bool pass = false;
};

// Synthesizes f = P_D lambda + mass * M_D(., z) on the unit ball and runs the
// three recovery checks (mass, trace, mean value).
RoundTripReport representation_roundtrip(const VerifyOptions& opts,
                                         double atom_mass = 0.5);

// ---- trace vanishing --------------------------------------------------------

struct TraceVanishingReport {
  std::vector<double> masses_constant;  // stage masses for u = 1
  std::vector<double> masses_poisson;   // stage masses for u = P_D lambda
  bool pass = false;                    // monotone and < 5% of first by stage 5
};

TraceVanishingReport trace_vanishing_suite(const VerifyOptions& opts);

}  // namespace sbm
