#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sbmpot/geometry.hpp"
#include "sbmpot/kernels.hpp"
#include "sbmpot/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sbm {

struct Functional {
  std::string id;
  std::function<double(const Pt&)> f;
};

struct ExitRecord {
  Pt exit_position{};
  double exit_time = 0.0;
  bool time_tracked = false;
  std::vector<double> accumulators;  // aligned with the functional list
  long steps = 0;
  bool escaped_to_infinity = false;
};

// One draw of S_t for the one-sided stable subordinator with Laplace exponent
// lambda^index (index in (0,1)), via the Kanter transform.
double stable_subordinator_increment(double index, double t, Rng& rng);

// S_dt for any catalog kind (exponential tilting loop for the relativistic
// kind; throws SamplingError when the tilting rejection stalls).
double subordinator_increment(const BernsteinSpec& spec, double dt, Rng& rng);

// X_{t+dt} - X_t = sqrt(2 S_dt) N(0, I_d).
Pt sbm_increment(const ProcessModel& model, double dt, Rng& rng);

struct TimestepParams {
  double dt = 1e-3;
  long max_steps = 100000000;
  double escape_radius = std::numeric_limits<double>::infinity();
};

ExitRecord exit_sample_timestep(const ProcessModel& model, const Domain& domain,
                                const Pt& x, const TimestepParams& params,
                                Rng& rng,
                                const std::vector<Functional>& functionals = {});

struct WosParams {
  long step_budget = 100000;
  int quad_radial = 12;   // per piece; the rule has 2x this many rings
  int quad_angular = 16;  // directions per ring (d=2); 4x8 product for d=3
};

// Visits the nodes of the per-step ball-Green quadrature: weight w_i with
// sum_i w_i f(p_i) estimating the integral of G_{B(center,r)}(center, .) f
// over the ball. Directions carry a random rotation so the angular average is
// unbiased for any f.
void for_each_green_node(int d, double alpha, const Pt& center, double radius,
                         const WosParams& params, Rng& rng,
                         const std::function<void(const Pt&, double)>& visit);

// Exact exit sampling for the stable kind by iterated maximal-ball exits.
// Occupation functionals are accumulated by per-step ball-Green quadrature.
// step_observer (optional) sees every (ball center, ball radius) pair.
ExitRecord exit_sample_wos(
    const ProcessModel& model, const Domain& domain, const Pt& x,
    const WosParams& params, Rng& rng,
    const std::vector<Functional>& functionals = {},
    const std::function<void(const Pt&, double, Rng&)>& step_observer = {});

// Rejection sampler for the radial exit factor (validation fallback for the
// tabulated inverse CDF): returns Z with density prop. to z^{-a/2} (1+z)^{-1}.
double sample_exit_radius_rejection(double alpha, Rng& rng);

// One exact draw from the exit law of B(center, radius) started at the center
// (stable kind).
Pt sample_ball_exit(double alpha, int d, const Pt& center, double radius,
                    Rng& rng);

// --- batch drivers -----------------------------------------------------

// Deterministic: records land in path-index order regardless of scheduling;
// every path derives its own stream, so results are worker-count independent.
template <class MakeRecord>
std::vector<ExitRecord> run_paths(long n, int workers, MakeRecord&& make) {
  std::vector<ExitRecord> out(static_cast<size_t>(n));
  std::exception_ptr err = nullptr;
#ifdef _OPENMP
  int nt = workers > 0 ? workers : omp_get_max_threads();
#else
  int nt = 1;
  (void)workers;
#endif
#pragma omp parallel for schedule(dynamic, 16) num_threads(nt)
  for (long i = 0; i < n; ++i) {
    if (err) continue;
    try {
      out[static_cast<size_t>(i)] = make(i);
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

// Serial reference for the driver above; kept for tests and benchmarks.
template <class MakeRecord>
std::vector<ExitRecord> run_paths_serial(long n, MakeRecord&& make) {
  std::vector<ExitRecord> out(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i) out[static_cast<size_t>(i)] = make(i);
  return out;
}

enum class ExitMethod { kWos, kTimestep };

struct EmpiricalMeasure {
  std::vector<Pt> points;   // exit positions of non-escaped paths
  double escaped_fraction = 0.0;
  long n = 0;
};

struct HarmonicMeasureParams {
  ExitMethod method = ExitMethod::kWos;
  double dt = 1e-3;              // timestep method
  double escape_radius = 0.0;    // 0: auto = 100 x complement core radius
  long max_steps = 100000000;
  WosParams wos;
  int workers = 0;
  uint64_t stream_tag = 1;
};

EmpiricalMeasure harmonic_measure(const ProcessModel& model,
                                  const Domain& domain, const Pt& x,
                                  long n_paths, uint64_t seed,
                                  const HarmonicMeasureParams& params);

// Per-cell estimates of the occupation density G_U(x0, .) on the mesh via
// WoS quadrature binning (stable kind only).
struct CellEstimates {
  std::vector<double> value;
  std::vector<double> std_error;
  long n = 0;
};
CellEstimates occupation_histogram(const ProcessModel& model, const Domain& U,
                                   const Pt& x0, const Mesh& mesh, long n_paths,
                                   uint64_t seed, const WosParams& params,
                                   int workers, uint64_t stream_tag = 2);

// Pointwise unbiased estimate of G_D(x, v): accumulates the closed-form ball
// Green value whenever a WoS ball contains v. Paired numerator/denominator
// estimates for Martin ratios reuse the stream id.
double wos_green_pointwise_onepath(const ProcessModel& model,
                                   const Domain& domain, const Pt& x,
                                   const Pt& v, const WosParams& params,
                                   Rng& rng);

}  // namespace sbm
