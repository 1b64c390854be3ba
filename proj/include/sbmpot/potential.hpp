#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sbmpot/geometry.hpp"
#include "sbmpot/kernels.hpp"
#include "sbmpot/simulate.hpp"

namespace sbm {

enum class Method { kMcTimestep, kMcWos, kQuadrature, kHybrid };

inline constexpr unsigned kFlagNearBoundarySingularity = 1u;
inline constexpr unsigned kFlagInfiniteIntegral = 2u;
inline constexpr unsigned kFlagProfileOnly = 4u;

// Universal return type of the stochastic operations: std_error is 0 exactly
// when the value came from quadrature alone.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  long n = 0;
  Method method = Method::kQuadrature;
  unsigned flags = 0;
};

Estimate combine_independent(const Estimate& a, const Estimate& b);

// Non-negative sigma-finite measure on the complement: radial
// piecewise-constant density (about the origin) plus finite atoms.
struct OuterCharge {
  struct RadialDensity {
    std::vector<double> breaks;  // increasing radii, size = values.size()+1
    std::vector<double> values;  // density per radial band
  };
  struct Atom {
    Pt y{};
    double mass = 0.0;
  };

  std::optional<RadialDensity> density;
  std::vector<Atom> atoms;

  bool empty() const { return !density && atoms.empty(); }
  double density_at(const Pt& y, int d) const;
  double support_radius() const;
  // atoms must lie outside the open domain
  void validate_against(const Domain& domain) const;
};

struct EstimatorOptions {
  long n_paths = 10000;
  uint64_t seed = 1;
  int workers = 0;
  ExitMethod method = ExitMethod::kWos;
  double dt = 1e-3;  // timestep method
  WosParams wos;
  uint64_t stream_tag = 3;
};

// G_D f(x): mean of the occupation accumulator over n_paths.
Estimate green_potential(const ProcessModel& model, const Domain& domain,
                         const std::function<double(const Pt&)>& f, const Pt& x,
                         const EstimatorOptions& opts);

// P_D(x,y) = G_D[j(|.-y|)](x); near-boundary y triggers a refined per-step
// quadrature and the NearBoundarySingularity flag.
Estimate poisson_kernel_est(const ProcessModel& model, const Domain& domain,
                            const Pt& x, const Pt& y,
                            const EstimatorOptions& opts);

// P_D lambda(x): exit-sample average of the density part plus atom part via
// poisson_kernel_est on independent streams.
Estimate poisson_integral(const ProcessModel& model, const Domain& domain,
                          const OuterCharge& charge, const Pt& x,
                          const EstimatorOptions& opts);

// Queryable measure equal to (interior values) dx on D and lambda on D^c.
class StarMeasure {
 public:
  StarMeasure(const Domain& domain, const OuterCharge& charge, Mesh mesh,
              std::vector<double> interior_values);
  // mass of the axis box [lo, hi]
  double box_mass(const Pt& lo, const Pt& hi) const;
  double interior_mass() const;

 private:
  Domain domain_;
  OuterCharge charge_;
  Mesh mesh_;
  std::vector<double> values_;
};

StarMeasure extend_star(const Domain& domain, const OuterCharge& charge,
                        const Mesh& interior_mesh,
                        std::vector<double> interior_values);

struct LQuadOptions {
  double truncation_radius = 50.0;
  // sup|u| beyond the truncation radius; 0 when u vanishes there
  double u_sup_beyond = 0.0;
  // when set, u is taken to vanish beyond the truncation radius and the
  // -u(x) * tail-mass term is applied exactly; otherwise the whole far field
  // goes into the reported tail bound
  bool assume_zero_beyond = true;
  int n_angular = 64;
  double rel_tol = 1e-8;
};

struct LApplyResult {
  double value = 0.0;
  double tail_bound = 0.0;  // certified bound on the truncated remainder
};

// Pointwise principal value of the generator: symmetric pairing inside
// B(x, inner_radius), direct quadrature outside up to the truncation radius,
// analytic -u(x) * tail-mass correction beyond it.
LApplyResult operator_L_apply(const ProcessModel& model,
                              const std::function<double(const Pt&)>& u,
                              const Pt& x, double inner_radius,
                              const LQuadOptions& opts = {});

// Smooth compactly supported radial bump exp(1 - 1/(1-t^2)), t = |y-c|/s.
struct Bump {
  Pt center{};
  double radius = 1.0;
  double operator()(const Pt& y, int d) const;
  double c2_norm() const;  // sup of |f|, |grad f|, |D^2 f| for the profile
};

struct WeakPairingOptions {
  int mesh_per_axis = 48;
  double inner_radius_factor = 0.25;  // rho for L(phi) inside the bump
  LQuadOptions lquad;
};

// <u, L phi> over D plus the integral of L phi against the charge on D^c;
// throws GeometryError when supp(phi) is not compactly inside the domain.
double weak_L_pairing(const ProcessModel& model,
                      const std::function<double(const Pt&)>& u,
                      const Domain& domain, const OuterCharge& charge,
                      const Bump& bump, const WeakPairingOptions& opts = {});

// ---- closed-form quadrature oracles for the stable kind on balls ----------

// P_{B(center,r)} lambda(x) by deterministic quadrature (exact oracle).
double ball_poisson_integral(double alpha, int d, const Pt& center, double r,
                             const Pt& x, const OuterCharge& charge);

// Radial tabulation of P_{B(0,r)} lambda for a radial density charge:
// u(t) = (r^2-t^2)^{alpha/2} W(t) with the smooth factor W interpolated.
class BallPoissonRadial {
 public:
  static BallPoissonRadial build(double alpha, int d, double r,
                                 const OuterCharge::RadialDensity& density,
                                 int n_grid = 768);
  double operator()(double t) const;
  double at(const Pt& x) const { return (*this)(norm(x, d_)); }
  double sup() const { return sup_; }
  double radius() const { return r_; }

 private:
  double alpha_ = 1.0, r_ = 1.0;
  int d_ = 2;
  double sup_ = 0.0;
  std::vector<double> w_;  // smooth factor on the uniform t grid
};

// E_x tau_D with Richardson extrapolation over geometric dt levels and the
// observed order; falls back to the finest level when the fit is unstable.
struct ExitTimeFit {
  Estimate extrapolated;
  std::vector<Estimate> levels;
  double observed_order = 0.0;
  bool fit_ok = false;
};
ExitTimeFit expected_exit_time_mc(const ProcessModel& model,
                                  const Domain& domain, const Pt& x,
                                  const std::vector<double>& dt_levels,
                                  long n_paths, uint64_t seed, int workers,
                                  uint64_t stream_tag = 4);

}  // namespace sbm
