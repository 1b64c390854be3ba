#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sbmpot/bernstein.hpp"
#include "sbmpot/common.hpp"

namespace sbm {

struct ProcessModel {
  int d = 2;
  BernsteinSpec spec = BernsteinSpec::stable(1.0);
  bool transient = true;
};

// Validates d and refuses recurrent models.
ProcessModel make_model(const BernsteinSpec& spec, int d);

// Jumping kernel j(r) from the subordination integral over the Brownian heat
// kernel. The stable kind short-circuits to its power law with the constant
// fixed once by quadrature at r = 1.
double jumping_kernel(const ProcessModel& model, double r);

// Quadrature-derived constant of the stable power law j(r) = c(d,alpha) r^{-d-alpha}.
double stable_jump_constant(int d, double alpha);

// Mass of the jump measure outside B(0,R): integral of j(|h|) over |h| > R.
double jump_tail_mass(const ProcessModel& model, double R);

// Cached evaluation of j on a log-log grid; strictly decreasing values are
// enforced at build time. Queries outside the grid extrapolate with the edge
// slopes.
class KernelTable {
 public:
  KernelTable() = default;
  static KernelTable build(const ProcessModel& model, double rmin, double rmax,
                           int n);
  double operator()(double r) const;
  const std::vector<double>& radii() const { return radii_; }
  const std::vector<double>& values() const { return values_; }
  const std::string& tail_rule() const { return tail_rule_; }
  // Largest relative error on n held-out radii against direct quadrature.
  double validate(const ProcessModel& model, int n_heldout) const;
  void dump_csv(std::ostream& os) const;

 private:
  std::vector<double> radii_, values_;      // originals
  std::vector<double> log_r_, log_v_;       // interpolation data
  std::string tail_rule_;
};

// Table delta -> sup_{r in (r0, r_max]} j(r)/j(r+delta), sup over a log grid.
std::vector<std::pair<double, double>> kernel_ratio_audit(
    const ProcessModel& model, double r0, const std::vector<double>& delta_grid,
    double r_max = 50.0, int n_grid = 400);

enum class ComparabilityDirection { kInner, kOuter };

struct ComparabilityResult {
  bool found = false;
  double p = 0.0;
  // (|y| or |z| sample, worst ratio observed there) for the returned p
  std::vector<std::pair<double, double>> certificate;
};

// Inner: largest p < q with j(|y-z|) within (1+eps) of j(|y|) for z in B_{pR},
// y outside B_{qR}. Outer: smallest p > q with j(|y-z|) within (1+eps) of
// j(|z|) for z outside B_{pR}, y in B_{qR}. found=false signals the outer
// condition failing numerically in the search range.
ComparabilityResult comparability_radius(const ProcessModel& model, double R,
                                         double eps, double q,
                                         ComparabilityDirection direction);

struct FreeGreenValue {
  double value = 0.0;
  // True when the value is the comparability profile 1/(r^d phi(r^{-2})),
  // valid only up to a model constant.
  bool profile_only = false;
};

FreeGreenValue free_green(const ProcessModel& model, double r);

// Closed forms for the isotropic alpha-stable process on balls. These are the
// exact oracles every Monte Carlo estimator is tested against.
namespace ball {

// Exit density of B(0,r) seen from x, evaluated at y with |y| > r.
// Normalized so it integrates to one over the exterior.
double poisson_kernel(double alpha, int d, double r, const Pt& x, const Pt& y);

// Green function of the ball; zero when x or y is outside the open ball.
double green_function(double alpha, int d, double r, const Pt& x, const Pt& y);

// Expected exit time from B(0,r) started at x (0 on and outside the sphere).
double expected_exit_time(double alpha, int d, double r, const Pt& x);

// Normalizing constant of poisson_kernel, fixed by quadrature of the exterior
// integral.
double poisson_normalizer(int d, double alpha);

// Coefficient C with E_x tau = C (r^2-|x|^2)^{alpha/2}. Closed form; audited
// against the Monte Carlo calibration record in the tests.
double exit_time_coefficient(int d, double alpha);

// Normalizer of the ball Green function, fixed so that the occupation
// identity holds: the integral of green_function(0,.) over the ball equals
// expected_exit_time(0).
double green_normalizer(int d, double alpha);

// F(z) = int_0^z s^{alpha/2-1} (1+s)^{-d/2} ds and its limit F(inf).
double green_profile(int d, double alpha, double z);
double green_profile_total(int d, double alpha);

// Radial exit law from the center: the exit radius s satisfies
// s = r*sqrt(1+Z) where Z has density proportional to z^{-alpha/2}(1+z)^{-1}.
// cdf gives P(Z <= z); quantile inverts it.
double exit_radius_cdf(int d, double alpha, double z);
double exit_radius_quantile(int d, double alpha, double u);

// Boundary limit of the Green ratio on the ball: the Martin kernel of
// B(0,r) at z with |z| = r, normalized at x0.
double martin_kernel_boundary(double alpha, int d, double r, const Pt& x,
                              const Pt& x0, const Pt& z);

// Precomputed radial rule for integrals int_{B(0,r)} G_B(0,w) f(w) dw on the
// unit ball: sum_i weight[i] * mean_{|w|=factor[i]} f scaled by r^alpha.
struct GreenQuadRule {
  std::vector<double> factor;  // radius factors in (0,1)
  std::vector<double> weight;  // includes kappa * surface * unit-ball measure
};
const GreenQuadRule& green_quad_rule(int d, double alpha, int n_radial);

}  // namespace ball

}  // namespace sbm
