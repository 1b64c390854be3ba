#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sbmpot/potential.hpp"

namespace sbm {

struct BoundaryPoint {
  Pt p{};
  bool at_infinity = false;
};

// Finite non-negative measure on the boundary: atoms (finite points or the
// point at infinity) plus an optional binned surface part.
struct BoundaryMeasure {
  struct Atom {
    BoundaryPoint z;
    double mass = 0.0;
  };
  std::vector<Atom> atoms;
  std::vector<double> bin_masses;  // aligned with a BoundaryBins partition
  double total_mass() const;
};

enum class Verdict { kAccessible, kInaccessible, kInconclusive };

struct AccessibilityVerdict {
  BoundaryPoint point;
  Verdict verdict = Verdict::kInconclusive;
  // (epsilon or truncation radius, partial-integral estimate) pairs
  std::vector<std::pair<double, double>> evidence;
  double fitted_slope = 0.0;
  double r_squared = 0.0;
  double escape_probability = -1.0;  // infinity classification only
  double escape_std_error = 0.0;
  std::string note;
};

struct MartinOptions {
  long n_paths = 20000;
  uint64_t seed = 1;
  int workers = 0;
  WosParams wos;
  double dt = 1e-3;          // non-stable / unbounded fallback sampler
  uint64_t stream_tag = 5;
};

// Divergence test of the truncated kernel integrals (finite z) or of the
// escape probability / exit-time growth (z = infinity). Degrades to
// kInconclusive rather than erroring.
AccessibilityVerdict classify_accessible(const ProcessModel& model,
                                         const Domain& domain,
                                         const BoundaryPoint& z, const Pt& x0,
                                         const std::vector<double>& schedule,
                                         const MartinOptions& opts);

// Green-ratio limit along an approach schedule (distances h for finite z,
// radii for infinity); Richardson-extrapolated on the observed order. Closed
// ball Green values for the stable-ball case, paired-seed Monte Carlo
// otherwise. Throws SamplingError when the two finest levels oscillate beyond
// their combined error.
Estimate martin_kernel(const ProcessModel& model, const Domain& domain,
                       const Pt& x, const BoundaryPoint& z, const Pt& x0,
                       const std::vector<double>& approach,
                       const MartinOptions& opts);

// Sum of atom masses times kernels plus the binned part; throws ModelError on
// an atom classified inaccessible unless waiver is set.
Estimate martin_integral(const ProcessModel& model, const Domain& domain,
                         const BoundaryMeasure& mu,
                         const std::optional<BoundaryBins>& bins, const Pt& x,
                         const Pt& x0, const MartinOptions& opts,
                         bool accessibility_waiver = false);

struct TraceStage {
  int stage = 0;
  std::vector<double> bin_masses;
  double interior_mass = 0.0;
  double total_mass = 0.0;
};

struct TraceEstimate {
  std::vector<TraceStage> stages;
  std::vector<double> interior_mass_trend;
  std::optional<BoundaryMeasure> limit;
  bool converged = false;
};

struct TraceOptions {
  double collar = 0.1;        // boundary collar thickness for binning
  double tolerance = 0.05;    // relative TV between successive stages
  int z_angular = 192;        // angular nodes of the stage measure (ball path)
  int radial_green = 16;      // radial rings of the stage measure (ball path)
  int inner_radial = 8;       // radial nodes of the shell integral
  long mc_paths = 20000;      // generic path: occupation histogram paths
  int mesh_per_axis = 40;     // generic path mesh
  uint64_t seed = 1;
  int workers = 0;
  uint64_t stream_tag = 6;
};

// Stage measures eta_U u binned over the boundary partition plus an interior
// bin; the limit is the last stage when successive stages agree in binned
// total variation. u is evaluated on D only.
TraceEstimate boundary_trace(const ProcessModel& model, const Domain& domain,
                             const std::function<double(const Pt&)>& u,
                             const Exhaustion& exhaustion, const Pt& x0,
                             const BoundaryBins& bins,
                             const TraceOptions& opts);

}  // namespace sbm
