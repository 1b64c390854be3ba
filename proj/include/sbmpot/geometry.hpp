#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sbmpot/common.hpp"
#include "sbmpot/rng.hpp"

namespace sbm {

// Open set built from balls and axis boxes with union / intersection /
// difference. Membership follows the open-set convention (strict
// inequalities); difference subtracts the closed right operand.
//
// dist_to_complement composes primitive signed distances with min/max. The
// composed value is exact for primitives and for intersections/differences of
// primitives, and a certified positive lower bound in general (overlapping
// unions can be fatter than either operand). The walk-on-spheres driver only
// requires the lower bound.
class Domain {
 public:
  Domain() = default;

  static Domain ball(const Pt& center, double radius, int d);
  static Domain box(const Pt& lo, const Pt& hi, int d);
  static Domain all_space(int d);
  static Domain unite(Domain a, Domain b);
  static Domain intersect(Domain a, Domain b);
  static Domain subtract(Domain a, Domain b);

  // Literal grammar (README documents it):
  //   ball(cx cy [cz]; r) | box(lo...; hi...) | all()
  //   union(e1, e2) | inter(e1, e2) | diff(e1, e2)
  // Throws ConfigError with the character position on malformed input.
  static Domain parse(const std::string& literal, int d);

  bool contains(const Pt& x) const { return signed_dist(x) < 0.0; }
  double dist_to_complement(const Pt& x) const {
    double s = signed_dist(x);
    return s < 0.0 ? -s : 0.0;
  }
  // negative inside, positive outside; lower bound on |distance| both sides
  double signed_dist(const Pt& x) const;

  bool bounded() const { return bounded_; }
  double bounding_radius() const { return bounding_radius_; }
  // Radius of a ball around the origin covering every finite primitive in the
  // tree; for unbounded domains this bounds the complement's bounded part.
  double core_radius() const;
  // True when the tree is a single ball primitive; fills center/radius.
  bool as_ball(Pt& center, double& radius) const;
  int dim() const { return d_; }
  bool empty_tree() const { return !root_; }
  std::string literal() const;

  // Shrinks every primitive by margin (left branches of differences shrink,
  // right branches grow), producing a subset of {x : dist_to_complement > 0}
  // with certified margin.
  Domain eroded(double margin) const;

  struct Node;  // CSG tree node; opaque outside geometry.cpp

 private:
  std::shared_ptr<const Node> root_;
  int d_ = 0;
  bool bounded_ = false;
  double bounding_radius_ = 0.0;
  void refresh_bounds();
};

struct Exhaustion {
  std::vector<Domain> stages;   // stages[k] strictly inside stages[k+1]
  std::vector<double> margins;  // certified erosion margins
};

// Stage k is the domain eroded by r0 * ratio^k (intersected with a growing
// ball when the domain is unbounded and a truncation radius is given).
// Throws GeometryError when a stage comes out empty.
Exhaustion default_exhaustion(const Domain& domain, int n_stages,
                              double r0 = 0.15, double ratio = 0.125,
                              double truncation_radius = 0.0);

// Approximately uniform samples on the boundary: rejection from the shell
// |signed_dist| < h followed by projection along the numeric gradient; the
// returned points satisfy contains == false and |signed_dist| <= h.
std::vector<Pt> boundary_sample(const Domain& domain, int n, Rng& rng,
                                double shell_h = 1e-3);

// Equal-count bins over boundary samples; lookup maps a point to the bin of
// its nearest center.
struct BoundaryBins {
  std::vector<Pt> centers;
  int d = 2;
  int find(const Pt& x) const;
};
BoundaryBins make_boundary_bins(const Domain& domain, int n_bins, Rng& rng);

// Deterministic Halton cloud inside domain ∩ B(0, radius_cap), at most n
// points (fewer when rejection keeps failing).
std::vector<Pt> halton_cloud(const Domain& domain, int n, double radius_cap);

// Deep interior point: the Halton sample maximizing dist_to_complement.
Pt deep_point(const Domain& domain, int n_samples = 4096);

// Axis grid over the bounding box; keeps cells whose center lies in `domain`
// (and outside `minus` when given). volumes are cell volumes.
struct Mesh {
  std::vector<Pt> centers;
  double cell_volume = 0.0;
  double h = 0.0;  // cell edge
};
Mesh grid_mesh(const Domain& domain, int n_per_axis,
               const Domain* minus = nullptr);

}  // namespace sbm
