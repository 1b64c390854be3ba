#include "sbmpot/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

namespace sbm {

namespace {
enum class NodeKind { kBall, kBox, kAll, kUnion, kInter, kDiff };
}

struct Domain::Node {
  NodeKind kind;
  Pt a{}, b{};     // ball: center + radius in a_r; box: lo/hi
  double radius = 0.0;
  std::shared_ptr<const Node> left, right;
};

namespace {

double primitive_sd(const Domain::Node& n, const Pt& x, int d) {
  switch (n.kind) {
    case NodeKind::kBall:
      return dist(x, n.a, d) - n.radius;
    case NodeKind::kBox: {
      // exact box signed distance
      double inside = -std::numeric_limits<double>::infinity();
      double out2 = 0.0;
      for (int i = 0; i < d; ++i) {
        double q = std::max(n.a[i] - x[i], x[i] - n.b[i]);
        if (q > 0.0)
          out2 += q * q;
        else
          inside = std::max(inside, q);
      }
      return out2 > 0.0 ? std::sqrt(out2) : inside;
    }
    case NodeKind::kAll:
      return -std::numeric_limits<double>::infinity();
    default:
      return 0.0;
  }
}

double node_sd(const Domain::Node& n, const Pt& x, int d) {
  switch (n.kind) {
    case NodeKind::kUnion:
      return std::min(node_sd(*n.left, x, d), node_sd(*n.right, x, d));
    case NodeKind::kInter:
      return std::max(node_sd(*n.left, x, d), node_sd(*n.right, x, d));
    case NodeKind::kDiff:
      return std::max(node_sd(*n.left, x, d), -node_sd(*n.right, x, d));
    default:
      return primitive_sd(n, x, d);
  }
}

// conservative enclosing ball; infinite radius when unbounded
void node_bounds(const Domain::Node& n, int d, bool& bounded, Pt& center,
                 double& radius) {
  switch (n.kind) {
    case NodeKind::kBall:
      bounded = true;
      center = n.a;
      radius = n.radius;
      return;
    case NodeKind::kBox: {
      bounded = true;
      Pt c{};
      double r2 = 0.0;
      for (int i = 0; i < d; ++i) {
        c[i] = 0.5 * (n.a[i] + n.b[i]);
        double h = 0.5 * (n.b[i] - n.a[i]);
        r2 += h * h;
      }
      center = c;
      radius = std::sqrt(r2);
      return;
    }
    case NodeKind::kAll:
      bounded = false;
      center = Pt{};
      radius = std::numeric_limits<double>::infinity();
      return;
    case NodeKind::kUnion: {
      bool b1, b2;
      Pt c1, c2;
      double r1, r2;
      node_bounds(*n.left, d, b1, c1, r1);
      node_bounds(*n.right, d, b2, c2, r2);
      bounded = b1 && b2;
      if (!bounded) {
        center = Pt{};
        radius = std::numeric_limits<double>::infinity();
        return;
      }
      double sep = dist(c1, c2, d);
      // midpoint ball covering both
      center = scale(add(c1, c2), 0.5);
      radius = 0.5 * sep + std::max(r1, r2);
      return;
    }
    case NodeKind::kInter: {
      bool b1, b2;
      Pt c1, c2;
      double r1, r2;
      node_bounds(*n.left, d, b1, c1, r1);
      node_bounds(*n.right, d, b2, c2, r2);
      if (b1 && (!b2 || r1 <= r2)) {
        bounded = b1;
        center = c1;
        radius = r1;
      } else {
        bounded = b2;
        center = c2;
        radius = r2;
      }
      return;
    }
    case NodeKind::kDiff:
      node_bounds(*n.left, d, bounded, center, radius);
      return;
  }
}

std::shared_ptr<const Domain::Node> erode_node(const Domain::Node& n,
                                               double m, int d) {
  auto out = std::make_shared<Domain::Node>(n);
  switch (n.kind) {
    case NodeKind::kBall:
      out->radius = n.radius - m;
      break;
    case NodeKind::kBox:
      for (int i = 0; i < d; ++i) {
        out->a[i] = n.a[i] + m;
        out->b[i] = n.b[i] - m;
      }
      break;
    case NodeKind::kAll:
      break;
    case NodeKind::kUnion:
    case NodeKind::kInter:
      out->left = erode_node(*n.left, m, d);
      out->right = erode_node(*n.right, m, d);
      break;
    case NodeKind::kDiff:
      out->left = erode_node(*n.left, m, d);
      out->right = erode_node(*n.right, -m, d);  // grow the removed part
      break;
  }
  return out;
}

void node_literal(const Domain::Node& n, int d, std::ostream& os) {
  switch (n.kind) {
    case NodeKind::kBall:
      os << "ball(";
      for (int i = 0; i < d; ++i) os << (i ? " " : "") << n.a[i];
      os << "; " << n.radius << ")";
      return;
    case NodeKind::kBox:
      os << "box(";
      for (int i = 0; i < d; ++i) os << (i ? " " : "") << n.a[i];
      os << "; ";
      for (int i = 0; i < d; ++i) os << (i ? " " : "") << n.b[i];
      os << ")";
      return;
    case NodeKind::kAll:
      os << "all()";
      return;
    case NodeKind::kUnion:
    case NodeKind::kInter:
    case NodeKind::kDiff:
      os << (n.kind == NodeKind::kUnion   ? "union("
             : n.kind == NodeKind::kInter ? "inter("
                                          : "diff(");
      node_literal(*n.left, d, os);
      os << ", ";
      node_literal(*n.right, d, os);
      os << ")";
      return;
  }
}

}  // namespace

Domain Domain::ball(const Pt& center, double radius, int d) {
  if (!(radius > 0.0)) throw GeometryError("ball radius must be positive");
  if (d < 2 || d > kMaxDim) throw GeometryError("dimension must be 2 or 3");
  Domain dom;
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::kBall;
  n->a = center;
  n->radius = radius;
  dom.root_ = n;
  dom.d_ = d;
  dom.refresh_bounds();
  return dom;
}

Domain Domain::box(const Pt& lo, const Pt& hi, int d) {
  if (d < 2 || d > kMaxDim) throw GeometryError("dimension must be 2 or 3");
  for (int i = 0; i < d; ++i)
    if (!(lo[i] < hi[i])) throw GeometryError("box needs lo < hi per axis");
  Domain dom;
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::kBox;
  n->a = lo;
  n->b = hi;
  dom.root_ = n;
  dom.d_ = d;
  dom.refresh_bounds();
  return dom;
}

Domain Domain::all_space(int d) {
  Domain dom;
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::kAll;
  dom.root_ = n;
  dom.d_ = d;
  dom.refresh_bounds();
  return dom;
}

Domain Domain::unite(Domain a, Domain b) {
  if (a.d_ != b.d_) throw GeometryError("dimension mismatch in union");
  Domain dom;
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::kUnion;
  n->left = a.root_;
  n->right = b.root_;
  dom.root_ = n;
  dom.d_ = a.d_;
  dom.refresh_bounds();
  return dom;
}

Domain Domain::intersect(Domain a, Domain b) {
  if (a.d_ != b.d_) throw GeometryError("dimension mismatch in inter");
  Domain dom;
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::kInter;
  n->left = a.root_;
  n->right = b.root_;
  dom.root_ = n;
  dom.d_ = a.d_;
  dom.refresh_bounds();
  return dom;
}

Domain Domain::subtract(Domain a, Domain b) {
  if (a.d_ != b.d_) throw GeometryError("dimension mismatch in diff");
  Domain dom;
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::kDiff;
  n->left = a.root_;
  n->right = b.root_;
  dom.root_ = n;
  dom.d_ = a.d_;
  dom.refresh_bounds();
  return dom;
}

void Domain::refresh_bounds() {
  bool b;
  Pt c;
  double r;
  node_bounds(*root_, d_, b, c, r);
  bounded_ = b;
  bounding_radius_ = b ? norm(c, d_) + r : std::numeric_limits<double>::infinity();
}

double Domain::signed_dist(const Pt& x) const {
  if (!root_) throw GeometryError("empty domain");
  return node_sd(*root_, x, d_);
}

namespace {
double node_core_radius(const Domain::Node& n, int d) {
  switch (n.kind) {
    case NodeKind::kBall:
      return norm(n.a, d) + n.radius;
    case NodeKind::kBox: {
      double r2 = 0.0;
      for (int i = 0; i < d; ++i)
        r2 += std::max(n.a[i] * n.a[i], n.b[i] * n.b[i]);
      return std::sqrt(r2);
    }
    case NodeKind::kAll:
      return 0.0;
    default:
      return std::max(node_core_radius(*n.left, d),
                      node_core_radius(*n.right, d));
  }
}
}  // namespace

double Domain::core_radius() const {
  if (!root_) return 0.0;
  return node_core_radius(*root_, d_);
}

bool Domain::as_ball(Pt& center, double& radius) const {
  if (!root_ || root_->kind != NodeKind::kBall) return false;
  center = root_->a;
  radius = root_->radius;
  return true;
}

std::string Domain::literal() const {
  std::ostringstream os;
  if (root_) node_literal(*root_, d_, os);
  return os.str();
}

Domain Domain::eroded(double margin) const {
  Domain dom;
  dom.root_ = erode_node(*root_, margin, d_);
  dom.d_ = d_;
  dom.refresh_bounds();
  return dom;
}

// ---------------------------------------------------------------------------
// literal parser

namespace {

struct Parser {
  const std::string& s;
  size_t pos = 0;
  int d;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("domain literal error at position " +
                      std::to_string(pos) + ": " + msg);
  }
  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
      ++pos;
  }
  bool consume(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!consume(c)) fail(std::string("expected '") + c + "'");
  }
  std::string ident() {
    skip_ws();
    size_t start = pos;
    while (pos < s.size() &&
           (std::isalpha(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
      ++pos;
    if (pos == start) fail("expected an identifier");
    return s.substr(start, pos - start);
  }
  double number() {
    skip_ws();
    size_t idx = 0;
    double v;
    try {
      v = std::stod(s.substr(pos), &idx);
    } catch (...) {
      fail("expected a number");
    }
    pos += idx;
    return v;
  }
  std::vector<double> numbers_until(char stop) {
    std::vector<double> out;
    while (true) {
      skip_ws();
      if (pos < s.size() && s[pos] == stop) break;
      out.push_back(number());
    }
    return out;
  }

  Domain expr() {
    std::string name = ident();
    expect('(');
    if (name == "ball") {
      auto coords = numbers_until(';');
      expect(';');
      double r = number();
      expect(')');
      if (static_cast<int>(coords.size()) != d)
        fail("ball center needs exactly " + std::to_string(d) +
             " coordinates");
      Pt c{};
      for (int i = 0; i < d; ++i) c[i] = coords[static_cast<size_t>(i)];
      return Domain::ball(c, r, d);
    }
    if (name == "box") {
      auto lo = numbers_until(';');
      expect(';');
      auto hi = numbers_until(')');
      expect(')');
      if (static_cast<int>(lo.size()) != d || static_cast<int>(hi.size()) != d)
        fail("box needs " + std::to_string(d) + " coordinates per corner");
      Pt a{}, b{};
      for (int i = 0; i < d; ++i) {
        a[i] = lo[static_cast<size_t>(i)];
        b[i] = hi[static_cast<size_t>(i)];
      }
      return Domain::box(a, b, d);
    }
    if (name == "all") {
      expect(')');
      return Domain::all_space(d);
    }
    if (name == "union" || name == "inter" || name == "diff") {
      Domain a = expr();
      expect(',');
      Domain b = expr();
      expect(')');
      if (name == "union") return Domain::unite(a, b);
      if (name == "inter") return Domain::intersect(a, b);
      return Domain::subtract(a, b);
    }
    fail("unknown primitive '" + name + "'");
  }
};

}  // namespace

Domain Domain::parse(const std::string& literal, int d) {
  Parser p{literal, 0, d};
  Domain dom;
  try {
    dom = p.expr();
  } catch (const GeometryError& e) {
    throw ConfigError("domain literal error at position " +
                      std::to_string(p.pos) + ": " + e.what());
  }
  p.skip_ws();
  if (p.pos != literal.size()) p.fail("trailing characters");
  return dom;
}

// ---------------------------------------------------------------------------

Exhaustion default_exhaustion(const Domain& domain, int n_stages, double r0,
                              double ratio, double truncation_radius) {
  if (n_stages < 1) throw GeometryError("exhaustion needs >= 1 stage");
  if (!domain.bounded() && !(truncation_radius > 0.0))
    throw GeometryError(
        "unbounded domain needs a truncation radius for exhaustions");
  Exhaustion ex;
  int d = domain.dim();
  for (int k = 0; k < n_stages; ++k) {
    double margin = r0 * std::pow(ratio, k);
    Domain stage = domain.eroded(margin);
    if (!domain.bounded()) {
      double rk = truncation_radius * std::pow(2.0, k);
      stage = Domain::intersect(stage, Domain::ball(Pt{}, rk, d));
    }
    // emptiness probe on a coarse deterministic cloud
    auto cloud = halton_cloud(stage, 32, stage.bounded()
                                              ? stage.bounding_radius()
                                              : truncation_radius);
    if (cloud.empty())
      throw GeometryError("exhaustion stage " + std::to_string(k) +
                          " is empty (margin " + std::to_string(margin) + ")");
    ex.stages.push_back(stage);
    ex.margins.push_back(margin);
  }
  return ex;
}

std::vector<Pt> boundary_sample(const Domain& domain, int n, Rng& rng,
                                double shell_h) {
  if (!domain.bounded())
    throw GeometryError("boundary_sample requires a bounded domain");
  double R = domain.bounding_radius() + shell_h;
  int d = domain.dim();
  std::vector<Pt> out;
  out.reserve(static_cast<size_t>(n));
  long attempts = 0;
  const long budget = 4000L * n + 200000L;
  while (static_cast<int>(out.size()) < n) {
    if (++attempts > budget)
      throw SamplingError("boundary sampling stalled; shell too thin?");
    Pt p{};
    for (int i = 0; i < d; ++i) p[i] = R * (2.0 * rng.uniform() - 1.0);
    double sd = domain.signed_dist(p);
    if (std::abs(sd) >= shell_h) continue;
    // project along the numeric gradient of the signed distance
    for (int it = 0; it < 30 && std::abs(sd) > 1e-12 * R; ++it) {
      double eps = 1e-6 * std::max(1.0, R);
      Pt g{};
      double gn2 = 0.0;
      for (int i = 0; i < d; ++i) {
        Pt q = p;
        q[i] += eps;
        g[i] = (domain.signed_dist(q) - sd) / eps;
        gn2 += g[i] * g[i];
      }
      if (gn2 < 1e-12) break;
      for (int i = 0; i < d; ++i) p[i] -= sd * g[i] / gn2;
      sd = domain.signed_dist(p);
    }
    // keep samples on the closed complement side
    if (domain.contains(p)) {
      double eps = 1e-9 * std::max(1.0, R);
      Pt g{};
      double gn = 0.0;
      for (int i = 0; i < d; ++i) {
        Pt q = p;
        q[i] += eps;
        g[i] = (domain.signed_dist(q) - sd) / eps;
        gn += g[i] * g[i];
      }
      gn = std::sqrt(std::max(gn, 1e-12));
      int guard = 0;
      while (domain.contains(p) && guard++ < 60) {
        for (int i = 0; i < d; ++i) p[i] += 1e-10 * std::max(1.0, R) * g[i] / gn;
      }
    }
    if (std::abs(domain.signed_dist(p)) <= shell_h && !domain.contains(p))
      out.push_back(p);
  }
  return out;
}

int BoundaryBins::find(const Pt& x) const {
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < centers.size(); ++i) {
    double dd = dist(x, centers[i], d);
    if (dd < bd) {
      bd = dd;
      best = static_cast<int>(i);
    }
  }
  return best;
}

BoundaryBins make_boundary_bins(const Domain& domain, int n_bins, Rng& rng) {
  // equal-count bins: sample many points, then greedy farthest-point centers
  // followed by one Lloyd pass keeps counts near-uniform for smooth boundaries
  int per = 64;
  auto samples = boundary_sample(domain, n_bins * per, rng);
  BoundaryBins bins;
  bins.d = domain.dim();
  bins.centers.push_back(samples[0]);
  while (static_cast<int>(bins.centers.size()) < n_bins) {
    double best = -1.0;
    Pt cand{};
    for (const auto& s : samples) {
      double dmin = std::numeric_limits<double>::infinity();
      for (const auto& c : bins.centers)
        dmin = std::min(dmin, dist(s, c, bins.d));
      if (dmin > best) {
        best = dmin;
        cand = s;
      }
    }
    bins.centers.push_back(cand);
  }
  for (int pass = 0; pass < 3; ++pass) {
    std::vector<Pt> acc(bins.centers.size(), Pt{});
    std::vector<int> cnt(bins.centers.size(), 0);
    for (const auto& s : samples) {
      int b = bins.find(s);
      acc[static_cast<size_t>(b)] = add(acc[static_cast<size_t>(b)], s);
      cnt[static_cast<size_t>(b)]++;
    }
    for (size_t i = 0; i < bins.centers.size(); ++i) {
      if (cnt[i] == 0) continue;
      Pt mean = scale(acc[i], 1.0 / cnt[i]);
      // pull the mean back onto the boundary by snapping to nearest sample
      double bd = std::numeric_limits<double>::infinity();
      for (const auto& s : samples) {
        double dd = dist(mean, s, bins.d);
        if (dd < bd) {
          bd = dd;
          bins.centers[i] = s;
        }
      }
    }
  }
  return bins;
}

std::vector<Pt> halton_cloud(const Domain& domain, int n, double radius_cap) {
  auto halton = [](long index, int base) {
    double f = 1.0, r = 0.0;
    long i = index;
    while (i > 0) {
      f /= base;
      r += f * (i % base);
      i /= base;
    }
    return r;
  };
  static const int bases[3] = {2, 3, 5};
  int d = domain.dim();
  double R = std::min(radius_cap, domain.bounded() ? domain.bounding_radius()
                                                   : radius_cap);
  std::vector<Pt> out;
  long budget = 50000L + 2000L * n;
  for (long idx = 1; idx <= budget && static_cast<int>(out.size()) < n;
       ++idx) {
    Pt p{};
    for (int i = 0; i < d; ++i)
      p[i] = R * (2.0 * halton(idx, bases[i]) - 1.0);
    if (norm(p, d) <= radius_cap && domain.contains(p)) out.push_back(p);
  }
  return out;
}

Pt deep_point(const Domain& domain, int n_samples) {
  double cap = domain.bounded() ? domain.bounding_radius()
                                : 2.0 * std::max(1.0, domain.core_radius());
  auto cloud = halton_cloud(domain, n_samples, cap);
  if (cloud.empty()) throw GeometryError("deep_point: domain looks empty");
  Pt best = cloud.front();
  double bd = domain.dist_to_complement(best);
  for (const auto& p : cloud) {
    double dd = domain.dist_to_complement(p);
    if (dd > bd) {
      bd = dd;
      best = p;
    }
  }
  return best;
}

Mesh grid_mesh(const Domain& domain, int n_per_axis, const Domain* minus) {
  if (!domain.bounded()) throw GeometryError("grid_mesh needs a bounded domain");
  int d = domain.dim();
  double R = domain.bounding_radius();
  double h = 2.0 * R / n_per_axis;
  Mesh mesh;
  mesh.h = h;
  mesh.cell_volume = std::pow(h, d);
  auto push_if_inside = [&](const Pt& c) {
    if (!domain.contains(c)) return;
    if (minus && minus->contains(c)) return;
    mesh.centers.push_back(c);
  };
  if (d == 2) {
    for (int i = 0; i < n_per_axis; ++i)
      for (int j = 0; j < n_per_axis; ++j)
        push_if_inside(pt(-R + (i + 0.5) * h, -R + (j + 0.5) * h));
  } else {
    for (int i = 0; i < n_per_axis; ++i)
      for (int j = 0; j < n_per_axis; ++j)
        for (int k = 0; k < n_per_axis; ++k)
          push_if_inside(
              pt(-R + (i + 0.5) * h, -R + (j + 0.5) * h, -R + (k + 0.5) * h));
  }
  return mesh;
}

}  // namespace sbm
