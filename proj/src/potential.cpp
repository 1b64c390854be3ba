#include "sbmpot/potential.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sbmpot/quadrature.hpp"

namespace sbm {

Estimate combine_independent(const Estimate& a, const Estimate& b) {
  Estimate out;
  out.value = a.value + b.value;
  out.std_error = std::hypot(a.std_error, b.std_error);
  out.n = a.n + b.n;
  out.method = a.method == b.method ? a.method : Method::kHybrid;
  out.flags = a.flags | b.flags;
  return out;
}

double OuterCharge::density_at(const Pt& y, int d) const {
  if (!density) return 0.0;
  double s = norm(y, d);
  const auto& den = *density;
  for (size_t i = 0; i + 1 < den.breaks.size(); ++i)
    if (s >= den.breaks[i] && s < den.breaks[i + 1]) return den.values[i];
  return 0.0;
}

double OuterCharge::support_radius() const {
  double r = 0.0;
  if (density && !density->breaks.empty()) r = density->breaks.back();
  for (const auto& a : atoms) r = std::max(r, norm(a.y, kMaxDim));
  return r;
}

void OuterCharge::validate_against(const Domain& domain) const {
  for (const auto& a : atoms)
    if (domain.contains(a.y))
      throw ModelError("outer charge atom lies inside the domain");
}

namespace {

Estimate reduce_mean(const std::vector<double>& vals, Method method) {
  Estimate e;
  e.n = static_cast<long>(vals.size());
  e.method = method;
  if (vals.empty()) return e;
  double s = 0.0;
  for (double v : vals) s += v;
  double mean = s / e.n;
  double q = 0.0;
  for (double v : vals) q += (v - mean) * (v - mean);
  e.value = mean;
  e.std_error = e.n > 1 ? std::sqrt(q / e.n / (e.n - 1.0)) : 0.0;
  return e;
}

bool heavy_tail_flag(const std::vector<double>& vals) {
  if (vals.size() < 100) return false;
  double total = 0.0, mx = 0.0;
  for (double v : vals) {
    total += v;
    mx = std::max(mx, v);
  }
  return total > 0.0 && mx > 0.5 * total;
}

}  // namespace

Estimate green_potential(const ProcessModel& model, const Domain& domain,
                         const std::function<double(const Pt&)>& f, const Pt& x,
                         const EstimatorOptions& opts) {
  if (!domain.contains(x))
    throw SamplingError("green_potential: x not in domain");
  std::vector<Functional> fns{{"f", f}};
  auto make = [&](long i) {
    Rng rng(opts.seed, stream_id(opts.stream_tag, static_cast<uint64_t>(i)));
    if (opts.method == ExitMethod::kWos)
      return exit_sample_wos(model, domain, x, opts.wos, rng, fns);
    TimestepParams tp;
    tp.dt = opts.dt;
    return exit_sample_timestep(model, domain, x, tp, rng, fns);
  };
  auto records = run_paths(opts.n_paths, opts.workers, make);
  std::vector<double> vals(records.size());
  for (size_t i = 0; i < records.size(); ++i) vals[i] = records[i].accumulators[0];
  Estimate e = reduce_mean(vals, opts.method == ExitMethod::kWos
                                     ? Method::kMcWos
                                     : Method::kMcTimestep);
  if (heavy_tail_flag(vals)) e.flags |= kFlagInfiniteIntegral;
  return e;
}

Estimate poisson_kernel_est(const ProcessModel& model, const Domain& domain,
                            const Pt& x, const Pt& y,
                            const EstimatorOptions& opts) {
  if (!domain.contains(x)) throw SamplingError("poisson_kernel_est: x not in D");
  if (domain.contains(y)) throw SamplingError("poisson_kernel_est: y in D");
  EstimatorOptions local = opts;
  unsigned flags = 0;
  double cell = domain.dist_to_complement(x) / std::max(1, opts.wos.quad_radial);
  double ydist = domain.signed_dist(y);
  if (ydist < 10.0 * cell) {
    flags |= kFlagNearBoundarySingularity;
    local.wos.quad_radial *= 4;
    local.wos.quad_angular *= 2;
  }
  auto f = [&](const Pt& w) { return jumping_kernel(model, dist(w, y, model.d)); };
  Estimate e = green_potential(model, domain, f, x, local);
  e.flags |= flags;
  return e;
}

Estimate poisson_integral(const ProcessModel& model, const Domain& domain,
                          const OuterCharge& charge, const Pt& x,
                          const EstimatorOptions& opts) {
  if (!domain.contains(x)) throw SamplingError("poisson_integral: x not in D");
  charge.validate_against(domain);
  if (charge.empty()) {
    Estimate zero;
    zero.method = Method::kQuadrature;
    return zero;
  }
  Estimate out;
  bool have = false;
  if (charge.density) {
    auto make = [&](long i) {
      Rng rng(opts.seed, stream_id(opts.stream_tag, static_cast<uint64_t>(i)));
      if (opts.method == ExitMethod::kWos)
        return exit_sample_wos(model, domain, x, opts.wos, rng);
      TimestepParams tp;
      tp.dt = opts.dt;
      return exit_sample_timestep(model, domain, x, tp, rng);
    };
    auto records = run_paths(opts.n_paths, opts.workers, make);
    std::vector<double> vals(records.size());
    for (size_t i = 0; i < records.size(); ++i)
      vals[i] = charge.density_at(records[i].exit_position, model.d);
    out = reduce_mean(vals, opts.method == ExitMethod::kWos
                               ? Method::kMcWos
                               : Method::kMcTimestep);
    if (heavy_tail_flag(vals)) out.flags |= kFlagInfiniteIntegral;
    have = true;
  }
  for (size_t a = 0; a < charge.atoms.size(); ++a) {
    EstimatorOptions atom_opts = opts;
    atom_opts.stream_tag = opts.stream_tag + 17 + a;  // independent streams
    Estimate pk = poisson_kernel_est(model, domain, x, charge.atoms[a].y,
                                     atom_opts);
    pk.value *= charge.atoms[a].mass;
    pk.std_error *= charge.atoms[a].mass;
    out = have ? combine_independent(out, pk) : pk;
    have = true;
  }
  return out;
}

// ---------------------------------------------------------------------------

StarMeasure::StarMeasure(const Domain& domain, const OuterCharge& charge,
                         Mesh mesh, std::vector<double> interior_values)
    : domain_(domain), charge_(charge), mesh_(std::move(mesh)),
      values_(std::move(interior_values)) {
  if (mesh_.centers.empty())
    throw ConfigError("extend_star: interior grid is empty (too coarse?)");
  if (values_.size() != mesh_.centers.size())
    throw ConfigError("extend_star: values do not match the grid");
}

double StarMeasure::interior_mass() const {
  double m = 0.0;
  for (double v : values_) m += v * mesh_.cell_volume;
  return m;
}

double StarMeasure::box_mass(const Pt& lo, const Pt& hi) const {
  int d = domain_.dim();
  for (int i = 0; i < d; ++i)
    if (!(lo[i] < hi[i])) throw ConfigError("box_mass: lo must be < hi");
  // interior part: overlap of grid cells with the box
  double mass = 0.0;
  double h = mesh_.h;
  for (size_t c = 0; c < mesh_.centers.size(); ++c) {
    double frac = 1.0;
    for (int i = 0; i < d && frac > 0.0; ++i) {
      double a = mesh_.centers[c][i] - 0.5 * h;
      double b = mesh_.centers[c][i] + 0.5 * h;
      double ov = std::min(b, hi[i]) - std::max(a, lo[i]);
      frac *= std::max(0.0, ov) / h;
    }
    mass += frac * values_[c] * mesh_.cell_volume;
  }
  // charge part on the complement: deterministic subgrid
  const int k = 8;
  double sub = 1.0;
  Pt step{};
  for (int i = 0; i < d; ++i) {
    step[i] = (hi[i] - lo[i]) / k;
    sub *= step[i];
  }
  if (charge_.density) {
    auto visit = [&](const Pt& p) {
      if (!domain_.contains(p)) mass += charge_.density_at(p, d) * sub;
    };
    if (d == 2) {
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
          visit(pt(lo[0] + (i + 0.5) * step[0], lo[1] + (j + 0.5) * step[1]));
    } else {
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
          for (int m = 0; m < k; ++m)
            visit(pt(lo[0] + (i + 0.5) * step[0], lo[1] + (j + 0.5) * step[1],
                     lo[2] + (m + 0.5) * step[2]));
    }
  }
  for (const auto& a : charge_.atoms) {
    bool in = true;
    for (int i = 0; i < d; ++i) in = in && a.y[i] >= lo[i] && a.y[i] < hi[i];
    if (in && !domain_.contains(a.y)) mass += a.mass;
  }
  return mass;
}

StarMeasure extend_star(const Domain& domain, const OuterCharge& charge,
                        const Mesh& interior_mesh,
                        std::vector<double> interior_values) {
  return StarMeasure(domain, charge, interior_mesh, std::move(interior_values));
}

// ---------------------------------------------------------------------------

namespace {

struct SphereRule {
  std::vector<Pt> dirs;
  std::vector<double> w;  // sums to 1; antipodally symmetric set
};

const SphereRule& sphere_rule(int d, int n) {
  thread_local int last_d = 0, last_n = 0;
  thread_local SphereRule rule;
  if (last_d == d && last_n == n) return rule;
  rule.dirs.clear();
  rule.w.clear();
  if (d == 2) {
    int m = std::max(8, n - n % 2);
    for (int k = 0; k < m; ++k) {
      double a = 2.0 * M_PI * k / m;
      rule.dirs.push_back(pt(std::cos(a), std::sin(a)));
      rule.w.push_back(1.0 / m);
    }
  } else {
    static const double gx[8] = {-0.960289856497536, -0.796666477413627,
                                 -0.525532409916329, -0.183434642495650,
                                 0.183434642495650,  0.525532409916329,
                                 0.796666477413627,  0.960289856497536};
    static const double gw[8] = {0.101228536290376, 0.222381034453374,
                                 0.313706645877887, 0.362683783378362,
                                 0.362683783378362, 0.313706645877887,
                                 0.222381034453374, 0.101228536290376};
    int nphi = std::max(8, n / 4);
    nphi -= nphi % 2;
    for (int m = 0; m < 8; ++m) {
      double ct = gx[m];
      double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
      for (int k = 0; k < nphi; ++k) {
        double a = 2.0 * M_PI * k / nphi;
        rule.dirs.push_back(pt(st * std::cos(a), st * std::sin(a), ct));
        rule.w.push_back(0.5 * gw[m] / nphi);
      }
    }
  }
  last_d = d;
  last_n = n;
  return rule;
}

}  // namespace

LApplyResult operator_L_apply(const ProcessModel& model,
                              const std::function<double(const Pt&)>& u,
                              const Pt& x, double inner_radius,
                              const LQuadOptions& opts) {
  if (!(inner_radius > 0.0))
    throw QuadratureError("operator_L_apply: inner radius must be positive");
  int d = model.d;
  double S = sphere_area(d);
  const auto& rule = sphere_rule(d, opts.n_angular);
  double ux = u(x);

  // j evaluator: direct power law for the stable kind, table otherwise
  std::function<double(double)> jf;
  KernelTable table;
  if (model.spec.kind() == BernsteinKind::kStable) {
    double c = stable_jump_constant(d, model.spec.alpha());
    double e = d + model.spec.alpha();
    jf = [c, e](double s) { return c * std::pow(s, -e); };
  } else {
    table = KernelTable::build(model, 1e-7 * inner_radius,
                               2.0 * opts.truncation_radius, 1200);
    jf = [&table](double s) { return table(s); };
  }

  auto mean_u = [&](double s) {
    double m = 0.0;
    for (size_t k = 0; k < rule.dirs.size(); ++k)
      m += rule.w[k] * u(add(x, scale(rule.dirs[k], s)));
    return m;
  };

  QuadOptions qopt;
  qopt.rel_tol = opts.rel_tol;

  // symmetric inner integral: the antipodal node set makes mean_u - ux decay
  // like s^2
  double s_min = 1e-6 * inner_radius;
  auto inner_f = [&](double s) {
    return (mean_u(s) - ux) * jf(s) * std::pow(s, d - 1);
  };
  double inner = S * integrate(inner_f, s_min, inner_radius, qopt).value;

  // small-ball remainder bound from the local curvature scale
  double s_ref = 1e-3 * inner_radius;
  double curv = std::abs(mean_u(s_ref) - ux) / (s_ref * s_ref);
  double p_loc = -std::log(jf(2.0 * s_min) / jf(s_min)) / std::log(2.0);
  double tail = 0.0;
  if (p_loc < d + 2.0)
    tail += curv * S * jf(s_min) * std::pow(s_min, d + 2.0) / (d + 2.0 - p_loc);

  // outer direct part on log segments up to the truncation radius
  double outer = 0.0;
  double lo = inner_radius;
  const int kSegs = 24;
  double g = std::pow(opts.truncation_radius / inner_radius, 1.0 / kSegs);
  for (int seg = 0; seg < kSegs; ++seg) {
    double hi = lo * g;
    outer += S * integrate(inner_f, lo, hi, qopt).value;
    lo = hi;
  }

  // beyond the truncation radius: exact -u(x) mass term plus certified bound
  double jt = jump_tail_mass(model, opts.truncation_radius);
  double far = 0.0;
  if (opts.assume_zero_beyond) {
    far = -ux * jt;
    tail += opts.u_sup_beyond * jt;
  } else {
    tail += (opts.u_sup_beyond + std::abs(ux)) * jt;
  }

  return LApplyResult{inner + outer + far, tail};
}

double Bump::operator()(const Pt& y, int d) const {
  double t = dist(y, center, d) / radius;
  if (t >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - t * t));
}

double Bump::c2_norm() const {
  double worst = 1.0;  // sup |f| = 1 at the center
  for (int i = 1; i < 2000; ++i) {
    double t = i / 2000.0;
    double q = 1.0 - t * t;
    double gval = std::exp(1.0 - 1.0 / q);
    double g1 = -2.0 * t / (q * q) * gval;
    double g2 = gval * (4.0 * t * t / (q * q * q * q) - 2.0 / (q * q) -
                        8.0 * t * t / (q * q * q));
    double cross = std::abs(g2) + 2.0 * std::abs(g1) / std::max(t, 1e-6);
    worst = std::max({worst, std::abs(g1) / radius, cross / (radius * radius)});
  }
  return worst;
}

double weak_L_pairing(const ProcessModel& model,
                      const std::function<double(const Pt&)>& u,
                      const Domain& domain, const OuterCharge& charge,
                      const Bump& bump, const WeakPairingOptions& opts) {
  int d = model.d;
  // support margin check on sampled sphere directions
  const auto& sr = sphere_rule(d, 64);
  for (const auto& dir : sr.dirs) {
    Pt p = add(bump.center, scale(dir, bump.radius));
    if (domain.signed_dist(p) > -0.02 * bump.radius)
      throw GeometryError("weak_L_pairing: bump support not compactly inside");
  }

  double rho = opts.inner_radius_factor * bump.radius;
  LQuadOptions lq = opts.lquad;
  lq.u_sup_beyond = 0.0;  // the bump vanishes outside its support

  // direct evaluation for points at distance from the support
  const auto& ring = sphere_rule(d, 32);
  std::vector<Pt> bump_nodes;
  std::vector<double> bump_w;
  {
    const int nr = 24;
    for (int i = 0; i < nr; ++i) {
      double t = (i + 0.5) / nr;
      double w = bump.radius / nr * std::pow(t * bump.radius, d - 1) *
                 sphere_area(d);
      for (size_t k = 0; k < ring.dirs.size(); ++k) {
        Pt p = add(bump.center, scale(ring.dirs[k], t * bump.radius));
        bump_nodes.push_back(p);
        bump_w.push_back(w * ring.w[k] * bump(p, d));
      }
    }
  }
  auto l_phi = [&](const Pt& p) {
    double gap = dist(p, bump.center, d) - bump.radius;
    if (gap < 0.3 * bump.radius) {
      auto phi = [&](const Pt& q) { return bump(q, d); };
      LQuadOptions here = lq;
      here.truncation_radius =
          dist(p, bump.center, d) + bump.radius + 2.0;
      return operator_L_apply(model, phi, p, rho, here).value;
    }
    double v = 0.0;
    for (size_t i = 0; i < bump_nodes.size(); ++i)
      v += bump_w[i] * jumping_kernel(model, dist(p, bump_nodes[i], d));
    return v;
  };

  // interior integral of u * L(phi)
  Mesh mesh = grid_mesh(domain, opts.mesh_per_axis);
  double interior = 0.0;
  for (const auto& c : mesh.centers)
    interior += u(c) * l_phi(c) * mesh.cell_volume;

  // charge integral over the complement
  double outer = 0.0;
  if (charge.density) {
    const auto& den = *charge.density;
    QuadOptions qo;
    qo.rel_tol = 1e-8;
    for (size_t b = 0; b + 1 < den.breaks.size(); ++b) {
      if (den.values[b] == 0.0) continue;
      auto f = [&](double s) {
        double m = 0.0;
        for (size_t k = 0; k < sr.dirs.size(); ++k) {
          Pt p = scale(sr.dirs[k], s);
          if (!domain.contains(p)) m += sr.w[k] * l_phi(p);
        }
        return m * std::pow(s, d - 1);
      };
      outer += den.values[b] * sphere_area(d) *
               integrate(f, den.breaks[b], den.breaks[b + 1], qo).value;
    }
  }
  for (const auto& a : charge.atoms) outer += a.mass * l_phi(a.y);
  return interior + outer;
}

// ---------------------------------------------------------------------------

double ball_poisson_integral(double alpha, int d, const Pt& center, double r,
                             const Pt& x, const OuterCharge& charge) {
  double out = 0.0;
  Pt xr = sub(x, center);
  if (!(norm(xr, d) < r))
    throw GeometryError("ball_poisson_integral: x not in the ball");
  for (const auto& a : charge.atoms)
    out += a.mass * ball::poisson_kernel(alpha, d, r, xr, sub(a.y, center));
  if (charge.density) {
    const auto& den = *charge.density;
    const auto& sr = sphere_rule(d, d == 2 ? 96 : 48);
    QuadOptions qo;
    qo.rel_tol = 1e-9;
    for (size_t b = 0; b + 1 < den.breaks.size(); ++b) {
      if (den.values[b] == 0.0) continue;
      auto f = [&](double s) {
        double m = 0.0;
        for (size_t k = 0; k < sr.dirs.size(); ++k) {
          Pt y = scale(sr.dirs[k], s);
          Pt yr = sub(y, center);
          if (norm(yr, d) <= r * (1.0 + 1e-12)) continue;  // outside charge set
          m += sr.w[k] * ball::poisson_kernel(alpha, d, r, xr, yr);
        }
        return m * std::pow(s, d - 1);
      };
      out += den.values[b] * sphere_area(d) *
             integrate(f, den.breaks[b], den.breaks[b + 1], qo).value;
    }
  }
  return out;
}

BallPoissonRadial BallPoissonRadial::build(
    double alpha, int d, double r, const OuterCharge::RadialDensity& density,
    int n_grid) {
  if (density.breaks.empty() || density.breaks.front() <= r * (1.0 + 1e-12))
    throw ConfigError(
        "BallPoissonRadial needs the density support separated from the "
        "sphere");
  BallPoissonRadial out;
  out.alpha_ = alpha;
  out.d_ = d;
  out.r_ = r;
  out.w_.resize(static_cast<size_t>(n_grid));
  double cp = ball::poisson_normalizer(d, alpha);
  QuadOptions qo;
  qo.rel_tol = 1e-10;
  auto ad = [&](double t, double s) {
    // angular integral of |x-y|^{-d} over the |y| = s sphere at |x| = t
    if (d == 2) return 2.0 * M_PI / (s * s - t * t);
    return 4.0 * M_PI / (s * (s * s - t * t));
  };
  for (int i = 0; i < n_grid; ++i) {
    double t = r * i / (n_grid - 1.0);
    if (i == n_grid - 1) t = r * (1.0 - 1e-9);
    double w = 0.0;
    for (size_t b = 0; b + 1 < density.breaks.size(); ++b) {
      if (density.values[b] == 0.0) continue;
      auto f = [&](double s) {
        return std::pow(s * s - r * r, -0.5 * alpha) * ad(t, s) *
               std::pow(s, d - 1.0);
      };
      w += density.values[b] *
           integrate(f, density.breaks[b], density.breaks[b + 1], qo).value;
    }
    out.w_[static_cast<size_t>(i)] = cp * w;
  }
  for (int i = 0; i < n_grid; ++i) {
    double t = r * i / (n_grid - 1.0);
    double val = std::pow(std::max(r * r - t * t, 0.0), 0.5 * alpha) *
                 out.w_[static_cast<size_t>(i)];
    out.sup_ = std::max(out.sup_, val);
  }
  return out;
}

double BallPoissonRadial::operator()(double t) const {
  if (t >= r_) return 0.0;
  size_t n = w_.size();
  double pos = t / r_ * (n - 1.0);
  // local cubic Lagrange
  long i0 = std::lround(std::floor(pos)) - 1;
  i0 = std::clamp<long>(i0, 0, static_cast<long>(n) - 4);
  double w = 0.0;
  for (int k = 0; k < 4; ++k) {
    double lk = 1.0;
    for (int m = 0; m < 4; ++m) {
      if (m == k) continue;
      lk *= (pos - (i0 + m)) / static_cast<double>(k - m);
    }
    w += lk * w_[static_cast<size_t>(i0 + k)];
  }
  return std::pow(r_ * r_ - t * t, 0.5 * alpha_) * w;
}

ExitTimeFit expected_exit_time_mc(const ProcessModel& model,
                                  const Domain& domain, const Pt& x,
                                  const std::vector<double>& dt_levels,
                                  long n_paths, uint64_t seed, int workers,
                                  uint64_t stream_tag) {
  ExitTimeFit fit;
  for (size_t l = 0; l < dt_levels.size(); ++l) {
    auto make = [&](long i) {
      Rng rng(seed,
              stream_id(stream_tag + l, static_cast<uint64_t>(i)));
      TimestepParams tp;
      tp.dt = dt_levels[l];
      return exit_sample_timestep(model, domain, x, tp, rng);
    };
    auto records = run_paths(n_paths, workers, make);
    std::vector<double> vals(records.size());
    for (size_t i = 0; i < records.size(); ++i) vals[i] = records[i].exit_time;
    fit.levels.push_back(reduce_mean(vals, Method::kMcTimestep));
  }
  // Richardson on the observed order for three geometric levels
  if (fit.levels.size() == 3) {
    double g = dt_levels[0] / dt_levels[1];
    double g2 = dt_levels[1] / dt_levels[2];
    double d1 = fit.levels[0].value - fit.levels[1].value;
    double d2 = fit.levels[1].value - fit.levels[2].value;
    if (std::abs(g - g2) < 1e-9 * g && d1 * d2 > 0.0 && std::abs(d1) > std::abs(d2)) {
      double beta = std::log(d1 / d2) / std::log(g);
      double c = 1.0 / (std::pow(g, beta) - 1.0);
      Estimate e;
      e.value = fit.levels[2].value - c * d2;
      e.std_error = std::sqrt(
          std::pow((1.0 + c) * fit.levels[2].std_error, 2) +
          std::pow(c * fit.levels[1].std_error, 2));
      e.n = n_paths;
      e.method = Method::kMcTimestep;
      fit.extrapolated = e;
      fit.observed_order = beta;
      fit.fit_ok = true;
      return fit;
    }
  }
  fit.extrapolated = fit.levels.back();
  fit.fit_ok = false;
  return fit;
}

}  // namespace sbm
