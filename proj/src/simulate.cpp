#include "sbmpot/simulate.hpp"

#include <algorithm>
#include <cmath>

namespace sbm {

double stable_subordinator_increment(double index, double t, Rng& rng) {
  if (!(index > 0.0 && index < 1.0))
    throw SamplingError("stable subordinator index must lie in (0,1)");
  double rho = index;
  double theta = M_PI * rng.uniform();
  double w = rng.exponential();
  // Kanter: S_1 = (A(theta)/W)^{(1-rho)/rho}
  double a = std::pow(std::sin(rho * theta), rho / (1.0 - rho)) *
             std::sin((1.0 - rho) * theta) /
             std::pow(std::sin(theta), 1.0 / (1.0 - rho));
  double s1 = std::pow(a / w, (1.0 - rho) / rho);
  return std::pow(t, 1.0 / rho) * s1;
}

double subordinator_increment(const BernsteinSpec& spec, double dt, Rng& rng) {
  switch (spec.kind()) {
    case BernsteinKind::kStable:
      return stable_subordinator_increment(0.5 * spec.alpha(), dt, rng);
    case BernsteinKind::kStableSum: {
      double s = 0.0;
      for (const auto& t : spec.terms())
        s += stable_subordinator_increment(0.5 * t.alpha, t.weight * dt, rng);
      return s;
    }
    case BernsteinKind::kRelativisticStable: {
      double theta = std::pow(spec.mass(), 2.0 / spec.alpha());
      for (int tries = 0; tries < 1000000; ++tries) {
        double s = stable_subordinator_increment(0.5 * spec.alpha(), dt, rng);
        if (rng.uniform() < std::exp(-theta * s)) return s;
      }
      throw SamplingError("tilting rejection stalled (relativistic kind)");
    }
  }
  throw SamplingError("unknown spec kind");
}

Pt sbm_increment(const ProcessModel& model, double dt, Rng& rng) {
  double s = subordinator_increment(model.spec, dt, rng);
  double c = std::sqrt(2.0 * s);
  Pt v{};
  for (int i = 0; i < model.d; ++i) v[i] = c * rng.normal();
  return v;
}

ExitRecord exit_sample_timestep(const ProcessModel& model, const Domain& domain,
                                const Pt& x, const TimestepParams& params,
                                Rng& rng,
                                const std::vector<Functional>& functionals) {
  if (!domain.contains(x))
    throw SamplingError("exit_sample_timestep: start point not in domain");
  if (!(params.dt > 0.0)) throw SamplingError("dt must be positive");
  ExitRecord rec;
  rec.time_tracked = true;
  rec.accumulators.assign(functionals.size(), 0.0);
  Pt pos = x;
  while (true) {
    if (!domain.contains(pos)) break;
    if (norm(pos, model.d) > params.escape_radius) {
      rec.escaped_to_infinity = true;
      break;
    }
    for (size_t i = 0; i < functionals.size(); ++i)
      rec.accumulators[i] += functionals[i].f(pos) * params.dt;
    pos = add(pos, sbm_increment(model, params.dt, rng));
    rec.exit_time += params.dt;
    if (++rec.steps > params.max_steps)
      throw SamplingError("exit_sample_timestep: max steps exceeded");
  }
  rec.exit_position = pos;
  return rec;
}

namespace {

// random rotation as an orthonormal frame (Gram-Schmidt on Gaussians)
void random_frame(int d, Rng& rng, Pt cols[3]) {
  if (d == 2) {
    double a = 2.0 * M_PI * rng.uniform();
    cols[0] = pt(std::cos(a), std::sin(a));
    cols[1] = pt(-std::sin(a), std::cos(a));
    return;
  }
  for (int c = 0; c < 3; ++c) {
    Pt v{};
    for (int i = 0; i < 3; ++i) v[i] = rng.normal();
    for (int p = 0; p < c; ++p) {
      double proj = dot(v, cols[p], 3);
      v = sub(v, scale(cols[p], proj));
    }
    double nv = norm(v, 3);
    if (nv < 1e-12) {
      v = pt(c == 0, c == 1, c == 2);
      nv = 1.0;
    }
    cols[c] = scale(v, 1.0 / nv);
  }
}

struct AngularSet {
  std::vector<Pt> dirs;
  std::vector<double> weights;  // sum to 1
};

const AngularSet& angular_set(int d, int n_angular) {
  thread_local int last_d = 0, last_n = 0;
  thread_local AngularSet set;
  if (last_d == d && last_n == n_angular) return set;
  set.dirs.clear();
  set.weights.clear();
  if (d == 2) {
    for (int k = 0; k < n_angular; ++k) {
      double a = 2.0 * M_PI * k / n_angular;
      set.dirs.push_back(pt(std::cos(a), std::sin(a)));
      set.weights.push_back(1.0 / n_angular);
    }
  } else {
    // product rule: Gauss-Legendre in cos(theta) x uniform phi
    const int nq = 4;
    const int nphi = std::max(4, n_angular / nq);
    // GL nodes on (-1,1)
    static const double gx[4] = {-0.861136311594053, -0.339981043584856,
                                 0.339981043584856, 0.861136311594053};
    static const double gw[4] = {0.347854845137454, 0.652145154862546,
                                 0.652145154862546, 0.347854845137454};
    for (int m = 0; m < nq; ++m) {
      double ct = gx[m];
      double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
      for (int k = 0; k < nphi; ++k) {
        double a = 2.0 * M_PI * k / nphi;
        set.dirs.push_back(pt(st * std::cos(a), st * std::sin(a), ct));
        set.weights.push_back(0.5 * gw[m] / nphi);
      }
    }
  }
  last_d = d;
  last_n = n_angular;
  return set;
}

Pt apply_frame(const Pt cols[3], const Pt& v, int d) {
  Pt out{};
  for (int i = 0; i < d; ++i) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += cols[j][i] * v[j];
    out[i] = s;
  }
  return out;
}

}  // namespace

void for_each_green_node(int d, double alpha, const Pt& center, double radius,
                         const WosParams& params, Rng& rng,
                         const std::function<void(const Pt&, double)>& visit) {
  const auto& rule = ball::green_quad_rule(d, alpha, params.quad_radial);
  const auto& ang = angular_set(d, params.quad_angular);
  Pt frame[3];
  random_frame(d, rng, frame);
  double ra = std::pow(radius, alpha);
  for (size_t i = 0; i < rule.factor.size(); ++i) {
    double ring = rule.factor[i] * radius;
    double w0 = ra * rule.weight[i];
    for (size_t k = 0; k < ang.dirs.size(); ++k) {
      Pt p = add(center, scale(apply_frame(frame, ang.dirs[k], d), ring));
      visit(p, w0 * ang.weights[k]);
    }
  }
}

ExitRecord exit_sample_wos(
    const ProcessModel& model, const Domain& domain, const Pt& x,
    const WosParams& params, Rng& rng,
    const std::vector<Functional>& functionals,
    const std::function<void(const Pt&, double, Rng&)>& step_observer) {
  if (model.spec.kind() != BernsteinKind::kStable)
    throw SamplingError("exit_sample_wos requires the stable kind");
  if (!domain.bounded())
    throw SamplingError("exit_sample_wos requires a bounded domain");
  if (!domain.contains(x))
    throw SamplingError("exit_sample_wos: start point not in domain");
  double alpha = model.spec.alpha();
  int d = model.d;
  ExitRecord rec;
  rec.accumulators.assign(functionals.size(), 0.0);
  Pt pos = x;
  while (domain.contains(pos)) {
    double r = domain.dist_to_complement(pos);
    if (!(r > 0.0)) break;  // boundary-grazing; treat as exit
    if (!functionals.empty()) {
      for_each_green_node(d, alpha, pos, r, params, rng,
                          [&](const Pt& p, double w) {
                            for (size_t i = 0; i < functionals.size(); ++i)
                              rec.accumulators[i] += w * functionals[i].f(p);
                          });
    }
    if (step_observer) step_observer(pos, r, rng);
    double z = ball::exit_radius_quantile(d, alpha, rng.uniform());
    double s = r * std::sqrt(1.0 + z);
    pos = add(pos, scale(rng.unit_sphere(d), s));
    if (++rec.steps > params.step_budget)
      throw SamplingError("exit_sample_wos: step budget exceeded");
  }
  rec.exit_position = pos;
  return rec;
}

Pt sample_ball_exit(double alpha, int d, const Pt& center, double radius,
                    Rng& rng) {
  double z = ball::exit_radius_quantile(d, alpha, rng.uniform());
  double s = radius * std::sqrt(1.0 + z);
  return add(center, scale(rng.unit_sphere(d), s));
}

double sample_exit_radius_rejection(double alpha, Rng& rng) {
  double rho = 0.5 * alpha;
  // two-piece power envelope: z^-rho on (0,1], z^{-1-rho} on (1,inf)
  double mass_a = 1.0 / (1.0 - rho);
  double mass_b = 1.0 / rho;
  while (true) {
    double z;
    if (rng.uniform() < mass_a / (mass_a + mass_b)) {
      z = std::pow(rng.uniform(), 1.0 / (1.0 - rho));
      if (rng.uniform() < 1.0 / (1.0 + z)) return z;
    } else {
      z = std::pow(rng.uniform(), -1.0 / rho);
      if (rng.uniform() < z / (1.0 + z)) return z;
    }
  }
}

EmpiricalMeasure harmonic_measure(const ProcessModel& model,
                                  const Domain& domain, const Pt& x,
                                  long n_paths, uint64_t seed,
                                  const HarmonicMeasureParams& params) {
  double escape = params.escape_radius;
  if (!domain.bounded() && escape <= 0.0)
    escape = 100.0 * std::max(1.0, domain.core_radius());
  auto make = [&](long i) {
    Rng rng(seed, stream_id(params.stream_tag, static_cast<uint64_t>(i)));
    if (params.method == ExitMethod::kWos)
      return exit_sample_wos(model, domain, x, params.wos, rng);
    TimestepParams tp;
    tp.dt = params.dt;
    tp.max_steps = params.max_steps;
    tp.escape_radius = domain.bounded()
                           ? std::numeric_limits<double>::infinity()
                           : escape;
    return exit_sample_timestep(model, domain, x, tp, rng);
  };
  auto records = run_paths(n_paths, params.workers, make);
  EmpiricalMeasure em;
  em.n = n_paths;
  long escaped = 0;
  for (const auto& r : records) {
    if (r.escaped_to_infinity)
      ++escaped;
    else
      em.points.push_back(r.exit_position);
  }
  em.escaped_fraction = static_cast<double>(escaped) / n_paths;
  return em;
}

CellEstimates occupation_histogram(const ProcessModel& model, const Domain& U,
                                   const Pt& x0, const Mesh& mesh, long n_paths,
                                   uint64_t seed, const WosParams& params,
                                   int workers, uint64_t stream_tag) {
  // cell lookup grid
  double R = U.bounding_radius();
  int d = model.d;
  int npa = static_cast<int>(std::llround(2.0 * R / mesh.h));
  std::vector<int> cell_of(static_cast<size_t>(std::pow(npa, d)), -1);
  auto cell_index = [&](const Pt& p) -> int {
    long idx = 0;
    for (int i = 0; i < d; ++i) {
      int k = static_cast<int>((p[i] + R) / mesh.h);
      if (k < 0 || k >= npa) return -1;
      idx = idx * npa + k;
    }
    return static_cast<int>(idx);
  };
  for (size_t c = 0; c < mesh.centers.size(); ++c) {
    int idx = cell_index(mesh.centers[c]);
    if (idx >= 0) cell_of[static_cast<size_t>(idx)] = static_cast<int>(c);
  }

  const long block = 256;
  long n_blocks = (n_paths + block - 1) / block;
  size_t nc = mesh.centers.size();
  std::vector<double> bsum(static_cast<size_t>(n_blocks) * nc, 0.0);
  std::vector<double> bsq(static_cast<size_t>(n_blocks) * nc, 0.0);
  std::exception_ptr err = nullptr;

#ifdef _OPENMP
  int nt = workers > 0 ? workers : omp_get_max_threads();
#else
  int nt = 1;
  (void)workers;
  (void)nt;
#endif
#pragma omp parallel num_threads(nt)
  {
    std::vector<double> path_acc(nc, 0.0);
#pragma omp for schedule(dynamic, 1)
    for (long b = 0; b < n_blocks; ++b) {
      if (err) continue;
      try {
        double* sum = &bsum[static_cast<size_t>(b) * nc];
        double* sq = &bsq[static_cast<size_t>(b) * nc];
        long lo = b * block, hi = std::min(n_paths, (b + 1) * block);
        for (long i = lo; i < hi; ++i) {
          std::fill(path_acc.begin(), path_acc.end(), 0.0);
          Rng rng(seed, stream_id(stream_tag, static_cast<uint64_t>(i)));
          auto observer = [&](const Pt& center, double radius, Rng& r) {
            for_each_green_node(d, model.spec.alpha(), center, radius, params,
                                r, [&](const Pt& p, double w) {
                                  int gi = cell_index(p);
                                  if (gi < 0) return;
                                  int c = cell_of[static_cast<size_t>(gi)];
                                  if (c >= 0)
                                    path_acc[static_cast<size_t>(c)] += w;
                                });
          };
          exit_sample_wos(model, U, x0, params, rng, {}, observer);
          for (size_t c = 0; c < nc; ++c) {
            sum[c] += path_acc[c];
            sq[c] += path_acc[c] * path_acc[c];
          }
        }
      } catch (...) {
#pragma omp critical
        if (!err) err = std::current_exception();
      }
    }
  }
  if (err) std::rethrow_exception(err);

  CellEstimates out;
  out.n = n_paths;
  out.value.assign(nc, 0.0);
  out.std_error.assign(nc, 0.0);
  for (size_t c = 0; c < nc; ++c) {
    double s = 0.0, q = 0.0;
    for (long b = 0; b < n_blocks; ++b) {
      s += bsum[static_cast<size_t>(b) * nc + c];
      q += bsq[static_cast<size_t>(b) * nc + c];
    }
    double mean = s / n_paths;
    double var = std::max(0.0, q / n_paths - mean * mean);
    out.value[c] = mean / mesh.cell_volume;
    out.std_error[c] = std::sqrt(var / n_paths) / mesh.cell_volume;
  }
  return out;
}

double wos_green_pointwise_onepath(const ProcessModel& model,
                                   const Domain& domain, const Pt& x,
                                   const Pt& v, const WosParams& params,
                                   Rng& rng) {
  double total = 0.0;
  auto observer = [&](const Pt& center, double radius, Rng&) {
    if (dist(v, center, model.d) < radius)
      total += ball::green_function(model.spec.alpha(), model.d, radius,
                                    Pt{}, sub(v, center));
  };
  exit_sample_wos(model, domain, x, params, rng, {}, observer);
  return total;
}

}  // namespace sbm
