#include "sbmpot/verify.hpp"

#include <algorithm>
#include <cmath>

#include "sbmpot/quadrature.hpp"

namespace sbm {

namespace {

struct RatioEstimate {
  double value = 0.0;
  double rel_se = 0.0;
};

// ratio of two means evaluated on the same exit samples (delta method with
// covariance)
RatioEstimate paired_ratio(const std::vector<double>& a,
                           const std::vector<double>& b) {
  double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double va = 0, vb = 0, cab = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
    cab += (a[i] - ma) * (b[i] - mb);
  }
  va /= n * n;
  vb /= n * n;
  cab /= n * n;
  RatioEstimate r;
  if (mb <= 0.0) {
    r.value = std::numeric_limits<double>::infinity();
    r.rel_se = std::numeric_limits<double>::infinity();
    return r;
  }
  r.value = ma / mb;
  double rel2 = va / (ma * ma) + vb / (mb * mb) - 2.0 * cab / (ma * mb);
  r.rel_se = std::sqrt(std::max(rel2, 0.0));
  return r;
}

}  // namespace

Estimate check_mean_value(const ProcessModel& model, const Domain& domain,
                          const std::function<double(const Pt&)>& f,
                          const OuterCharge& charge, const Pt& u_center,
                          double u_radius, const Pt& x, long n_paths,
                          uint64_t seed, int workers, uint64_t stream_tag) {
  int d = model.d;
  Domain U = Domain::ball(u_center, u_radius, d);
  if (!U.contains(x)) throw SamplingError("check_mean_value: x not in U");
  if (domain.signed_dist(add(u_center, pt(u_radius, 0))) > -1e-9 &&
      domain.dist_to_complement(u_center) < u_radius)
    throw SamplingError("check_mean_value: U not compactly inside the domain");

  double charge_part = 0.0;
  if (!charge.empty())
    charge_part =
        ball_poisson_integral(model.spec.alpha(), d, u_center, u_radius, x, charge);

  auto make = [&](long i) {
    Rng rng(seed, stream_id(stream_tag, static_cast<uint64_t>(i)));
    return exit_sample_wos(model, U, x, WosParams{}, rng);
  };
  auto records = run_paths(n_paths, workers, make);
  double s = 0, q = 0;
  for (const auto& r : records) {
    double v = domain.contains(r.exit_position) ? f(r.exit_position) : 0.0;
    s += v;
    q += v * v;
  }
  double n = static_cast<double>(n_paths);
  double mean = s / n;
  double var = std::max(0.0, q / n - mean * mean);
  Estimate out;
  out.value = f(x) - charge_part - mean;
  out.std_error = std::sqrt(var / n);
  out.n = n_paths;
  out.method = Method::kHybrid;
  return out;
}

namespace {

struct MeanValueGeometry {
  Pt u_center;
  double u_radius;
  Pt x;
};

std::vector<MeanValueGeometry> sample_geometries(int d, int count,
                                                 uint64_t seed) {
  Rng rng(seed, stream_id(99, 0));
  std::vector<MeanValueGeometry> out;
  while (static_cast<int>(out.size()) < count) {
    Pt c{};
    for (int i = 0; i < d; ++i) c[i] = 0.9 * (2.0 * rng.uniform() - 1.0);
    double nc = norm(c, d);
    if (nc > 0.45) continue;
    double ru = 0.2 + 0.25 * rng.uniform();
    if (nc + ru > 0.9) continue;
    Pt x = c;
    Pt off = rng.unit_sphere(d);
    double t = 0.5 * ru * rng.uniform();
    x = add(c, scale(off, t));
    out.push_back({c, ru, x});
  }
  return out;
}

}  // namespace

MeanValueReport mean_value_suite(const VerifyOptions& opts) {
  ProcessModel model = make_model(BernsteinSpec::stable(opts.alpha), opts.d);
  Domain D = Domain::ball(Pt{}, 1.0, opts.d);
  long n = static_cast<long>(opts.n_paths * opts.scale);

  OuterCharge ann;
  ann.density = OuterCharge::RadialDensity{{1.25, 2.0}, {1.0}};
  BallPoissonRadial prad =
      BallPoissonRadial::build(opts.alpha, opts.d, 1.0, *ann.density);
  Pt z = pt(1.0, 0.0);
  auto martin_f = [&](const Pt& p) {
    return ball::martin_kernel_boundary(opts.alpha, opts.d, 1.0, p, Pt{}, z);
  };
  OuterCharge lebesgue;
  lebesgue.density = OuterCharge::RadialDensity{{1.0, 400.0}, {1.0}};
  OuterCharge none;

  struct Family {
    std::string label;
    std::function<double(const Pt&)> f;
    const OuterCharge* charge;
  };
  std::vector<Family> families{
      {"poisson_integral", [&](const Pt& p) { return prad.at(p); }, &ann},
      {"martin_kernel", martin_f, &none},
      {"constant", [](const Pt&) { return 1.0; }, &lebesgue},
  };

  MeanValueReport rep;
  rep.pass = true;
  auto geoms = sample_geometries(opts.d, 5, opts.seed);
  uint64_t tag = 40;
  for (const auto& fam : families) {
    for (const auto& g : geoms) {
      Estimate res = check_mean_value(model, D, fam.f, *fam.charge, g.u_center,
                                      g.u_radius, g.x, n, opts.seed,
                                      opts.workers, tag++);
      MeanValueCase c;
      c.label = fam.label;
      c.x = g.x;
      c.u_center = g.u_center;
      c.u_radius = g.u_radius;
      c.residual = res.value;
      c.combined_se = res.std_error;
      c.pass = std::abs(res.value) <= 4.0 * res.std_error + 1e-4;
      rep.pass = rep.pass && c.pass;
      rep.cases.push_back(c);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

struct ChargeValue {
  Estimate at_x1;
  Estimate at_x2;
};

// evaluates a density charge at two points with one WoS exit batch per point
ChargeValue mc_density_pair(const ProcessModel& model, const Domain& D,
                            const OuterCharge& charge, const Pt& x1,
                            const Pt& x2, long n_paths, uint64_t seed,
                            uint64_t tag, int workers) {
  ChargeValue out;
  const Pt* xs[2] = {&x1, &x2};
  Estimate* es[2] = {&out.at_x1, &out.at_x2};
  for (int k = 0; k < 2; ++k) {
    auto make = [&](long i) {
      Rng rng(seed, stream_id(tag + k, static_cast<uint64_t>(i)));
      return exit_sample_wos(model, D, *xs[k], WosParams{}, rng);
    };
    auto records = run_paths(n_paths, workers, make);
    double s = 0, q = 0;
    for (const auto& r : records) {
      double v = charge.density_at(r.exit_position, model.d);
      s += v;
      q += v * v;
    }
    double n = static_cast<double>(n_paths);
    double mean = s / n;
    es[k]->value = mean;
    es[k]->std_error = std::sqrt(std::max(0.0, q / n - mean * mean) / n);
    es[k]->n = n_paths;
    es[k]->method = Method::kMcWos;
  }
  return out;
}

}  // namespace

BhpReport check_bhp(const VerifyOptions& opts, double R, int n_config) {
  ProcessModel model = make_model(BernsteinSpec::stable(opts.alpha), opts.d);
  int d = opts.d;
  std::vector<Domain> domains{
      Domain::ball(Pt{}, 0.8 * R, d),
      Domain::ball(pt(0.15 * R, 0.0), 0.6 * R, d),
      Domain::subtract(Domain::ball(Pt{}, 0.9 * R, d),
                       Domain::ball(pt(0.45 * R, 0.0), 0.25 * R, d)),
      Domain::unite(Domain::ball(pt(-0.3 * R, 0.0), 0.45 * R, d),
                    Domain::ball(pt(0.3 * R, 0.0), 0.45 * R, d)),
      Domain::box(pt(-0.55 * R, -0.55 * R, -0.55 * R),
                  pt(0.55 * R, 0.55 * R, 0.55 * R), d),
  };
  long n_mc = static_cast<long>(opts.n_paths * opts.scale);

  auto run_config = [&](int k) -> BhpRow {
    Rng rng(opts.seed, stream_id(50, static_cast<uint64_t>(k)));
    int di = k % static_cast<int>(domains.size());
    const Domain& D = domains[static_cast<size_t>(di)];
    Pt bc{};
    double br = 0.0;
    bool is_ball = D.as_ball(bc, br);

    auto sample_point = [&]() {
      while (true) {
        Pt p{};
        for (int i = 0; i < d; ++i)
          p[i] = 0.5 * R * (2.0 * rng.uniform() - 1.0);
        if (norm(p, d) < 0.5 * R && D.contains(p)) return p;
      }
    };
    Pt x1 = sample_point();
    Pt x2 = sample_point();

    // charges on B_R^c
    auto annulus = [&](double lo, double hi) {
      OuterCharge c;
      c.density = OuterCharge::RadialDensity{{lo, hi}, {1.0}};
      return c;
    };
    double lo1 = R * (1.05 + rng.uniform()), hi1 = lo1 + R * (0.5 + rng.uniform());
    double lo2 = R * (1.05 + 2.0 * rng.uniform()),
           hi2 = lo2 + R * (0.5 + 2.0 * rng.uniform());
    OuterCharge rho_charge = annulus(lo1, hi1);
    OuterCharge lam_charge = annulus(lo2, hi2);
    if (is_ball) {
      // exercise atoms on the quadrature path
      Pt dir = rng.unit_sphere(d);
      rho_charge.atoms.push_back({scale(dir, R * (1.2 + rng.uniform())), 1.0});
    }

    BhpRow row;
    row.domain_idx = di;
    if (is_ball) {
      double r11 = ball_poisson_integral(opts.alpha, d, bc, br, x1, rho_charge);
      double r21 = ball_poisson_integral(opts.alpha, d, bc, br, x2, rho_charge);
      double l12 = ball_poisson_integral(opts.alpha, d, bc, br, x2, lam_charge);
      double l11 = ball_poisson_integral(opts.alpha, d, bc, br, x1, lam_charge);
      row.cross_ratio = (r11 * l12) / (r21 * l11);
      row.std_error = 0.0;
    } else {
      ChargeValue rv = mc_density_pair(model, D, rho_charge, x1, x2, n_mc,
                                       opts.seed, 60 + 4 * k, opts.workers);
      ChargeValue lv = mc_density_pair(model, D, lam_charge, x1, x2, n_mc,
                                       opts.seed, 62 + 4 * k, opts.workers);
      row.cross_ratio = (rv.at_x1.value * lv.at_x2.value) /
                        (rv.at_x2.value * lv.at_x1.value);
      double rel = 0.0;
      for (const Estimate* e :
           {&rv.at_x1, &rv.at_x2, &lv.at_x1, &lv.at_x2}) {
        double r = e->std_error / std::max(e->value, 1e-300);
        rel += r * r;
      }
      row.std_error = row.cross_ratio * std::sqrt(rel);
    }
    return row;
  };

  BhpReport rep;
  double mx1 = 0.0, mx2 = 0.0;
  bool finite = true;
  for (int k = 0; k < 2 * n_config; ++k) {
    BhpRow row = run_config(k);
    finite = finite && std::isfinite(row.cross_ratio);
    if (k < n_config) {
      rep.rows.push_back(row);
      mx1 = std::max(mx1, row.cross_ratio);
    }
    mx2 = std::max(mx2, row.cross_ratio);
  }
  rep.max_ratio = mx1;
  rep.max_ratio_doubled = mx2;
  rep.doubling_ratio = mx2 / std::max(mx1, 1e-300);
  rep.all_finite = finite;
  rep.pass = finite && rep.doubling_ratio < 1.5;
  return rep;
}

// ---------------------------------------------------------------------------

ROReport oscillation_sweep(const VerifyOptions& opts, double R, double eta,
                           int n_deltas, int cloud_size) {
  ProcessModel model = make_model(BernsteinSpec::stable(opts.alpha), opts.d);
  int d = opts.d;
  std::vector<Domain> domains{
      Domain::ball(Pt{}, 0.8 * R, d),
      Domain::subtract(Domain::ball(Pt{}, 0.85 * R, d),
                       Domain::ball(pt(0.4 * R, 0.0), 0.2 * R, d)),
      Domain::ball(pt(0.45 * R, 0.0), 0.3 * R, d),
  };
  auto annulus = [&](double lo, double hi, double v) {
    OuterCharge c;
    c.density = OuterCharge::RadialDensity{{lo, hi}, {v}};
    return c;
  };
  std::vector<std::pair<OuterCharge, OuterCharge>> pairs{
      {annulus(1.1 * R, 2.0 * R, 1.0), annulus(2.0 * R, 4.0 * R, 1.0)},
      {annulus(1.05 * R, 1.4 * R, 1.0), annulus(3.0 * R, 6.0 * R, 1.0)},
      {annulus(1.2 * R, 1.6 * R, 2.0), annulus(1.2 * R, 1.6 * R, 0.5)},
  };

  ROReport rep;
  rep.eta_target = eta;
  for (int j = 0; j < n_deltas; ++j)
    rep.delta_grid.push_back(R / std::pow(2.0, j + 1));
  long n_mc = static_cast<long>(opts.n_paths * opts.scale / 2);

  int config_id = 0;
  for (size_t di = 0; di < domains.size(); ++di) {
    const Domain& D = domains[di];
    Pt bc{};
    double br = 0.0;
    bool is_ball = D.as_ball(bc, br);
    auto cloud = halton_cloud(D, cloud_size, rep.delta_grid.front());
    for (size_t pi = 0; pi < pairs.size(); ++pi) {
      // per-point ratio estimates, shared across deltas (nested clouds)
      std::vector<double> ratio(cloud.size());
      std::vector<double> rel_se(cloud.size(), 0.0);
      for (size_t c = 0; c < cloud.size(); ++c) {
        if (is_ball) {
          double p1 = ball_poisson_integral(opts.alpha, d, bc, br, cloud[c],
                                            pairs[pi].first);
          double p2 = ball_poisson_integral(opts.alpha, d, bc, br, cloud[c],
                                            pairs[pi].second);
          ratio[c] = p1 / p2;
        } else {
          auto make = [&](long i) {
            Rng rng(opts.seed,
                    stream_id(70 + 7 * config_id + 131 * c,
                              static_cast<uint64_t>(i)));
            return exit_sample_wos(model, D, cloud[c], WosParams{}, rng);
          };
          auto records = run_paths(n_mc, opts.workers, make);
          std::vector<double> a(records.size()), b(records.size());
          for (size_t i = 0; i < records.size(); ++i) {
            a[i] = pairs[pi].first.density_at(records[i].exit_position, d);
            b[i] = pairs[pi].second.density_at(records[i].exit_position, d);
          }
          RatioEstimate re = paired_ratio(a, b);
          ratio[c] = re.value;
          rel_se[c] = re.rel_se;
        }
      }
      SweepConfig cfg;
      cfg.domain_idx = static_cast<int>(di);
      cfg.pair_idx = static_cast<int>(pi);
      for (double delta : rep.delta_grid) {
        double sup = 0.0, inf = std::numeric_limits<double>::infinity();
        double sup_se = 0.0, inf_se = 0.0;
        bool any = false;
        for (size_t c = 0; c < cloud.size(); ++c) {
          if (norm(cloud[c], d) >= delta) continue;
          any = true;
          if (ratio[c] > sup) {
            sup = ratio[c];
            sup_se = rel_se[c];
          }
          if (ratio[c] < inf) {
            inf = ratio[c];
            inf_se = rel_se[c];
          }
        }
        if (!any) {
          cfg.ro.push_back(1.0);  // empty-set convention
          cfg.resolution.push_back(0.0);
        } else {
          double ro = sup / inf;
          cfg.ro.push_back(ro);
          cfg.resolution.push_back(2.0 * ro * std::hypot(sup_se, inf_se));
        }
      }
      rep.configs.push_back(cfg);
      ++config_id;
    }
  }

  for (size_t j = 0; j < rep.delta_grid.size(); ++j) {
    double sup = 0.0;
    int arg = -1;
    double res = 0.0;
    for (size_t c = 0; c < rep.configs.size(); ++c) {
      if (rep.configs[c].ro[j] > sup) {
        sup = rep.configs[c].ro[j];
        res = rep.configs[c].resolution[j];
        arg = static_cast<int>(c);
      }
    }
    rep.sup_ro.push_back(sup);
    rep.argmax_config.push_back(arg);
    rep.resolution.push_back(res);
  }
  for (size_t j = 0; j < rep.delta_grid.size(); ++j) {
    bool all = true;
    for (const auto& cfg : rep.configs)
      all = all && cfg.ro[j] <= 1.0 + eta + cfg.resolution[j];
    if (all) {
      rep.uniform_pass = true;
      rep.passing_index = static_cast<int>(j);
      break;
    }
  }
  return rep;
}

ROReport martin_oscillation_sweep(const VerifyOptions& opts, double rho,
                                  double eta, int n_radii, int cloud_size) {
  int d = opts.d;
  double alpha = opts.alpha;
  make_model(BernsteinSpec::stable(alpha), d);  // validates

  struct Fam {
    Pt center;
    double radius;
  };
  std::vector<Fam> fams{
      {pt(0.6, 0.0), 0.6},
      {pt(1.0, 0.0), 1.0},
      {pt(0.5, 0.5), std::sqrt(0.5)},
      {pt(0.2, 0.0), 1.0},  // contains the origin
      {pt(3.0, 0.0), 1.0},  // away: D cap B_r is empty
  };

  ROReport rep;
  rep.eta_target = eta;
  for (int j = 0; j < n_radii; ++j)
    rep.delta_grid.push_back(rho / std::pow(2.0, j + 1));

  for (size_t fi = 0; fi < fams.size(); ++fi) {
    Domain D = Domain::ball(fams[fi].center, fams[fi].radius, d);
    Pt x0 = fams[fi].center;
    // x in D away from the origin neighbourhood
    Pt away = norm(fams[fi].center, d) > 1e-12
                  ? scale(fams[fi].center, 1.0 / norm(fams[fi].center, d))
                  : pt(1.0, 0.0);
    Pt x = add(fams[fi].center, scale(away, 0.45 * fams[fi].radius));
    if (norm(x, d) <= rho) continue;  // violates the schedule premise

    auto cloud = halton_cloud(D, cloud_size, rep.delta_grid.front());
    std::vector<double> ratio(cloud.size());
    for (size_t c = 0; c < cloud.size(); ++c) {
      Pt y = sub(cloud[c], fams[fi].center);
      double num = ball::green_function(alpha, d, fams[fi].radius,
                                        sub(x, fams[fi].center), y);
      double den = ball::green_function(alpha, d, fams[fi].radius,
                                        sub(x0, fams[fi].center), y);
      ratio[c] = num / den;
    }
    SweepConfig cfg;
    cfg.domain_idx = static_cast<int>(fi);
    cfg.pair_idx = 0;
    for (double r : rep.delta_grid) {
      double sup = 0.0, inf = std::numeric_limits<double>::infinity();
      bool any = false;
      for (size_t c = 0; c < cloud.size(); ++c) {
        if (norm(cloud[c], d) >= r) continue;
        any = true;
        sup = std::max(sup, ratio[c]);
        inf = std::min(inf, ratio[c]);
      }
      cfg.ro.push_back(any ? sup / inf : 1.0);
      cfg.resolution.push_back(0.0);
    }
    rep.configs.push_back(cfg);
  }

  for (size_t j = 0; j < rep.delta_grid.size(); ++j) {
    double sup = 0.0;
    int arg = -1;
    for (size_t c = 0; c < rep.configs.size(); ++c) {
      if (rep.configs[c].ro[j] > sup) {
        sup = rep.configs[c].ro[j];
        arg = static_cast<int>(c);
      }
    }
    rep.sup_ro.push_back(sup);
    rep.argmax_config.push_back(arg);
    rep.resolution.push_back(0.0);
  }
  for (size_t j = 0; j < rep.delta_grid.size(); ++j) {
    bool all = true;
    for (const auto& cfg : rep.configs) all = all && cfg.ro[j] <= 1.0 + eta;
    if (all) {
      rep.uniform_pass = true;
      rep.passing_index = static_cast<int>(j);
      break;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------

RoundTripReport representation_roundtrip(const VerifyOptions& opts,
                                         double atom_mass) {
  if (opts.d != 2)
    throw ModelError("representation_roundtrip runs in d = 2");
  ProcessModel model = make_model(BernsteinSpec::stable(opts.alpha), 2);
  Domain D = Domain::ball(Pt{}, 1.0, 2);
  Pt x0{};

  OuterCharge ann;
  ann.density = OuterCharge::RadialDensity{{1.25, 2.0}, {1.0}};
  BallPoissonRadial prad =
      BallPoissonRadial::build(opts.alpha, 2, 1.0, *ann.density);
  Pt z = pt(std::cos(0.3), std::sin(0.3));
  auto f = [&](const Pt& p) {
    return prad.at(p) + atom_mass * ball::martin_kernel_boundary(
                                        opts.alpha, 2, 1.0, p, x0, z);
  };

  RoundTripReport rep;
  rep.input_mass = atom_mass;

  // (i) mass recovery: f(x0) minus an independent MC Poisson integral
  EstimatorOptions eo;
  eo.n_paths = static_cast<long>(5 * opts.n_paths * opts.scale);
  eo.seed = opts.seed;
  eo.workers = opts.workers;
  eo.stream_tag = 80;
  Estimate pmc = poisson_integral(model, D, ann, x0, eo);
  rep.recovered_mass.value = f(x0) - pmc.value;
  rep.recovered_mass.std_error = pmc.std_error;
  rep.recovered_mass.n = pmc.n;
  rep.recovered_mass.method = Method::kHybrid;
  rep.mass_pass =
      std::abs(rep.recovered_mass.value - atom_mass) <=
      std::max(0.05 * atom_mass, 4.0 * rep.recovered_mass.std_error);

  // Martin normalization at x0 through the kernel machinery
  BoundaryMeasure mu;
  mu.atoms.push_back({BoundaryPoint{z, false}, atom_mass});
  MartinOptions mo;
  mo.seed = opts.seed;
  mo.workers = opts.workers;
  rep.normalization =
      martin_integral(model, D, mu, std::nullopt, x0, x0, mo, true);

  // (ii) boundary trace of f concentrates at z
  Rng bin_rng(opts.seed, stream_id(81, 0));
  BoundaryBins bins = make_boundary_bins(D, 16, bin_rng);
  Exhaustion ex = default_exhaustion(D, 5);
  TraceOptions to;
  to.seed = opts.seed;
  to.workers = opts.workers;
  to.tolerance = 0.1;
  TraceEstimate tr = boundary_trace(model, D, f, ex, x0, bins, to);
  for (const auto& st : tr.stages) rep.trace_stage_masses.push_back(st.total_mass);
  const TraceStage& last = tr.stages.back();
  rep.trace_total = last.total_mass;
  int zbin = bins.find(z);
  rep.trace_share_at_z =
      last.total_mass > 0.0
          ? last.bin_masses[static_cast<size_t>(zbin)] / last.total_mass
          : 0.0;
  rep.trace_pass = rep.trace_share_at_z >= 0.95 &&
                   std::abs(rep.trace_total - atom_mass) <= 0.05 * atom_mass;

  // (iii) mean-value residuals of (f, lambda)
  auto geoms = sample_geometries(2, 3, opts.seed + 5);
  rep.mean_value_pass = true;
  uint64_t tag = 90;
  for (const auto& g : geoms) {
    Estimate res =
        check_mean_value(model, D, f, ann, g.u_center, g.u_radius, g.x,
                         static_cast<long>(opts.n_paths * opts.scale),
                         opts.seed, opts.workers, tag++);
    RoundTripReport::Residual rr;
    rr.x = g.x;
    rr.residual = res.value;
    rr.combined_se = res.std_error;
    rep.pointwise.push_back(rr);
    rep.mean_value_pass =
        rep.mean_value_pass && std::abs(res.value) <= 4.0 * res.std_error + 1e-4;
  }
  rep.pass = rep.mass_pass && rep.trace_pass && rep.mean_value_pass;
  return rep;
}

TraceVanishingReport trace_vanishing_suite(const VerifyOptions& opts) {
  if (opts.d != 2)
    throw ModelError("trace_vanishing_suite runs in d = 2");
  ProcessModel model = make_model(BernsteinSpec::stable(opts.alpha), 2);
  Domain D = Domain::ball(Pt{}, 1.0, 2);
  Pt x0{};
  Rng bin_rng(opts.seed, stream_id(82, 0));
  BoundaryBins bins = make_boundary_bins(D, 16, bin_rng);
  Exhaustion ex = default_exhaustion(D, 5);
  TraceOptions to;
  to.seed = opts.seed;
  to.workers = opts.workers;
  to.tolerance = 0.1;

  OuterCharge ann;
  ann.density = OuterCharge::RadialDensity{{1.25, 2.0}, {1.0}};
  BallPoissonRadial prad =
      BallPoissonRadial::build(opts.alpha, 2, 1.0, *ann.density);

  TraceVanishingReport rep;
  TraceEstimate t1 = boundary_trace(model, D, [](const Pt&) { return 1.0; },
                                    ex, x0, bins, to);
  TraceEstimate t2 = boundary_trace(
      model, D, [&](const Pt& p) { return prad.at(p); }, ex, x0, bins, to);
  for (const auto& st : t1.stages) rep.masses_constant.push_back(st.total_mass);
  for (const auto& st : t2.stages) rep.masses_poisson.push_back(st.total_mass);

  auto check = [](const std::vector<double>& m) {
    if (m.size() < 5) return false;
    bool mono = true;
    for (size_t i = 1; i < m.size(); ++i) mono = mono && m[i] <= m[i - 1] * (1.0 + 1e-9);
    return mono && m[4] < 0.05 * m[0];
  };
  rep.pass = check(rep.masses_constant) && check(rep.masses_poisson);
  return rep;
}

}  // namespace sbm
