#include "sbmpot/martin.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sbmpot/quadrature.hpp"

namespace sbm {

double BoundaryMeasure::total_mass() const {
  double m = 0.0;
  for (const auto& a : atoms) m += a.mass;
  for (double b : bin_masses) m += b;
  return m;
}

namespace {

struct SlopeFit {
  double slope = 0.0;
  double r2 = 0.0;
  bool ok = false;
};

SlopeFit fit_loglog(const std::vector<std::pair<double, double>>& pts) {
  SlopeFit fit;
  std::vector<double> xs, ys;
  for (const auto& [a, b] : pts) {
    if (a > 0.0 && b > 0.0) {
      xs.push_back(std::log(a));
      ys.push_back(std::log(b));
    }
  }
  size_t n = xs.size();
  if (n < 3) return fit;
  double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx <= 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  fit.ok = true;
  return fit;
}

}  // namespace

AccessibilityVerdict classify_accessible(const ProcessModel& model,
                                         const Domain& domain,
                                         const BoundaryPoint& z, const Pt& x0,
                                         const std::vector<double>& schedule,
                                         const MartinOptions& opts) {
  if (!domain.contains(x0))
    throw SamplingError("classify_accessible: x0 not in domain");
  AccessibilityVerdict out;
  out.point = z;

  if (z.at_infinity) {
    if (domain.bounded())
      throw ModelError(
          "classify_accessible: infinity is not a boundary point of a "
          "bounded domain");
    // escape probability by time stepping with an escape radius
    double esc_radius = 100.0 * std::max(1.0, domain.core_radius());
    long escaped = 0;
    auto make = [&](long i) {
      Rng rng(opts.seed, stream_id(opts.stream_tag, static_cast<uint64_t>(i)));
      TimestepParams tp;
      tp.dt = opts.dt;
      tp.escape_radius = esc_radius;
      return exit_sample_timestep(model, domain, x0, tp, rng);
    };
    auto records = run_paths(opts.n_paths, opts.workers, make);
    for (const auto& r : records)
      if (r.escaped_to_infinity) ++escaped;
    double p = static_cast<double>(escaped) / opts.n_paths;
    double se = std::sqrt(std::max(p * (1.0 - p), 1.0 / opts.n_paths) /
                          opts.n_paths);
    out.escape_probability = p;
    out.escape_std_error = se;
    // exit-time growth along truncations
    for (size_t k = 0; k < schedule.size(); ++k) {
      Domain trunc = Domain::intersect(
          domain, Domain::ball(Pt{}, schedule[k], domain.dim()));
      EstimatorOptions eo;
      eo.n_paths = std::max<long>(2000, opts.n_paths / 4);
      eo.seed = opts.seed;
      eo.workers = opts.workers;
      eo.stream_tag = opts.stream_tag + 31 + k;
      eo.method = model.spec.kind() == BernsteinKind::kStable
                      ? ExitMethod::kWos
                      : ExitMethod::kTimestep;
      eo.dt = opts.dt;
      Estimate et = green_potential(model, trunc,
                                    [](const Pt&) { return 1.0; }, x0, eo);
      out.evidence.emplace_back(schedule[k], et.value);
    }
    if (p > 4.0 * se) {
      out.verdict = Verdict::kAccessible;
      out.note = "positive escape probability at 4 standard errors";
      return out;
    }
    auto fit = fit_loglog(out.evidence);
    out.fitted_slope = fit.slope;
    out.r_squared = fit.r2;
    if (fit.ok && fit.slope > 0.1 && fit.r2 > 0.9) {
      out.verdict = Verdict::kAccessible;
      out.note = "expected exit time grows along truncations";
    } else if (out.evidence.size() >= 2) {
      double last = out.evidence.back().second;
      double prev = out.evidence[out.evidence.size() - 2].second;
      if (std::abs(last - prev) < 0.02 * std::abs(last)) {
        out.verdict = Verdict::kInaccessible;
        out.note = "expected exit time is Cauchy along truncations";
      }
    }
    return out;
  }

  // finite boundary point: truncated kernel integrals along epsilon
  std::vector<Functional> fns;
  for (double eps : schedule) {
    fns.push_back({"trunc", [&model, z, eps](const Pt& w) {
                     double s = dist(w, z.p, model.d);
                     return s > eps ? jumping_kernel(model, s) : 0.0;
                   }});
  }
  bool stable = model.spec.kind() == BernsteinKind::kStable;
  auto make = [&](long i) {
    Rng rng(opts.seed, stream_id(opts.stream_tag, static_cast<uint64_t>(i)));
    if (stable && domain.bounded())
      return exit_sample_wos(model, domain, x0, opts.wos, rng, fns);
    TimestepParams tp;
    tp.dt = opts.dt;
    return exit_sample_timestep(model, domain, x0, tp, rng, fns);
  };
  auto records = run_paths(opts.n_paths, opts.workers, make);
  std::vector<double> ses;
  for (size_t k = 0; k < schedule.size(); ++k) {
    double s = 0.0, q = 0.0;
    for (const auto& r : records) {
      s += r.accumulators[k];
      q += r.accumulators[k] * r.accumulators[k];
    }
    double mean = s / opts.n_paths;
    double var = std::max(0.0, q / opts.n_paths - mean * mean);
    out.evidence.emplace_back(schedule[k], mean);
    ses.push_back(std::sqrt(var / opts.n_paths));
  }
  auto fit = fit_loglog(out.evidence);
  out.fitted_slope = fit.slope;
  out.r_squared = fit.r2;
  if (fit.ok && fit.slope < -0.1 && fit.r2 > 0.9) {
    out.verdict = Verdict::kAccessible;
    out.note = "partial integrals grow with a fitted positive exponent";
    return out;
  }
  // Cauchy increments at the fine end of the schedule
  if (out.evidence.size() >= 3) {
    double last = out.evidence.back().second;
    double prev = out.evidence[out.evidence.size() - 2].second;
    double tolerance = 2.0 * (ses.back() + ses[ses.size() - 2]) +
                       0.02 * std::abs(last);
    if (std::abs(last - prev) < tolerance) {
      out.verdict = Verdict::kInaccessible;
      out.note = "partial integrals are Cauchy along the schedule";
      return out;
    }
  }
  out.verdict = Verdict::kInconclusive;
  out.note = "no clear divergence or convergence signal";
  return out;
}

namespace {

struct RatioLevel {
  double h;
  double ratio;
  double se;
};

Estimate richardson_ratio(std::vector<RatioLevel> levels) {
  // levels ordered coarse -> fine
  Estimate out;
  out.method = levels.back().se == 0.0 ? Method::kQuadrature : Method::kMcWos;
  size_t n = levels.size();
  if (n >= 2) {
    double a = levels[n - 2].ratio, b = levels[n - 1].ratio;
    double tol = 4.0 * std::hypot(levels[n - 2].se, levels[n - 1].se) +
                 1e-9 * std::abs(b);
    if (n >= 3) {
      double c = levels[n - 3].ratio;
      double d1 = a - c, d2 = b - a;
      bool monotone = d1 * d2 > 0.0 && std::abs(d2) < std::abs(d1);
      if (!monotone && std::abs(b - a) > tol)
        throw SamplingError("martin_kernel: non-convergent ratio");
      double g = levels[n - 3].h / levels[n - 2].h;
      double g2 = levels[n - 2].h / levels[n - 1].h;
      if (monotone && std::abs(g - g2) < 1e-9 * g) {
        double beta = std::log(d1 / d2) / std::log(g);
        double corr = d2 / (std::pow(g, beta) - 1.0);
        out.value = b - corr;
        out.std_error = std::hypot(levels[n - 1].se,
                                   std::abs(corr) / std::max(std::abs(d2), 1e-300) *
                                       std::hypot(levels[n - 1].se,
                                                  levels[n - 2].se));
        out.n = 1;
        return out;
      }
    } else if (std::abs(b - a) > tol) {
      throw SamplingError("martin_kernel: non-convergent ratio");
    }
  }
  out.value = levels.back().ratio;
  out.std_error = levels.back().se;
  out.n = 1;
  return out;
}

}  // namespace

Estimate martin_kernel(const ProcessModel& model, const Domain& domain,
                       const Pt& x, const BoundaryPoint& z, const Pt& x0,
                       const std::vector<double>& approach,
                       const MartinOptions& opts) {
  if (!domain.contains(x) || !domain.contains(x0))
    throw SamplingError("martin_kernel: x and x0 must lie in the domain");
  if (approach.empty()) throw SamplingError("martin_kernel: empty schedule");
  int d = model.d;
  if (dist(x, x0, d) == 0.0) {
    Estimate one;
    one.value = 1.0;
    one.method = Method::kQuadrature;
    one.n = 1;
    return one;
  }

  Pt bc{};
  double br = 0.0;
  bool ball_exact =
      model.spec.kind() == BernsteinKind::kStable && domain.as_ball(bc, br);

  std::vector<RatioLevel> levels;
  if (!z.at_infinity) {
    // inward direction from the numeric gradient of the signed distance
    Pt grad{};
    double eps = 1e-6 * std::max(1.0, norm(z.p, d));
    double s0 = domain.signed_dist(z.p);
    for (int i = 0; i < d; ++i) {
      Pt q = z.p;
      q[i] += eps;
      grad[i] = (domain.signed_dist(q) - s0) / eps;
    }
    double gn = norm(grad, d);
    if (gn < 1e-9) throw SamplingError("martin_kernel: degenerate normal");
    Pt inward = scale(grad, -1.0 / gn);

    for (double h : approach) {
      Pt v = add(z.p, scale(inward, h));
      if (!domain.contains(v)) continue;
      if (ball_exact) {
        double num = ball::green_function(model.spec.alpha(), d, br,
                                          sub(x, bc), sub(v, bc));
        double den = ball::green_function(model.spec.alpha(), d, br,
                                          sub(x0, bc), sub(v, bc));
        levels.push_back({h, num / den, 0.0});
      } else {
        // paired streams couple the two walks
        double sn = 0, sd_ = 0, qn = 0, qd = 0, cnd = 0;
        for (long i = 0; i < opts.n_paths; ++i) {
          Rng rng_n(opts.seed, stream_id(opts.stream_tag, static_cast<uint64_t>(i)));
          Rng rng_d(opts.seed, stream_id(opts.stream_tag, static_cast<uint64_t>(i)));
          double a = wos_green_pointwise_onepath(model, domain, x, v, opts.wos,
                                                 rng_n);
          double b = wos_green_pointwise_onepath(model, domain, x0, v, opts.wos,
                                                 rng_d);
          sn += a;
          sd_ += b;
          qn += a * a;
          qd += b * b;
          cnd += a * b;
        }
        double n = static_cast<double>(opts.n_paths);
        double mn = sn / n, md = sd_ / n;
        if (md <= 0.0) continue;
        double vn = std::max(0.0, qn / n - mn * mn) / n;
        double vd = std::max(0.0, qd / n - md * md) / n;
        double cv = (cnd / n - mn * md) / n;
        double ratio = mn / md;
        double var = ratio * ratio *
                     std::max(0.0, vn / (mn * mn) + vd / (md * md) -
                                       2.0 * cv / (mn * md));
        levels.push_back({h, ratio, std::sqrt(var)});
      }
    }
  } else {
    if (domain.bounded())
      throw ModelError("martin_kernel: infinity needs an unbounded domain");
    Pt dir = norm(x0, d) > 1e-12 ? scale(x0, 1.0 / norm(x0, d))
                                 : pt(1.0, 0.0, 0.0);
    for (double R : approach) {
      Pt v = scale(dir, R);
      if (!domain.contains(v)) continue;
      // occupation of a small cell around v by time stepping
      double cell_r = 0.05 * R;
      double vol = ball_volume(d) * std::pow(cell_r, d);
      auto occ = [&](const Pt& from, uint64_t tag) {
        double s = 0, q = 0;
        for (long i = 0; i < opts.n_paths; ++i) {
          Rng rng(opts.seed, stream_id(tag, static_cast<uint64_t>(i)));
          TimestepParams tp;
          tp.dt = opts.dt;
          tp.escape_radius = 10.0 * R;
          std::vector<Functional> fns{{"cell", [&](const Pt& p) {
                                         return dist(p, v, d) < cell_r
                                                    ? 1.0 / vol
                                                    : 0.0;
                                       }}};
          auto rec = exit_sample_timestep(model, domain, from, tp, rng, fns);
          s += rec.accumulators[0];
          q += rec.accumulators[0] * rec.accumulators[0];
        }
        double n = static_cast<double>(opts.n_paths);
        double mean = s / n;
        double var = std::max(0.0, q / n - mean * mean) / n;
        return std::make_pair(mean, std::sqrt(var));
      };
      auto [mn, en] = occ(x, opts.stream_tag);
      auto [md, ed] = occ(x0, opts.stream_tag);
      if (md <= 0.0) continue;
      double ratio = mn / md;
      double se = ratio * std::hypot(en / std::max(mn, 1e-300), ed / md);
      levels.push_back({1.0 / R, ratio, se});
    }
  }
  if (levels.empty())
    throw SamplingError("martin_kernel: no usable approach points");
  return richardson_ratio(std::move(levels));
}

Estimate martin_integral(const ProcessModel& model, const Domain& domain,
                         const BoundaryMeasure& mu,
                         const std::optional<BoundaryBins>& bins, const Pt& x,
                         const Pt& x0, const MartinOptions& opts,
                         bool accessibility_waiver) {
  Estimate total;
  total.method = Method::kQuadrature;
  double scale_len = domain.bounded() ? domain.bounding_radius() : 1.0;
  std::vector<double> approach;
  for (int k = 0; k < 5; ++k) approach.push_back(0.08 * scale_len / (1 << k));

  for (const auto& atom : mu.atoms) {
    if (atom.mass == 0.0) continue;
    if (!accessibility_waiver) {
      std::vector<double> schedule;
      if (atom.z.at_infinity) {
        for (int k = 0; k < 4; ++k)
          schedule.push_back(4.0 * scale_len * (1 << k));
      } else {
        for (int k = 0; k < 5; ++k)
          schedule.push_back(0.2 * scale_len / (1 << k));
      }
      auto verdict =
          classify_accessible(model, domain, atom.z, x0, schedule, opts);
      if (verdict.verdict == Verdict::kInaccessible)
        throw ModelError(
            "martin_integral: atom classified inaccessible (no waiver)");
    }
    std::vector<double> sched = approach;
    if (atom.z.at_infinity) {
      sched.clear();
      for (int k = 0; k < 4; ++k)
        sched.push_back(8.0 * scale_len * (1 << k));
    }
    Estimate k = martin_kernel(model, domain, x, atom.z, x0, sched, opts);
    k.value *= atom.mass;
    k.std_error *= atom.mass;
    total = combine_independent(total, k);
  }
  if (!mu.bin_masses.empty()) {
    if (!bins || bins->centers.size() != mu.bin_masses.size())
      throw ModelError("martin_integral: binned part without matching bins");
    for (size_t i = 0; i < mu.bin_masses.size(); ++i) {
      if (mu.bin_masses[i] == 0.0) continue;
      Estimate k = martin_kernel(model, domain, x,
                                 BoundaryPoint{bins->centers[i], false}, x0,
                                 approach, opts);
      k.value *= mu.bin_masses[i];
      k.std_error *= mu.bin_masses[i];
      total = combine_independent(total, k);
    }
  }
  return total;
}

// ---------------------------------------------------------------------------

namespace {

// stage measure on the concentric-ball fast path (stable, d = 2).
//
// Both angular integrals can develop spikes of width comparable to the stage
// margin (the jump kernel across a thin shell, and u itself when it is a
// Martin kernel), so the angular work is seeded with the known peak angles
// and refined adaptively; uniform grids would silently drop the spike mass.
TraceStage trace_stage_ball(const ProcessModel& model, const Domain& domain,
                            const std::function<double(const Pt&)>& u,
                            const Domain& stage_dom, int stage_id,
                            const Pt& center, double R, double rho,
                            const BoundaryBins& bins, const TraceOptions& opts) {
  (void)stage_dom;
  double alpha = model.spec.alpha();
  int d = model.d;
  double cj = stable_jump_constant(d, alpha);
  double expo = d + alpha;
  auto jfast = [cj, expo](double s) { return cj * std::pow(s, -expo); };
  double margin = R - rho;

  // angular hot spots of u on the shell midline
  std::vector<double> hot;
  {
    const int np = 2048;
    double smid = rho + 0.25 * margin;
    std::vector<double> vals(np);
    double vmax = 0.0;
    for (int k = 0; k < np; ++k) {
      double a = 2.0 * M_PI * k / np;
      vals[static_cast<size_t>(k)] =
          std::abs(u(add(center, pt(smid * std::cos(a), smid * std::sin(a)))));
      vmax = std::max(vmax, vals[static_cast<size_t>(k)]);
    }
    for (int k = 0; k < np && static_cast<int>(hot.size()) < 8; ++k) {
      size_t prev = static_cast<size_t>((k + np - 1) % np);
      size_t next = static_cast<size_t>((k + 1) % np);
      if (vals[static_cast<size_t>(k)] > 0.2 * vmax &&
          vals[static_cast<size_t>(k)] >= vals[prev] &&
          vals[static_cast<size_t>(k)] >= vals[next])
        hot.push_back(2.0 * M_PI * k / np);
    }
  }

  QuadOptions qo;
  qo.rel_tol = 1e-6;
  qo.max_intervals = 500;

  auto inner_at = [&](double ring, double theta_z) {
    Pt zp = add(center, pt(ring * std::cos(theta_z), ring * std::sin(theta_z)));
    double gap = std::max(rho - ring, 1e-14);

    // angular shell integral at |y| = rho + sig, peak-aware segmentation
    auto ring_integral = [&](double sig) {
      double s = rho + sig;
      auto fang = [&](double phi) {
        Pt y = add(center, pt(s * std::cos(phi), s * std::sin(phi)));
        return jfast(dist(zp, y, d)) * u(y);
      };
      double w = std::min(1.0, 16.0 * (gap + sig + margin) / rho);
      std::vector<double> bp{-M_PI, -0.5, -w, -0.125 * w, 0.125 * w, w, 0.5,
                             M_PI};
      for (double h : hot) {
        double rel = std::remainder(h - theta_z, 2.0 * M_PI);
        for (double off : {-0.02, -16.0 * margin / rho, 16.0 * margin / rho,
                           0.02})
          bp.push_back(std::clamp(rel + off, -M_PI, M_PI));
        bp.push_back(std::clamp(rel, -M_PI, M_PI));
      }
      std::sort(bp.begin(), bp.end());
      double a = 0.0;
      for (size_t b = 0; b + 1 < bp.size(); ++b) {
        if (bp[b + 1] - bp[b] < 1e-14) continue;
        a += integrate([&](double t) { return fang(theta_z + t); }, bp[b],
                       bp[b + 1], qo)
                 .value;
      }
      return a;
    };

    // inner layer: log-spaced in sig resolves the j boundary layer at sig ~ gap
    double total = 0.0;
    double sig_min = std::min(0.05 * gap, 1e-6 * margin);
    int nr = 3 * opts.inner_radial;
    double l0 = std::log(sig_min), l1 = std::log(0.5 * margin);
    double first_a = 0.0;
    for (int i = 0; i < nr; ++i) {
      double sig = std::exp(l0 + (l1 - l0) * (i + 0.5) / nr);
      double dlog = (l1 - l0) / nr;
      double a = ring_integral(sig);
      total += sig * dlog * (rho + sig) * a;
      if (i == 0) first_a = a;
    }
    total += sig_min * (rho + 0.5 * sig_min) * first_a;
    // outer edge: sig = margin - tau^2 tames the sqrt-type profiles of u there
    double tmax = std::sqrt(0.5 * margin);
    int nt = 32;
    for (int i = 0; i < nt; ++i) {
      double tau = tmax * (i + 0.5) / nt;
      double sig = margin - tau * tau;
      total += 2.0 * tau * (tmax / nt) * (rho + sig) * ring_integral(sig);
    }
    return total;
  };

  const auto& rule = ball::green_quad_rule(d, alpha, opts.radial_green);
  double ra = std::pow(rho, alpha);
  TraceStage st;
  st.stage = stage_id;
  st.bin_masses.assign(bins.centers.size(), 0.0);

  auto deposit = [&](double ring, double theta, double mass) {
    Pt zp = add(center, pt(ring * std::cos(theta), ring * std::sin(theta)));
    st.total_mass += mass;
    if (domain.dist_to_complement(zp) > opts.collar)
      st.interior_mass += mass;
    else
      st.bin_masses[static_cast<size_t>(bins.find(zp))] += mass;
  };

  for (size_t i = 0; i < rule.factor.size(); ++i) {
    double ring = rule.factor[i] * rho;
    double w0 = ra * rule.weight[i] / (2.0 * M_PI);
    double gap = std::max(rho - ring, 1e-14);

    // initial angular nodes: uniform plus windows around the hot spots
    std::vector<double> nodes;
    int base = std::max(24, opts.z_angular / 4);
    for (int k = 0; k <= base; ++k)
      nodes.push_back(2.0 * M_PI * k / base);
    for (double h : hot)
      for (double off :
           {-0.05, -4.0 * (gap + margin) / rho, 0.0,
            4.0 * (gap + margin) / rho, 0.05})
        nodes.push_back(std::fmod(h + off + 4.0 * M_PI, 2.0 * M_PI));
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end(),
                            [](double a, double b) { return b - a < 1e-12; }),
                nodes.end());
    if (nodes.back() < 2.0 * M_PI) nodes.push_back(2.0 * M_PI);

    // adaptive Simpson per segment; leaves deposit into bins
    struct Seg {
      double a, m, b, fa, fm, fb;
      int depth;
    };
    std::vector<Seg> work;
    std::vector<double> cache(nodes.size());
    for (size_t k = 0; k < nodes.size(); ++k) cache[k] = inner_at(ring, nodes[k]);
    double ring_scale = 0.0;
    for (size_t k = 0; k + 1 < nodes.size(); ++k)
      ring_scale += 0.5 * (cache[k] + cache[k + 1]) * (nodes[k + 1] - nodes[k]);
    double tol = 1e-3 * std::abs(ring_scale) + 1e-14;
    for (size_t k = 0; k + 1 < nodes.size(); ++k) {
      double a = nodes[k], b = nodes[k + 1];
      work.push_back(
          {a, 0.5 * (a + b), b, cache[k], inner_at(ring, 0.5 * (a + b)),
           cache[k + 1], 24});
    }
    while (!work.empty()) {
      Seg s = work.back();
      work.pop_back();
      double lm = 0.5 * (s.a + s.m), rm = 0.5 * (s.m + s.b);
      double flm = inner_at(ring, lm), frm = inner_at(ring, rm);
      double h = s.b - s.a;
      double s1 = h / 6.0 * (s.fa + 4.0 * s.fm + s.fb);
      double s2 = h / 12.0 * (s.fa + 4.0 * flm + 2.0 * s.fm + 4.0 * frm + s.fb);
      if (s.depth <= 0 || std::abs(s2 - s1) <= tol * (h / (2.0 * M_PI)) * 15.0 ||
          h < 1e-9) {
        deposit(ring, lm, w0 * h / 12.0 * (s.fa + 4.0 * flm + s.fm));
        deposit(ring, rm, w0 * h / 12.0 * (s.fm + 4.0 * frm + s.fb));
      } else {
        work.push_back({s.a, lm, s.m, s.fa, flm, s.fm, s.depth - 1});
        work.push_back({s.m, rm, s.b, s.fm, frm, s.fb, s.depth - 1});
      }
    }
  }
  return st;
}

}  // namespace

TraceEstimate boundary_trace(const ProcessModel& model, const Domain& domain,
                             const std::function<double(const Pt&)>& u,
                             const Exhaustion& exhaustion, const Pt& x0,
                             const BoundaryBins& bins,
                             const TraceOptions& opts) {
  if (exhaustion.stages.empty())
    throw ModelError("boundary_trace: empty exhaustion");
  TraceEstimate out;
  Pt bc{};
  double br = 0.0;
  bool fast = model.d == 2 &&
              model.spec.kind() == BernsteinKind::kStable &&
              domain.as_ball(bc, br) && dist(x0, bc, model.d) < 1e-9;

  for (size_t k = 0; k < exhaustion.stages.size(); ++k) {
    const Domain& U = exhaustion.stages[k];
    TraceStage st;
    if (fast) {
      Pt sc{};
      double sr = 0.0;
      if (!U.as_ball(sc, sr))
        throw ModelError("boundary_trace: stages must be balls on this path");
      st = trace_stage_ball(model, domain, u, U, static_cast<int>(k), bc, br,
                            sr, bins, opts);
    } else {
      // generic path: mesh the stage, estimate G_U(x0,.) by WoS occupation
      if (model.spec.kind() != BernsteinKind::kStable)
        throw ModelError("boundary_trace: generic path needs the stable kind");
      Mesh zmesh = grid_mesh(U, opts.mesh_per_axis);
      CellEstimates occ = occupation_histogram(
          model, U, x0, zmesh, opts.mc_paths, opts.seed, WosParams{},
          opts.workers, opts.stream_tag + k);
      Mesh ymesh = grid_mesh(domain, opts.mesh_per_axis, &U);
      st.stage = static_cast<int>(k);
      st.bin_masses.assign(bins.centers.size(), 0.0);
      for (size_t zi = 0; zi < zmesh.centers.size(); ++zi) {
        double inner = 0.0;
        for (size_t yi = 0; yi < ymesh.centers.size(); ++yi) {
          double s = dist(zmesh.centers[zi], ymesh.centers[yi], model.d);
          if (s <= 0.0) continue;
          inner += jumping_kernel(model, s) * u(ymesh.centers[yi]) *
                   ymesh.cell_volume;
        }
        double dm = occ.value[zi] * inner * zmesh.cell_volume;
        st.total_mass += dm;
        if (domain.dist_to_complement(zmesh.centers[zi]) > opts.collar)
          st.interior_mass += dm;
        else
          st.bin_masses[static_cast<size_t>(bins.find(zmesh.centers[zi]))] +=
              dm;
      }
    }
    out.stages.push_back(st);
    out.interior_mass_trend.push_back(st.interior_mass);
  }

  // convergence in binned total variation between the last two stages
  if (out.stages.size() >= 2) {
    const auto& a = out.stages[out.stages.size() - 2];
    const auto& b = out.stages.back();
    double tv = std::abs(a.interior_mass - b.interior_mass);
    for (size_t i = 0; i < b.bin_masses.size(); ++i)
      tv += std::abs(a.bin_masses[i] - b.bin_masses[i]);
    double scale_mass = std::max(
        {out.stages.front().total_mass, b.total_mass, 1e-12});
    double interior_ok = b.interior_mass <=
                         opts.tolerance * std::max(b.total_mass, 1e-12);
    out.converged = tv <= opts.tolerance * scale_mass && interior_ok;
  }
  if (out.converged) {
    BoundaryMeasure lim;
    lim.bin_masses = out.stages.back().bin_masses;
    out.limit = lim;
  }
  return out;
}

}  // namespace sbm
