#include "sbmpot/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>

#include "sbmpot/quadrature.hpp"

namespace sbm {

ProcessModel make_model(const BernsteinSpec& spec, int d) {
  if (d < 2 || d > kMaxDim)
    throw ModelError("dimension must be 2 or 3");
  ProcessModel m;
  m.d = d;
  m.spec = spec;
  m.transient = check_transience(spec, d);
  if (!m.transient)
    throw ModelError("model is recurrent in d=" + std::to_string(d) +
                     "; the toolkit requires transience");
  return m;
}

namespace {

double subordination_quadrature(const BernsteinSpec& spec, int d, double r) {
  QuadOptions opt;
  opt.rel_tol = 1e-10;
  auto f = [&](double t) {
    double e = -r * r / (4.0 * t);
    if (e < -700.0) return 0.0;
    return std::pow(4.0 * M_PI * t, -0.5 * d) * std::exp(e) *
           levy_density(spec, t);
  };
  QuadResult q = integrate_positive_axis(f, opt);
  require_converged(q, "subordination integral");
  return q.value;
}

std::mutex g_cache_mutex;

struct DAlphaKey {
  int d;
  long long abits;
  bool operator<(const DAlphaKey& o) const {
    return d != o.d ? d < o.d : abits < o.abits;
  }
};

DAlphaKey key_of(int d, double alpha) {
  long long bits;
  static_assert(sizeof(bits) == sizeof(alpha));
  std::memcpy(&bits, &alpha, sizeof(bits));
  return DAlphaKey{d, bits};
}

}  // namespace

double stable_jump_constant(int d, double alpha) {
  static std::map<DAlphaKey, double> cache;
  std::lock_guard<std::mutex> lock(g_cache_mutex);
  auto key = key_of(d, alpha);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  double c = subordination_quadrature(BernsteinSpec::stable(alpha), d, 1.0);
  cache[key] = c;
  return c;
}

double jumping_kernel(const ProcessModel& model, double r) {
  if (!(r > 0.0)) throw ModelError("jumping_kernel requires r > 0");
  if (model.spec.kind() == BernsteinKind::kStable) {
    double a = model.spec.alpha();
    return stable_jump_constant(model.d, a) * std::pow(r, -(model.d + a));
  }
  return subordination_quadrature(model.spec, model.d, r);
}

double jump_tail_mass(const ProcessModel& model, double R) {
  if (!(R > 0.0)) throw ModelError("jump_tail_mass requires R > 0");
  double S = sphere_area(model.d);
  if (model.spec.kind() == BernsteinKind::kStable) {
    double a = model.spec.alpha();
    return S * stable_jump_constant(model.d, a) * std::pow(R, -a) / a;
  }
  // radial integral over (R, inf), s = R e^v
  QuadOptions opt;
  opt.rel_tol = 1e-8;
  auto g = [&](double v) {
    double s = R * std::exp(v);
    return jumping_kernel(model, s) * std::pow(s, model.d);
  };
  double total = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 60; ++k) {
    QuadResult b = integrate(g, 2.0 * k, 2.0 * (k + 1), opt);
    total += b.value;
    double mag = std::abs(b.value);
    if (mag <= 1e-12 * total) break;
    if (mag >= prev) break;  // j decays; guard anyway
    prev = mag;
  }
  return S * total;
}

KernelTable KernelTable::build(const ProcessModel& model, double rmin,
                               double rmax, int n) {
  if (!(rmin > 0.0 && rmax > rmin) || n < 4)
    throw ModelError("KernelTable: bad grid");
  KernelTable t;
  double lr0 = std::log(rmin), lr1 = std::log(rmax);
  // coarse log grid, then midpoint-driven refinement keeps the piecewise
  // linear interpolation inside the relative error budget
  std::map<double, double> pts;  // log r -> log j
  auto value_at = [&](double lr) {
    double v = jumping_kernel(model, std::exp(lr));
    return v > 1e-280 ? std::log(v) : std::numeric_limits<double>::quiet_NaN();
  };
  for (int i = 0; i < n; ++i) {
    double lr = lr0 + (lr1 - lr0) * i / (n - 1);
    double lv = value_at(lr);
    if (std::isnan(lv)) break;  // underflow region; tail rule covers it
    pts[lr] = lv;
  }
  if (pts.size() < 4) throw ModelError("KernelTable: kernel underflows");
  const double budget = 2.5e-7;
  for (int pass = 0; pass < 14; ++pass) {
    bool refined = false;
    auto it = pts.begin();
    std::vector<std::pair<double, double>> inserts;
    for (auto next = std::next(it); next != pts.end(); it = next++) {
      double lm = 0.5 * (it->first + next->first);
      double lin = 0.5 * (it->second + next->second);
      double lv = value_at(lm);
      if (std::isnan(lv)) continue;
      if (std::abs(lv - lin) > budget) {
        inserts.emplace_back(lm, lv);
        refined = true;
      }
    }
    for (auto& [k, v] : inserts) pts[k] = v;
    if (!refined || pts.size() > 20000) break;
  }
  for (auto& [lr, lv] : pts) {
    t.radii_.push_back(std::exp(lr));
    t.values_.push_back(std::exp(lv));
  }
  for (size_t i = 1; i < t.values_.size(); ++i) {
    if (!(t.values_[i] < t.values_[i - 1]))
      throw ModelError("KernelTable: values not strictly decreasing");
  }
  for (size_t i = 0; i < t.radii_.size(); ++i) {
    t.log_r_.push_back(std::log(t.radii_[i]));
    t.log_v_.push_back(std::log(t.values_[i]));
  }
  t.tail_rule_ = "log-log linear extrapolation with edge slopes";
  return t;
}

double KernelTable::operator()(double r) const {
  if (!(r > 0.0)) throw ModelError("KernelTable: r must be positive");
  double lr = std::log(r);
  size_t n = log_r_.size();
  size_t i;
  if (lr <= log_r_.front())
    i = 0;
  else if (lr >= log_r_[n - 2])
    i = n - 2;
  else
    i = static_cast<size_t>(std::upper_bound(log_r_.begin(), log_r_.end(), lr) -
                            log_r_.begin()) - 1;
  double s = (lr - log_r_[i]) / (log_r_[i + 1] - log_r_[i]);
  return std::exp(log_v_[i] + s * (log_v_[i + 1] - log_v_[i]));
}

double KernelTable::validate(const ProcessModel& model, int n_heldout) const {
  double worst = 0.0;
  double lr0 = log_r_.front(), lr1 = log_r_.back();
  for (int i = 0; i < n_heldout; ++i) {
    double lr = lr0 + (lr1 - lr0) * (i + 0.5) / n_heldout;
    double r = std::exp(lr);
    double exact = jumping_kernel(model, r);
    double approx = (*this)(r);
    worst = std::max(worst, std::abs(approx - exact) / exact);
  }
  return worst;
}

void KernelTable::dump_csv(std::ostream& os) const {
  os << "radius,value\n";
  for (size_t i = 0; i < radii_.size(); ++i)
    os << radii_[i] << "," << values_[i] << "\n";
}

std::vector<std::pair<double, double>> kernel_ratio_audit(
    const ProcessModel& model, double r0, const std::vector<double>& delta_grid,
    double r_max, int n_grid) {
  if (!(r0 > 0.0 && r0 < 1.0))
    throw ModelError("kernel_ratio_audit: r0 must lie in (0,1)");
  for (double d : delta_grid)
    if (!(d > 0.0 && d < 1.0))
      throw ModelError("kernel_ratio_audit: deltas must lie in (0,1)");
  KernelTable table =
      KernelTable::build(model, 0.5 * r0, r_max + 1.5, std::max(n_grid, 200));
  std::vector<std::pair<double, double>> out;
  for (double delta : delta_grid) {
    double sup = 0.0;
    double l0 = std::log(r0), l1 = std::log(r_max);
    for (int i = 1; i <= n_grid; ++i) {
      double r = std::exp(l0 + (l1 - l0) * i / n_grid);
      sup = std::max(sup, table(r) / table(r + delta));
    }
    out.emplace_back(delta, sup);
  }
  return out;
}

ComparabilityResult comparability_radius(const ProcessModel& model, double R,
                                         double eps, double q,
                                         ComparabilityDirection direction) {
  if (!(eps > 0.0)) throw ModelError("comparability: eps must be positive");
  bool inner = direction == ComparabilityDirection::kInner;
  if (inner && !(q > 0.0 && q <= 1.0))
    throw ModelError("comparability inner: q must lie in (0,1]");
  if (!inner && !(q > 1.0 && R >= 1.0))
    throw ModelError("comparability outer: q > 1 and R >= 1 required");

  double s_hi = std::max(50.0 * q * R, q * R + 50.0);
  KernelTable table =
      KernelTable::build(model, 1e-6 * q * R, 4.0 * s_hi, 800);
  const int kGrid = 96;
  double bound = 1.0 + eps;

  // worst two-sided ratio over the reference-radius grid for shift c
  auto worst_ratio = [&](double s_lo, double c) {
    double worst = 1.0;
    double l0 = std::log(s_lo), l1 = std::log(s_hi);
    for (int i = 0; i <= kGrid; ++i) {
      double s = std::exp(l0 + (l1 - l0) * i / kGrid);
      double base = table(s);
      double up = table(std::max(s - c, 1e-9)) / base;
      double dn = table(s + c) / base;
      worst = std::max({worst, up, 1.0 / dn});
    }
    return worst;
  };

  ComparabilityResult res;
  if (inner) {
    // largest p in (0,q) with shift pR admissible beyond qR
    double lo = 0.0, hi = q;  // lo passes (ratio 1), hi fails
    if (worst_ratio(q * R, q * R * (1.0 - 1e-9)) <= bound) {
      lo = q * (1.0 - 1e-9);
    } else {
      for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        if (worst_ratio(q * R, mid * R) <= bound)
          lo = mid;
        else
          hi = mid;
      }
    }
    res.found = lo > 0.0;
    res.p = lo;
    double l0 = std::log(q * R), l1 = std::log(s_hi);
    for (int i = 0; i <= 16; ++i) {
      double s = std::exp(l0 + (l1 - l0) * i / 16);
      double base = table(s);
      double w = std::max(table(std::max(s - res.p * R, 1e-9)) / base,
                          base / table(s + res.p * R));
      res.certificate.emplace_back(s, w);
    }
    return res;
  }

  // outer: smallest p > q with shift qR admissible beyond pR
  auto outer_ok = [&](double p) { return worst_ratio(p * R, q * R) <= bound; };
  double p_max = 1e4 * q;
  if (!outer_ok(p_max)) {
    res.found = false;
    res.p = std::numeric_limits<double>::quiet_NaN();
    return res;
  }
  double lo = q, hi = p_max;  // lo fails (or is the infimum), hi passes
  if (outer_ok(q * (1.0 + 1e-9))) {
    hi = q * (1.0 + 1e-9);
  } else {
    for (int it = 0; it < 60; ++it) {
      double mid = std::sqrt(lo * hi);
      if (outer_ok(mid))
        hi = mid;
      else
        lo = mid;
    }
  }
  res.found = true;
  res.p = hi;
  double l0 = std::log(hi * R), l1 = std::log(std::max(s_hi, 2.0 * hi * R));
  for (int i = 0; i <= 16; ++i) {
    double s = std::exp(l0 + (l1 - l0) * i / 16);
    double base = table(s);
    double w = std::max(table(std::max(s - q * R, 1e-9)) / base,
                        base / table(s + q * R));
    res.certificate.emplace_back(s, w);
  }
  return res;
}

namespace ball {

namespace {

// Hermite-tabulated cumulative of f(z) dz on a uniform log-z grid with
// analytic power-law head and tail.
struct CumulativeTable {
  double wlo = 0.0, whi = 0.0, dw = 0.0;
  std::vector<double> cum;  // cumulative from 0 to z_i (head included)
  std::vector<double> der;  // d(cumulative)/dw at z_i
  double head_exp = 0.0, head_coef = 0.0;  // int_0^z ~ coef * z^exp
  double tail_exp = 0.0, tail_coef = 0.0;  // int_z^inf ~ coef * z^{-exp}
  double total = 0.0;

  double eval(double z) const {
    if (!(z > 0.0)) return 0.0;
    double w = std::log(z);
    if (w <= wlo) return head_coef * std::pow(z, head_exp);
    if (w >= whi) return total - tail_coef * std::pow(z, -tail_exp);
    double t = (w - wlo) / dw;
    size_t i = std::min(static_cast<size_t>(t), cum.size() - 2);
    t -= i;
    double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
    double h10 = t * (1 - t) * (1 - t);
    double h01 = t * t * (3 - 2 * t);
    double h11 = t * t * (t - 1);
    return h00 * cum[i] + dw * h10 * der[i] + h01 * cum[i + 1] +
           dw * h11 * der[i + 1];
  }

  // inverse of eval for targets in (0, total)
  double solve(double target) const {
    if (target <= cum.front())
      return std::pow(target / head_coef, 1.0 / head_exp);
    if (target >= cum.back())
      return std::pow((total - target) / tail_coef, -1.0 / tail_exp);
    size_t lo = 0, hi = cum.size() - 1;
    while (hi - lo > 1) {
      size_t mid = (lo + hi) / 2;
      if (cum[mid] <= target)
        lo = mid;
      else
        hi = mid;
    }
    double t = (target - cum[lo]) / std::max(cum[hi] - cum[lo], 1e-300);
    for (int it = 0; it < 40; ++it) {
      double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
      double h10 = t * (1 - t) * (1 - t);
      double h01 = t * t * (3 - 2 * t);
      double h11 = t * t * (t - 1);
      double val = h00 * cum[lo] + dw * h10 * der[lo] + h01 * cum[hi] +
                   dw * h11 * der[hi] - target;
      double d00 = 6 * t * (t - 1);
      double d10 = (1 - t) * (1 - 3 * t);
      double d01 = -d00;
      double d11 = t * (3 * t - 2);
      double dv = d00 * cum[lo] + dw * d10 * der[lo] + d01 * cum[hi] +
                  dw * d11 * der[hi];
      if (dv <= 0.0) break;
      double step = val / dv;
      t -= step;
      t = std::clamp(t, 0.0, 1.0);
      if (std::abs(step) < 1e-14) break;
    }
    return std::exp(wlo + (lo + t) * dw);
  }
};

template <class F>
CumulativeTable build_cumulative(F&& f_of_z, double head_exp, double head_coef,
                                 double tail_exp, double tail_coef, double wlo,
                                 double whi, int n) {
  CumulativeTable t;
  t.wlo = wlo;
  t.whi = whi;
  t.dw = (whi - wlo) / (n - 1);
  t.head_exp = head_exp;
  t.head_coef = head_coef;
  t.tail_exp = tail_exp;
  t.tail_coef = tail_coef;
  t.cum.resize(n);
  t.der.resize(n);
  auto g = [&](double w) {
    double z = std::exp(w);
    return f_of_z(z) * z;  // dz = z dw
  };
  QuadOptions opt;
  opt.rel_tol = 1e-12;
  double acc = head_coef * std::pow(std::exp(wlo), head_exp);
  t.cum[0] = acc;
  t.der[0] = g(wlo);
  for (int i = 1; i < n; ++i) {
    double a = wlo + (i - 1) * t.dw;
    double b = wlo + i * t.dw;
    acc += integrate(g, a, b, opt).value;
    t.cum[i] = acc;
    t.der[i] = g(b);
  }
  t.total = acc + tail_coef * std::pow(std::exp(whi), -tail_exp);
  return t;
}

struct BallCache {
  int d;
  double alpha;
  CumulativeTable exit_cdf;      // int_0^z v^{-a/2}(1+v)^{-1} dv
  CumulativeTable green_prof;    // F(z) = int_0^z s^{a/2-1}(1+s)^{-d/2} ds
  double poisson_norm = 0.0;
  double exit_coef = 0.0;
  double green_norm = 0.0;
  std::map<int, GreenQuadRule> quad_rules;
};

const BallCache& cache_for(int d, double alpha) {
  static std::map<DAlphaKey, std::unique_ptr<BallCache>> cache;
  if (d < 2 || d > kMaxDim) throw ModelError("ball kernels: d must be 2 or 3");
  if (!(alpha > 0.0 && alpha < 2.0))
    throw ModelError("ball kernels: alpha must lie in (0,2)");
  auto key = key_of(d, alpha);
  // hot loops hit one (d,alpha); skip the lock on repeats
  thread_local DAlphaKey last_key{-1, 0};
  thread_local const BallCache* last_ptr = nullptr;
  if (last_ptr && !(key < last_key) && !(last_key < key)) return *last_ptr;
  std::lock_guard<std::mutex> lock(g_cache_mutex);
  auto it = cache.find(key);
  if (it != cache.end()) {
    last_key = key;
    last_ptr = it->second.get();
    return *it->second;
  }

  auto bc = std::make_unique<BallCache>();
  bc->d = d;
  bc->alpha = alpha;
  double rho = 0.5 * alpha;

  bc->exit_cdf = build_cumulative(
      [&](double z) { return std::pow(z, -rho) / (1.0 + z); },
      /*head*/ 1.0 - rho, 1.0 / (1.0 - rho),
      /*tail*/ rho, 1.0 / rho, -34.0, 34.0, 2048);

  bc->green_prof = build_cumulative(
      [&](double z) { return std::pow(z, rho - 1.0) * std::pow(1.0 + z, -0.5 * d); },
      /*head*/ rho, 1.0 / rho,
      /*tail*/ 0.5 * d - rho, 1.0 / (0.5 * d - rho), -34.0, 34.0, 2048);

  double S = sphere_area(d);
  bc->poisson_norm = 2.0 / (S * bc->exit_cdf.total);
  bc->exit_coef = std::tgamma(0.5 * d) /
                  (std::pow(2.0, alpha) * std::tgamma(1.0 + rho) *
                   std::tgamma(0.5 * (d + alpha)));

  // occupation identity at the center of the unit ball:
  //   kappa * S * (1/2) * int_0^inf (1+z)^{-1-rho} F(z) dz = exit_coef
  QuadOptions opt;
  opt.rel_tol = 1e-11;
  auto g = [&](double v) {
    double z = std::exp(v);
    return std::pow(1.0 + z, -1.0 - rho) * bc->green_prof.eval(z) * z;
  };
  double ig = 0.0;
  for (double v = -34.0; v < 34.0; v += 4.0)
    ig += integrate(g, v, v + 4.0, opt).value;
  // tails: v < -34 contributes ~ z^{1+rho}, v > 34 contributes F_tot z^{-rho}/rho
  ig += bc->green_prof.total * std::pow(std::exp(34.0), -rho) / rho;
  ig *= 0.5;
  bc->green_norm = bc->exit_coef / (S * ig);

  const BallCache& ref = *bc;
  cache[key] = std::move(bc);
  last_key = key;
  last_ptr = &ref;
  return ref;
}

}  // namespace

double poisson_normalizer(int d, double alpha) {
  return cache_for(d, alpha).poisson_norm;
}

double exit_time_coefficient(int d, double alpha) {
  return cache_for(d, alpha).exit_coef;
}

double green_normalizer(int d, double alpha) {
  return cache_for(d, alpha).green_norm;
}

double green_profile(int d, double alpha, double z) {
  return cache_for(d, alpha).green_prof.eval(z);
}

double green_profile_total(int d, double alpha) {
  return cache_for(d, alpha).green_prof.total;
}

double exit_radius_cdf(int d, double alpha, double z) {
  const auto& c = cache_for(d, alpha);
  return c.exit_cdf.eval(z) / c.exit_cdf.total;
}

double exit_radius_quantile(int d, double alpha, double u) {
  if (!(u > 0.0 && u < 1.0))
    throw SamplingError("exit_radius_quantile: u must lie in (0,1)");
  const auto& c = cache_for(d, alpha);
  return c.exit_cdf.solve(u * c.exit_cdf.total);
}

double poisson_kernel(double alpha, int d, double r, const Pt& x, const Pt& y) {
  double nx = norm(x, d), ny = norm(y, d);
  if (!(nx < r && r < ny))
    throw GeometryError("poisson_kernel requires |x| < r < |y|");
  const auto& c = cache_for(d, alpha);
  double q = (r * r - nx * nx) / (ny * ny - r * r);
  return c.poisson_norm * std::pow(q, 0.5 * alpha) *
         std::pow(dist(x, y, d), -d);
}

double green_function(double alpha, int d, double r, const Pt& x, const Pt& y) {
  double nx = norm(x, d), ny = norm(y, d);
  if (nx >= r || ny >= r) return 0.0;
  double rr = dist(x, y, d);
  if (rr == 0.0) throw GeometryError("green_function: coincident points");
  const auto& c = cache_for(d, alpha);
  double z = (r * r - nx * nx) * (r * r - ny * ny) / (r * r * rr * rr);
  return c.green_norm * std::pow(rr, alpha - d) * c.green_prof.eval(z);
}

double expected_exit_time(double alpha, int d, double r, const Pt& x) {
  double nx2 = norm2(x, d);
  if (nx2 >= r * r) return 0.0;
  return exit_time_coefficient(d, alpha) *
         std::pow(r * r - nx2, 0.5 * alpha);
}

double martin_kernel_boundary(double alpha, int d, double r, const Pt& x,
                              const Pt& x0, const Pt& z) {
  double nx = norm(x, d), n0 = norm(x0, d);
  if (!(nx < r && n0 < r))
    throw GeometryError("martin_kernel_boundary: x, x0 must lie in the ball");
  return std::pow((r * r - nx * nx) / (r * r - n0 * n0), 0.5 * alpha) *
         std::pow(dist(x0, z, d) / dist(x, z, d), d);
}

const GreenQuadRule& green_quad_rule(int d, double alpha, int n_radial) {
  static std::mutex rule_mutex;
  static std::map<std::pair<DAlphaKey, int>, std::unique_ptr<GreenQuadRule>>
      rules;
  auto key = std::make_pair(key_of(d, alpha), n_radial);
  thread_local std::pair<DAlphaKey, int> last_key{{-1, 0}, 0};
  thread_local const GreenQuadRule* last_ptr = nullptr;
  if (last_ptr && !(key < last_key) && !(last_key < key)) return *last_ptr;
  std::lock_guard<std::mutex> lock(rule_mutex);
  auto it = rules.find(key);
  if (it != rules.end()) {
    last_key = key;
    last_ptr = it->second.get();
    return *it->second;
  }

  const auto& c = cache_for(d, alpha);
  double rho = 0.5 * alpha;
  double S = sphere_area(d);
  auto rule = std::make_unique<GreenQuadRule>();

  // Gauss-Legendre nodes on (0,1)
  auto gl = [](int n, std::vector<double>& xs, std::vector<double>& ws) {
    xs.resize(n);
    ws.resize(n);
    for (int i = 0; i < n; ++i) {
      // Newton on Legendre P_n
      double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        double dp = n * (x * p1 - p0) / (x * x - 1.0);
        double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (x * p1 - p0) / (x * x - 1.0);
      xs[i] = 0.5 * (x + 1.0);
      ws[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
  };
  std::vector<double> xs, ws;
  gl(n_radial, xs, ws);

  const double split = 1.0 / std::sqrt(2.0);
  // piece A: s in (0, split], substitution s = split * u^{1/alpha}
  for (int i = 0; i < n_radial; ++i) {
    double u = xs[i];
    double s = split * std::pow(u, 1.0 / alpha);
    double z = (1.0 - s * s) / (s * s);
    double w = ws[i] * std::pow(split, alpha) / alpha * c.green_prof.eval(z);
    rule->factor.push_back(s);
    rule->weight.push_back(c.green_norm * S * w);
  }
  // piece B: s in [split, 1), substitution s = 1 - (1-split) * tau^{1/rho}
  double a = 1.0 - split;
  for (int i = 0; i < n_radial; ++i) {
    double tau = xs[i];
    double s = 1.0 - a * std::pow(tau, 1.0 / rho);
    double z = (1.0 - s * s) / (s * s);
    double jac = a / rho * std::pow(tau, 1.0 / rho - 1.0);
    double w = ws[i] * jac * std::pow(s, alpha - 1.0) * c.green_prof.eval(z);
    rule->factor.push_back(s);
    rule->weight.push_back(c.green_norm * S * w);
  }
  const GreenQuadRule& ref = *rule;
  rules[key] = std::move(rule);
  last_key = key;
  last_ptr = &ref;
  return ref;
}

}  // namespace ball

FreeGreenValue free_green(const ProcessModel& model, double r) {
  if (!(r > 0.0)) throw ModelError("free_green requires r > 0");
  if (!model.transient) throw ModelError("free_green requires transience");
  if (model.spec.kind() == BernsteinKind::kStable) {
    double a = model.spec.alpha();
    double v = ball::green_normalizer(model.d, a) *
               ball::green_profile_total(model.d, a) *
               std::pow(r, a - model.d);
    return FreeGreenValue{v, false};
  }
  double v = 1.0 / (std::pow(r, model.d) * phi(model.spec, 1.0 / (r * r)));
  return FreeGreenValue{v, true};
}

}  // namespace sbm
