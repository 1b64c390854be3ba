#include "sbmpot/bernstein.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sbmpot/quadrature.hpp"

namespace sbm {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0))
    throw ModelError("alpha must lie strictly in (0,2)");
}

}  // namespace

BernsteinSpec BernsteinSpec::stable(double alpha) {
  check_alpha(alpha);
  BernsteinSpec s;
  s.kind_ = BernsteinKind::kStable;
  s.alpha_ = alpha;
  return s;
}

BernsteinSpec BernsteinSpec::stable_sum(std::vector<StableTerm> terms) {
  if (terms.empty()) throw ModelError("stable_sum needs at least one term");
  for (const auto& t : terms) {
    check_alpha(t.alpha);
    if (!(t.weight > 0.0)) throw ModelError("weights must be positive");
  }
  BernsteinSpec s;
  s.kind_ = BernsteinKind::kStableSum;
  s.terms_ = std::move(terms);
  return s;
}

BernsteinSpec BernsteinSpec::relativistic(double alpha, double mass) {
  check_alpha(alpha);
  if (!(mass > 0.0)) throw ModelError("mass must be positive");
  BernsteinSpec s;
  s.kind_ = BernsteinKind::kRelativisticStable;
  s.alpha_ = alpha;
  s.mass_ = mass;
  return s;
}

double BernsteinSpec::min_index() const {
  switch (kind_) {
    case BernsteinKind::kStable:
    case BernsteinKind::kRelativisticStable:
      return alpha_;
    case BernsteinKind::kStableSum: {
      double m = 2.0;
      for (const auto& t : terms_) m = std::min(m, t.alpha);
      return m;
    }
  }
  return alpha_;
}

double BernsteinSpec::max_index() const {
  switch (kind_) {
    case BernsteinKind::kStable:
    case BernsteinKind::kRelativisticStable:
      return alpha_;
    case BernsteinKind::kStableSum: {
      double m = 0.0;
      for (const auto& t : terms_) m = std::max(m, t.alpha);
      return m;
    }
  }
  return alpha_;
}

std::string BernsteinSpec::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case BernsteinKind::kStable:
      os << "stable(alpha=" << alpha_ << ")";
      break;
    case BernsteinKind::kStableSum: {
      os << "stable_sum(";
      for (size_t i = 0; i < terms_.size(); ++i) {
        if (i) os << ", ";
        os << terms_[i].weight << "*l^" << 0.5 * terms_[i].alpha;
      }
      os << ")";
      break;
    }
    case BernsteinKind::kRelativisticStable:
      os << "relativistic(alpha=" << alpha_ << ", m=" << mass_ << ")";
      break;
  }
  return os.str();
}

double phi(const BernsteinSpec& spec, double lambda) {
  if (lambda < 0.0) throw ModelError("phi requires lambda >= 0");
  switch (spec.kind()) {
    case BernsteinKind::kStable:
      return std::pow(lambda, 0.5 * spec.alpha());
    case BernsteinKind::kStableSum: {
      double s = 0.0;
      for (const auto& t : spec.terms())
        s += t.weight * std::pow(lambda, 0.5 * t.alpha);
      return s;
    }
    case BernsteinKind::kRelativisticStable: {
      // m ((1 + lambda/theta)^{a/2} - 1), stable for small lambda
      double theta = std::pow(spec.mass(), 2.0 / spec.alpha());
      return spec.mass() *
             std::expm1(0.5 * spec.alpha() * std::log1p(lambda / theta));
    }
  }
  return 0.0;
}

namespace {

double stable_density(double alpha, double t) {
  double rho = 0.5 * alpha;
  return rho / std::tgamma(1.0 - rho) * std::pow(t, -1.0 - rho);
}

}  // namespace

double levy_density(const BernsteinSpec& spec, double t) {
  if (!(t > 0.0)) throw ModelError("levy_density requires t > 0");
  switch (spec.kind()) {
    case BernsteinKind::kStable:
      return stable_density(spec.alpha(), t);
    case BernsteinKind::kStableSum: {
      double s = 0.0;
      for (const auto& term : spec.terms())
        s += term.weight * stable_density(term.alpha, t);
      return s;
    }
    case BernsteinKind::kRelativisticStable: {
      double theta = std::pow(spec.mass(), 2.0 / spec.alpha());
      return stable_density(spec.alpha(), t) * std::exp(-theta * t);
    }
  }
  return 0.0;
}

double char_exponent(const BernsteinSpec& spec, const Pt& xi, int d) {
  return phi(spec, norm2(xi, d));
}

ScalingReport check_scaling(const std::function<double(double)>& phi_fn,
                            const std::vector<double>& lambda_grid,
                            const std::vector<double>& r_grid,
                            bool global_variant) {
  if (lambda_grid.empty() || r_grid.empty())
    throw ModelError("check_scaling: empty grid");
  if (!global_variant) {
    for (double r : r_grid)
      if (r < 1.0)
        throw ModelError("check_scaling: r grid must lie in [1,inf) for H1");
  }
  for (double l : lambda_grid)
    if (l < 1.0) throw ModelError("check_scaling: lambda grid must be >= 1");

  ScalingReport rep;
  rep.global_variant = global_variant;

  double smin = 2.0, smax = -2.0;
  std::vector<double> per_r_min;  // minimal chord slope per r
  std::vector<double> log_r;
  for (double r : r_grid) {
    double pr = phi_fn(r);
    double rmin = 2.0;
    for (double l : lambda_grid) {
      if (l <= 1.0) continue;
      rep.grid.emplace_back(l, r);
      double s = std::log(phi_fn(l * r) / pr) / std::log(l);
      smin = std::min(smin, s);
      smax = std::max(smax, s);
      rmin = std::min(rmin, s);
    }
    if (rmin < 2.0) {
      per_r_min.push_back(rmin);
      log_r.push_back(std::log(r));
    }
  }
  if (smin > smax) throw ModelError("check_scaling: lambda grid has no l > 1");

  rep.delta1 = smin;
  rep.delta2 = smax;

  // least-squares trend of log(min slope) against log r
  double trend = 0.0;
  if (per_r_min.size() >= 3) {
    double mx = 0, my = 0;
    size_t n = per_r_min.size();
    std::vector<double> ly(n);
    for (size_t i = 0; i < n; ++i) {
      ly[i] = std::log(std::max(per_r_min[i], 1e-12));
      mx += log_r[i];
      my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
      sxx += (log_r[i] - mx) * (log_r[i] - mx);
      sxy += (log_r[i] - mx) * (ly[i] - my);
    }
    if (sxx > 0) trend = sxy / sxx;
  }

  const double kDeltaFloor = 1e-3;
  const double kTrendFloor = -0.05;
  rep.satisfied_lsc = (rep.delta1 >= kDeltaFloor) && (trend >= kTrendFloor);
  rep.satisfied_usc = rep.delta2 <= 1.0 - 1e-9;
  rep.worst_violation = std::min(0.0, rep.delta1 - kDeltaFloor) +
                        std::min(0.0, trend - kTrendFloor);

  // minimal feasible constants at the fitted exponents
  double a1 = std::numeric_limits<double>::infinity();
  double a2 = 0.0;
  for (double r : r_grid) {
    double pr = phi_fn(r);
    for (double l : lambda_grid) {
      double ratio = phi_fn(l * r) / pr;
      a1 = std::min(a1, ratio / std::pow(l, rep.delta1));
      a2 = std::max(a2, ratio / std::pow(l, rep.delta2));
    }
  }
  rep.a1 = a1;
  rep.a2 = a2;
  return rep;
}

ScalingReport check_scaling(const BernsteinSpec& spec,
                            const std::vector<double>& lambda_grid,
                            const std::vector<double>& r_grid,
                            bool global_variant) {
  return check_scaling([&](double l) { return phi(spec, l); }, lambda_grid,
                       r_grid, global_variant);
}

bool check_transience(const BernsteinSpec& spec, int d) {
  if (d < 2) throw ModelError("dimension must be >= 2");
  if (d >= 3) return true;
  // d = 2: finite integral of 1/phi over (0,1] <=> transient.
  QuadOptions opt;
  opt.rel_tol = 1e-9;
  auto g = [&](double u) {
    double t = std::exp(u);
    double v = t / phi(spec, t);
    return std::isfinite(v) ? v : 0.0;
  };
  double total = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  int stall = 0;
  const double block = 4.0;
  for (int k = 0; k < 400; ++k) {
    QuadResult b = integrate(g, -block * (k + 1), -block * k, opt);
    total += b.value;
    if (total > 1e8) return false;
    double mag = std::abs(b.value);
    if (mag <= 1e-12 * std::max(1.0, total)) return true;
    if (mag >= 0.999 * prev) {
      if (++stall >= 6) return false;  // blocks stopped decaying: divergent
    } else {
      stall = 0;
    }
    prev = mag;
  }
  return true;
}

}  // namespace sbm
