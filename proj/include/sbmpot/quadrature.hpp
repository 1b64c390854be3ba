#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include "sbmpot/common.hpp"

namespace sbm {

struct QuadResult {
  double value = 0.0;
  double abs_err = 0.0;
  long evals = 0;
  bool converged = true;
};

struct QuadOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-300;
  int max_intervals = 2000;
};

namespace detail {

// Gauss-Kronrod 7-15 pair on [-1,1].
inline constexpr double kGk15Nodes[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,                0.207784955007898,
    0.405845151377397,  0.586087235467691,  0.741531185599394,
    0.864864423359769,  0.949107912342759,  0.991455371120813};
inline constexpr double kGk15Weights[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};
inline constexpr double kG7Weights[7] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870};

template <class F>
inline void gk15(F&& f, double a, double b, double& kronrod, double& err) {
  double hl = 0.5 * (b - a);
  double mid = 0.5 * (a + b);
  double fk = 0.0, fg = 0.0;
  for (int i = 0; i < 15; ++i) {
    double v = f(mid + hl * kGk15Nodes[i]);
    fk += kGk15Weights[i] * v;
    if (i % 2 == 1) fg += kG7Weights[i / 2] * v;
  }
  kronrod = fk * hl;
  double gauss = fg * hl;
  err = std::abs(kronrod - gauss);
}

struct Interval {
  double a, b, value, err;
  bool operator<(const Interval& o) const { return err < o.err; }
};

}  // namespace detail

// Adaptive GK15 with worst-interval refinement and a hard interval budget.
template <class F>
QuadResult integrate(F&& f, double a, double b, QuadOptions opt = {}) {
  QuadResult out;
  if (a == b) return out;
  std::priority_queue<detail::Interval> heap;
  double v, e;
  detail::gk15(f, a, b, v, e);
  out.evals = 15;
  heap.push({a, b, v, e});
  double total_v = v, total_e = e;
  double span = std::abs(b - a);
  while (true) {
    double tol = std::max(opt.abs_tol, opt.rel_tol * std::abs(total_v));
    if (total_e <= tol) break;
    if (static_cast<int>(heap.size()) >= opt.max_intervals) {
      out.converged = false;
      break;
    }
    detail::Interval top = heap.top();
    if (std::abs(top.b - top.a) < 1e-15 * span || top.err == 0.0) {
      // cannot refine further
      out.converged = total_e <= 100.0 * tol;
      break;
    }
    heap.pop();
    double mid = 0.5 * (top.a + top.b);
    double v1, e1, v2, e2;
    detail::gk15(f, top.a, mid, v1, e1);
    detail::gk15(f, mid, top.b, v2, e2);
    out.evals += 30;
    total_v += v1 + v2 - top.value;
    total_e += e1 + e2 - top.err;
    heap.push({top.a, mid, v1, e1});
    heap.push({mid, top.b, v2, e2});
  }
  out.value = total_v;
  out.abs_err = total_e;
  return out;
}

// Integral over (0, infinity) using the substitution t = e^u. The window in u
// is grown until both tails contribute relative mass below the tolerance.
// Declared divergent (converged = false, value = partial) when the running
// integral exceeds `divergence_cap` or when the blocks stop decaying.
template <class F>
QuadResult integrate_positive_axis(
    F&& f, QuadOptions opt = {},
    double divergence_cap = std::numeric_limits<double>::infinity()) {
  auto g = [&](double u) {
    double t = std::exp(u);
    double v = f(t) * t;
    return std::isfinite(v) ? v : 0.0;
  };
  QuadResult total;
  const double block = 4.0;
  QuadResult c = integrate(g, -block, block, opt);
  total.value = c.value;
  total.abs_err = c.abs_err;
  total.evals = c.evals;
  total.converged = c.converged;

  for (int dir = 0; dir < 2; ++dir) {
    double prev = std::numeric_limits<double>::infinity();
    int stall = 0;
    for (int k = 1; k <= 300; ++k) {
      double lo = dir == 0 ? block * k : -block * (k + 1);
      double hi = dir == 0 ? block * (k + 1) : -block * k;
      QuadResult b = integrate(g, lo, hi, opt);
      total.value += b.value;
      total.abs_err += b.abs_err;
      total.evals += b.evals;
      double mag = std::abs(b.value);
      if (std::abs(total.value) > divergence_cap) {
        total.converged = false;
        return total;
      }
      if (mag <= std::max(opt.abs_tol,
                          opt.rel_tol * std::abs(total.value)) ||
          mag == 0.0) {
        break;
      }
      // flat blocks signal a divergent tail; strong growth is a moving peak
      if (mag >= 0.999 * prev && mag <= 2.0 * prev) {
        if (++stall >= 8) {
          total.converged = false;
          return total;
        }
      } else {
        stall = 0;
      }
      prev = mag;
      if (k == 300) total.converged = false;
    }
  }
  return total;
}

inline void require_converged(const QuadResult& r, const char* what) {
  if (!r.converged)
    throw QuadratureError(std::string("quadrature did not converge: ") + what);
}

}  // namespace sbm
