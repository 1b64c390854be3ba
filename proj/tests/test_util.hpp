#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

// shared helpers for the statistical tests

inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    double fa = static_cast<double>(i) / a.size();
    double fb = static_cast<double>(j) / b.size();
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

// two-sample critical value at the 1% level
inline double ks_critical_1pct(size_t n, size_t m) {
  return 1.628 * std::sqrt(static_cast<double>(n + m) /
                           (static_cast<double>(n) * m));
}

// one-sample KS against a cdf evaluated at the sorted samples
template <class Cdf>
double ks_statistic_one_sample(std::vector<double> a, Cdf&& cdf) {
  std::sort(a.begin(), a.end());
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double f = cdf(a[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / a.size()));
    d = std::max(d, std::abs(f - static_cast<double>(i + 1) / a.size()));
  }
  return d;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / v.size();
}

inline double stderr_of(const std::vector<double>& v) {
  double m = mean_of(v);
  double q = 0.0;
  for (double x : v) q += (x - m) * (x - m);
  return std::sqrt(q / v.size() / (v.size() - 1.0));
}
