#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace sbm {

// Points live in R^2 or R^3; the active dimension is carried by the model /
// domain, not by every point.
inline constexpr int kMaxDim = 3;

struct Pt {
  std::array<double, kMaxDim> c{};

  double& operator[](int i) { return c[static_cast<size_t>(i)]; }
  double operator[](int i) const { return c[static_cast<size_t>(i)]; }
};

inline Pt pt(double x, double y, double z = 0.0) { return Pt{{x, y, z}}; }

inline Pt add(const Pt& a, const Pt& b) {
  return Pt{{a.c[0] + b.c[0], a.c[1] + b.c[1], a.c[2] + b.c[2]}};
}
inline Pt sub(const Pt& a, const Pt& b) {
  return Pt{{a.c[0] - b.c[0], a.c[1] - b.c[1], a.c[2] - b.c[2]}};
}
inline Pt scale(const Pt& a, double s) {
  return Pt{{a.c[0] * s, a.c[1] * s, a.c[2] * s}};
}
inline double dot(const Pt& a, const Pt& b, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += a[i] * b[i];
  return s;
}
inline double norm2(const Pt& a, int d) { return dot(a, a, d); }
inline double norm(const Pt& a, int d) { return std::sqrt(norm2(a, d)); }
inline double dist(const Pt& a, const Pt& b, int d) {
  return norm(sub(a, b), d);
}

// Surface area of the unit sphere S^{d-1}.
inline double sphere_area(int d) {
  return 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d);
}
// Volume of the unit ball in R^d.
inline double ball_volume(int d) { return sphere_area(d) / d; }

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SamplingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kToolVersion = "sbmpot 1.0.0";
inline constexpr const char* kFormatVersion = "1";

}  // namespace sbm
