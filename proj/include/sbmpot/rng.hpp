#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "sbmpot/common.hpp"

namespace sbm {

// Reproducible stream family: (seed, stream_id) fully determines the draw
// sequence, so path i can always use stream i and results do not depend on
// the number of workers or the schedule.
class Rng {
 public:
  Rng(uint64_t seed, uint64_t stream_id) {
    uint64_t s0 = mix(seed ^ 0x9e3779b97f4a7c15ull);
    uint64_t s1 = mix(s0 + stream_id);
    uint64_t s2 = mix(s1 + 0xbf58476d1ce4e5b9ull);
    uint64_t s3 = mix(s2 + stream_id);
    std::seed_seq seq{static_cast<uint32_t>(s0), static_cast<uint32_t>(s0 >> 32),
                      static_cast<uint32_t>(s1), static_cast<uint32_t>(s1 >> 32),
                      static_cast<uint32_t>(s2), static_cast<uint32_t>(s2 >> 32),
                      static_cast<uint32_t>(s3), static_cast<uint32_t>(s3 >> 32)};
    gen_.seed(seq);
  }

  uint64_t raw() { return gen_(); }

  // Uniform on (0,1), never returns 0 or 1.
  double uniform() {
    double u;
    do {
      u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    } while (u <= 0.0);
    return u;
  }

  double exponential() { return -std::log(uniform()); }

  // Box-Muller; one spare kept so consumption stays deterministic per stream.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Uniform direction on S^{d-1}.
  Pt unit_sphere(int d) {
    Pt v{};
    if (d == 2) {
      double a = 2.0 * M_PI * uniform();
      v[0] = std::cos(a);
      v[1] = std::sin(a);
    } else {
      double z = 2.0 * uniform() - 1.0;
      double a = 2.0 * M_PI * uniform();
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      v[0] = r * std::cos(a);
      v[1] = r * std::sin(a);
      v[2] = z;
    }
    return v;
  }

 private:
  static uint64_t mix(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stream ids are partitioned by component so independent estimators never
// share a stream: id = (tag << 40) | index.
inline uint64_t stream_id(uint64_t tag, uint64_t index) {
  return (tag << 40) | index;
}

}  // namespace sbm
