#pragma once

#include <cstdint>
#include <vector>

#include "asmpm/core/common.hpp"

namespace asmpm {

// splitmix64: small, portable, deterministic across platforms.  Used for all
// procedural sampling so results depend only on (seed, stream) and never on
// call order elsewhere in the program.
struct Rng {
  uint64_t state;

  explicit Rng(uint64_t seed) : state(seed) {}
  Rng(uint64_t seed, uint64_t stream) : state(mix(seed ^ mix(stream))) {}

  static uint64_t mix(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  uint64_t next_u64() {
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  Real uniform() { return Real(next_u64() >> 11) * (Real(1) / Real(1ull << 53)); }

  Real uniform(Real lo, Real hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  uint64_t below(uint64_t n) { return next_u64() % n; }

  Vec3 uniform_vec3(Real lo, Real hi) {
    Real a = uniform(lo, hi), b = uniform(lo, hi), c = uniform(lo, hi);
    return Vec3(a, b, c);
  }

  Vec3 unit_vec3() {
    // rejection sample inside the unit ball, then normalize
    for (;;) {
      Vec3 v = uniform_vec3(-1, 1);
      Real n2 = v.squaredNorm();
      if (n2 > Real(1e-8) && n2 <= Real(1)) return v / std::sqrt(n2);
    }
  }
};

// Deterministic Fisher-Yates subsample of indices [0, n): returns k slots.
inline std::vector<int> subsample_indices(int n, int k, uint64_t seed) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed, 0x73756273616d70ull); // "subsamp" stream tag
  int m = k < n ? k : n;
  for (int i = 0; i < m; ++i) {
    int j = i + int(rng.below(uint64_t(n - i)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(m);
  return idx;
}

} // namespace asmpm
