#pragma once

#include "asmpm/core/parallel.hpp"
#include "asmpm/core/rng.hpp"
#include "asmpm/geometry/collider.hpp"

namespace asmpm {

// surface sample points used to rasterize a collider onto the grid
struct RigidParticleSet {
  std::vector<Vec3> positions; // base pose (add collider offset for world pose)
  std::vector<int> primitive_ids;

  int size() const { return int(positions.size()); }
};

// deterministic tangent basis for a unit normal
inline void tangent_basis(const Vec3& n, Vec3& u, Vec3& v) {
  Vec3 up = std::abs(n.z()) < Real(0.9) ? Vec3(0, 0, 1) : Vec3(1, 0, 0);
  u = up.cross(n).normalized();
  v = n.cross(u);
}

namespace detail {

// stratified jittered samples on one triangle; n == 1 lands on the centroid
inline void sample_triangle(const Vec3& a, const Vec3& b, const Vec3& c, int n,
                            Rng& rng, std::vector<Vec3>& out) {
  if (n == 1) {
    out.push_back((a + b + c) / 3);
    return;
  }
  int m = int(std::ceil(std::sqrt(Real(n))));
  int placed = 0;
  for (int i = 0; i < m && placed < n; ++i)
    for (int j = 0; j < m && placed < n; ++j) {
      // jitter within the middle half of each stratum keeps coverage tight
      Real x = (i + rng.uniform(Real(0.25), Real(0.75))) / m;
      Real y = (j + rng.uniform(Real(0.25), Real(0.75))) / m;
      if (x + y > 1) { // fold the unit square onto the triangle
        x = 1 - x;
        y = 1 - y;
      }
      out.push_back(a + x * (b - a) + y * (c - a));
      ++placed;
    }
}

// concentric rings at uniform areal density; points per ring scale with radius
inline void sample_disk(const Vec3& center, const Vec3& normal, Real radius, int n,
                        Rng& rng, std::vector<Vec3>& out) {
  Vec3 u, v;
  tangent_basis(normal, u, v);
  if (n == 1) {
    out.push_back(center);
    return;
  }
  int rings = std::max(1, int(std::lround(std::sqrt(Real(n) / Real(4)))));
  std::vector<Real> ring_r(static_cast<size_t>(rings), Real(0));
  std::vector<int> ring_n(static_cast<size_t>(rings), 0);
  Real weight_sum = 0;
  for (int k = 0; k < rings; ++k) {
    ring_r[size_t(k)] = radius * (k + Real(0.5)) / rings;
    weight_sum += ring_r[size_t(k)];
  }
  int assigned = 0;
  for (int k = 0; k < rings; ++k) {
    int cnt = (k + 1 == rings) ? n - assigned
                               : std::max(1, int(std::floor(n * ring_r[size_t(k)] / weight_sum)));
    cnt = std::min(cnt, n - assigned);
    ring_n[size_t(k)] = cnt;
    assigned += cnt;
  }
  for (int k = 0; k < rings; ++k) {
    Real phase = rng.uniform();
    for (int i = 0; i < ring_n[size_t(k)]; ++i) {
      Real t = Real(2) * Real(EIGEN_PI) * (i + phase) / ring_n[size_t(k)];
      out.push_back(center + ring_r[size_t(k)] * (std::cos(t) * u + std::sin(t) * v));
    }
  }
}

} // namespace detail

// ceil(area / spacing^2) samples per primitive, at least one each; the RNG
// stream is keyed on (seed, primitive index) so output is independent of
// evaluation order.
inline RigidParticleSet sample_rigid_particles(const RigidCollider& collider,
                                               Real target_spacing,
                                               uint64_t seed = 0) {
  if (!(target_spacing > 0)) fail(ErrorCode::Config, "target_spacing must be > 0");
  int np = collider.primitive_count();
  std::vector<std::vector<Vec3>> per_prim(static_cast<size_t>(np));
  Real inv_s2 = Real(1) / (target_spacing * target_spacing);
  parallel_for(np, [&](int i) {
    Primitive prim = collider.primitive(i);
    Rng rng(seed, uint64_t(i));
    if (prim.is_disk) {
      Real area = Real(EIGEN_PI) * prim.radius * prim.radius;
      int n = std::max(1, int(std::ceil(area * inv_s2)));
      detail::sample_disk(prim.center, prim.normal, prim.radius, n, rng,
                          per_prim[size_t(i)]);
    } else {
      Real area = triangle_area(prim.a, prim.b, prim.c);
      int n = std::max(1, int(std::ceil(area * inv_s2)));
      detail::sample_triangle(prim.a, prim.b, prim.c, n, rng, per_prim[size_t(i)]);
    }
  });
  RigidParticleSet out;
  for (int i = 0; i < np; ++i) {
    for (const Vec3& p : per_prim[size_t(i)]) {
      out.positions.push_back(p - collider.offset); // store base pose
      out.primitive_ids.push_back(i);
    }
  }
  return out;
}

} // namespace asmpm
