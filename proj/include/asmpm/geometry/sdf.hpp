#pragma once

#include "asmpm/core/parallel.hpp"
#include "asmpm/core/rng.hpp"
#include "asmpm/geometry/mesh.hpp"

namespace asmpm {

namespace detail {

// Moller-Trumbore; returns 1 on a clean forward hit, 0 on a clean miss,
// -1 when the hit is too close to an edge / parallel case to trust parity.
inline int ray_hits_triangle(const Vec3& o, const Vec3& dir, const Vec3& a,
                             const Vec3& b, const Vec3& c) {
  const Real eps = Real(1e-10);
  Vec3 e1 = b - a, e2 = c - a;
  Vec3 p = dir.cross(e2);
  Real det = e1.dot(p);
  if (std::abs(det) < eps) {
    // parallel; only a problem if the ray passes near the triangle's plane slab
    return (std::abs((o - a).dot(e1.cross(e2).normalized())) < eps) ? -1 : 0;
  }
  Real inv = Real(1) / det;
  Vec3 t = o - a;
  Real u = t.dot(p) * inv;
  if (u < -eps || u > 1 + eps) return 0;
  Vec3 q = t.cross(e1);
  Real v = dir.dot(q) * inv;
  if (v < -eps || u + v > 1 + eps) return 0;
  Real dist = e2.dot(q) * inv;
  if (dist < -eps) return 0;
  // ambiguous when grazing an edge/vertex or starting on the surface
  if (u < eps || v < eps || u + v > 1 - eps || dist < eps) return -1;
  return 1;
}

} // namespace detail

// parity test with jitter retry on edge grazes; deterministic direction sequence
inline bool point_inside_mesh(const Vec3& p, const TriangleMesh& mesh) {
  Rng rng(0x5df2a9u, 0);
  Vec3 dir = Vec3(Real(0.5372), Real(0.2513), Real(0.8067)).normalized();
  for (int attempt = 0; attempt < 32; ++attempt) {
    int crossings = 0;
    bool clean = true;
    for (int f = 0; f < mesh.face_count() && clean; ++f) {
      auto tri = mesh.corners(f);
      int h = detail::ray_hits_triangle(p, dir, tri[0], tri[1], tri[2]);
      if (h < 0)
        clean = false;
      else
        crossings += h;
    }
    if (clean) return (crossings & 1) != 0;
    dir = (dir + Real(0.1) * rng.unit_vec3()).normalized();
  }
  fail(ErrorCode::Degenerate, "inside/outside parity test failed to converge");
}

// Node-sampled signed distance, negative inside.  Watertightness is required:
// an open surface has no inside, so the SDF baseline cannot represent it.
inline std::vector<Real> build_sdf(const TriangleMesh& mesh, const GridSpec& grid) {
  if (!mesh_watertight(mesh))
    fail(ErrorCode::BaselineUnsupported,
         "signed-distance baseline requires a watertight mesh; "
         "use the compatibility-aware contact mode for open surfaces");
  std::vector<Real> phi(size_t(grid.node_count()));
  parallel_for(grid.node_count(), [&](int id) {
    Vec3i ijk = grid.node_ijk(id);
    Vec3 p = grid.node_pos(ijk);
    Real best = std::numeric_limits<Real>::max();
    for (int f = 0; f < mesh.face_count(); ++f) {
      auto tri = mesh.corners(f);
      Real d2 = (p - closest_point_triangle(p, tri[0], tri[1], tri[2])).squaredNorm();
      best = std::min(best, d2);
    }
    Real d = std::sqrt(best);
    phi[size_t(id)] = point_inside_mesh(p, mesh) ? -d : d;
  });
  return phi;
}

} // namespace asmpm
