#pragma once

#include <optional>
#include <variant>

#include "asmpm/core/common.hpp"
#include "asmpm/geometry/disks.hpp"
#include "asmpm/geometry/mesh.hpp"

namespace asmpm {

enum class SurfaceResponse { Sticky, Slip, Separating };

inline const char* to_string(SurfaceResponse r) {
  switch (r) {
    case SurfaceResponse::Sticky: return "sticky";
    case SurfaceResponse::Slip: return "slip";
    case SurfaceResponse::Separating: return "separating";
  }
  return "?";
}

// one collider surface primitive in world pose
struct Primitive {
  bool is_disk = false;
  Vec3 a, b, c;   // triangle corners (is_disk == false)
  Vec3 center;    // disk center
  Real radius = 0;
  Vec3 normal;    // unit
};

// signed point-plane distance, positive on the normal side
inline Real point_primitive_distance(const Vec3& p, const Primitive& prim) {
  const Vec3& ref = prim.is_disk ? prim.center : prim.a;
  return (p - ref).dot(prim.normal);
}

// does the plane-projection of p land inside the primitive (boundary counts)
inline bool projection_inside(const Vec3& p, const Primitive& prim) {
  Real d = point_primitive_distance(p, prim);
  Vec3 q = p - d * prim.normal;
  if (prim.is_disk) return (q - prim.center).squaredNorm() <= prim.radius * prim.radius;
  // barycentric sign test against each edge, winding-consistent
  Vec3 n = prim.normal;
  Real s0 = (prim.b - prim.a).cross(q - prim.a).dot(n);
  Real s1 = (prim.c - prim.b).cross(q - prim.b).dot(n);
  Real s2 = (prim.a - prim.c).cross(q - prim.c).dot(n);
  return s0 >= 0 && s1 >= 0 && s2 >= 0;
}

// Rigid collider: surface geometry, contact response, constant translation
// velocity.  `offset` accumulates motion during a rollout; primitives and
// samples are reported in the current pose.
struct RigidCollider {
  std::variant<TriangleMesh, DiskSet> surface;
  SurfaceResponse response = SurfaceResponse::Sticky;
  Vec3 velocity = Vec3::Zero();
  Vec3 offset = Vec3::Zero();

  bool is_mesh() const { return std::holds_alternative<TriangleMesh>(surface); }
  const TriangleMesh& mesh() const { return std::get<TriangleMesh>(surface); }
  const DiskSet& disks() const { return std::get<DiskSet>(surface); }

  bool moving() const { return velocity.squaredNorm() > 0; }

  // rigid velocity field evaluated at a world position
  Vec3 rigid_velocity(const Vec3&) const { return velocity; }

  int primitive_count() const {
    return is_mesh() ? mesh().face_count() : disks().size();
  }

  Primitive primitive(int i) const {
    Primitive p;
    if (is_mesh()) {
      auto tri = mesh().corners(i);
      p.is_disk = false;
      p.a = tri[0] + offset;
      p.b = tri[1] + offset;
      p.c = tri[2] + offset;
      p.normal = mesh().face_normals[size_t(i)];
    } else {
      const DiskSet& d = disks();
      p.is_disk = true;
      p.center = d.centers[size_t(i)] + offset;
      p.radius = d.radii[size_t(i)];
      p.normal = d.normals[size_t(i)];
    }
    return p;
  }
};

} // namespace asmpm
