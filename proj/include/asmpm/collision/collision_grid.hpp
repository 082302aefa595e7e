#pragma once

#include "asmpm/core/bspline.hpp"
#include "asmpm/geometry/sampling.hpp"

namespace asmpm {

// Grid-node view of nearby rigid surfaces.  A node is "affine" (A_g) when some
// rigid surface sample sees it through its interpolation stencil and the node
// projects onto that sample's primitive.  Among all such primitives the one
// with minimum |point-plane distance| wins (ties -> lowest primitive index).
struct CollisionGrid {
  GridSpec spec;
  std::vector<uint8_t> aff;   // A_g
  std::vector<Real> dist;     // d_g >= 0
  std::vector<int8_t> tag;    // T_g: +1 / -1, 0 = unset
  std::vector<Vec3> normal;   // n_g, unit when affine else zero
  std::vector<int> prim;      // winning global primitive index, -1 when none
  std::vector<int> owner;     // collider index of winning primitive, -1
  std::vector<int> touched;   // node ids with aff set (for fast clearing)

  void init(const GridSpec& g) {
    spec = g;
    size_t n = size_t(g.node_count());
    aff.assign(n, 0);
    dist.assign(n, 0);
    tag.assign(n, 0);
    normal.assign(n, Vec3::Zero());
    prim.assign(n, -1);
    owner.assign(n, -1);
    touched.clear();
  }

  void clear() {
    for (int id : touched) {
      aff[size_t(id)] = 0;
      dist[size_t(id)] = 0;
      tag[size_t(id)] = 0;
      normal[size_t(id)].setZero();
      prim[size_t(id)] = -1;
      owner[size_t(id)] = -1;
    }
    touched.clear();
  }
};

inline bool compatibility(int8_t tp, int8_t tg) {
  return tp == 0 || tg == 0 || tp == tg;
}

// One collider's contribution; `prim_base` offsets its primitive indices into
// the merged global numbering, `collider_id` records ownership for response
// lookup.  The reduction is serial per node update, deterministic by
// construction: min distance, then lowest global primitive index.
inline void splat_collider(CollisionGrid& cg, const RigidCollider& collider,
                           const RigidParticleSet& samples, int collider_id,
                           int prim_base) {
  const GridSpec& g = cg.spec;
  int ns = samples.size();
  for (int s = 0; s < ns; ++s) {
    Vec3 xs = samples.positions[size_t(s)] + collider.offset;
    SplineStencil st = SplineStencil::make(xs, g.dx);
    if (!stencil_in_grid(st, g))
      fail(ErrorCode::Config, "collider extends outside the simulation domain");
    int pid = samples.primitive_ids[size_t(s)];
    Primitive prim = collider.primitive(pid);
    int gpid = prim_base + pid;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          Vec3i node = st.node(i, j, k);
          Vec3 xg = g.node_pos(node);
          if (!projection_inside(xg, prim)) continue;
          Real d = point_primitive_distance(xg, prim);
          Real ad = std::abs(d);
          int id = g.node_id(node);
          bool take;
          if (!cg.aff[size_t(id)]) {
            take = true;
            cg.touched.push_back(id);
          } else {
            take = ad < cg.dist[size_t(id)] ||
                   (ad == cg.dist[size_t(id)] && gpid < cg.prim[size_t(id)]);
          }
          if (take) {
            cg.aff[size_t(id)] = 1;
            cg.dist[size_t(id)] = ad;
            cg.tag[size_t(id)] = int8_t(sign_pos(d));
            cg.normal[size_t(id)] = prim.normal;
            cg.prim[size_t(id)] = gpid;
            cg.owner[size_t(id)] = collider_id;
          }
        }
  }
}

inline CollisionGrid build_collision_grid(const RigidParticleSet& samples,
                                          const RigidCollider& collider,
                                          const GridSpec& grid) {
  CollisionGrid cg;
  cg.init(grid);
  splat_collider(cg, collider, samples, 0, 0);
  return cg;
}

} // namespace asmpm
