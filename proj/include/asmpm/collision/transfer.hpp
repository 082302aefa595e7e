#pragma once

#include "asmpm/collision/collision_grid.hpp"
#include "asmpm/core/parallel.hpp"

namespace asmpm {

// Per-particle collision view, interpolated from the collision grid each
// substep.  The tag latches: it keeps its first acquired sign for as long as
// the particle stays affine, so a particle that slightly penetrates keeps the
// memory of which side it came from.
struct ParticleCollision {
  std::vector<uint8_t> aff;      // A_p
  std::vector<Real> dist;        // d_p (signed)
  std::vector<int8_t> tag;       // T_p: +1/-1, 0 = unset
  std::vector<Vec3> normal;      // n_p (unit or zero)
  std::vector<uint8_t> latched;
  std::vector<uint8_t> compat_all; // degenerate normal: skip gating this step

  void resize(size_t n) {
    aff.assign(n, 0);
    dist.assign(n, 0);
    tag.assign(n, 0);
    normal.assign(n, Vec3::Zero());
    latched.assign(n, 0);
    compat_all.assign(n, 0);
  }
  size_t size() const { return aff.size(); }
};

inline Vec3 penalty_force(bool aff, bool latched, Real d_p, int8_t t_p,
                          const Vec3& n_p, Real k_h) {
  if (!aff || !latched) return Vec3::Zero();
  if (d_p == 0 || int8_t(sign_pos(d_p)) == t_p) return Vec3::Zero();
  return -k_h * d_p * n_p;
}

// interpolate A/d/n from the grid and update the latched tag
inline void transfer_to_particles(const CollisionGrid& cg, const std::vector<Vec3>& xs,
                                  ParticleCollision& pc) {
  const GridSpec& g = cg.spec;
  parallel_for(int(xs.size()), [&](int p) {
    SplineStencil st = SplineStencil::make(xs[size_t(p)], g.dx);
    bool any = false;
    Real d = 0;
    Vec3 nraw = Vec3::Zero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          int id = g.node_id(st.node(i, j, k));
          if (!cg.aff[size_t(id)]) continue;
          any = true;
          Real w = st.weight(i, j, k);
          d += w * Real(cg.tag[size_t(id)]) * cg.dist[size_t(id)];
          nraw += w * cg.normal[size_t(id)];
        }
    if (!any) {
      pc.aff[size_t(p)] = 0;
      pc.dist[size_t(p)] = 0;
      pc.tag[size_t(p)] = 0;
      pc.normal[size_t(p)].setZero();
      pc.latched[size_t(p)] = 0;
      pc.compat_all[size_t(p)] = 0;
      return;
    }
    pc.aff[size_t(p)] = 1;
    pc.dist[size_t(p)] = d;
    Real nn = nraw.norm();
    if (nn < Real(1e-12)) {
      pc.normal[size_t(p)].setZero();
      pc.compat_all[size_t(p)] = 1;
    } else {
      pc.normal[size_t(p)] = nraw / nn;
      pc.compat_all[size_t(p)] = 0;
    }
    if (!pc.latched[size_t(p)]) {
      pc.tag[size_t(p)] = int8_t(sign_pos(d));
      pc.latched[size_t(p)] = 1;
    }
  });
}

} // namespace asmpm
