#pragma once

#include "asmpm/engine/state.hpp"
#include "asmpm/geometry/sdf.hpp"

namespace asmpm {

// All colliders of a scene plus mode-specific precomputation.  The collision
// grid merges every collider's primitives under one global index space; a
// node's winner records which collider owns it so the contact response can
// differ per collider.
struct ColliderPack {
  std::vector<RigidCollider> colliders;
  std::vector<RigidParticleSet> samples;
  std::vector<int> prim_base;
  std::vector<PlanarBoundary> planes;

  CollisionGrid cgrid;
  bool cgrid_built = false;
  bool any_moving = false;

  std::vector<Real> sdf; // gop_sdf mode

  // rigid_particles baseline: collider samples become inert mass carriers
  std::vector<Real> rp_mass;

  bool empty() const { return colliders.empty(); }

  void prepare(const SimConfig& cfg, Real typical_particle_mass) {
    prim_base.clear();
    samples.clear();
    any_moving = false;
    int base = 0;
    for (const RigidCollider& c : colliders) {
      prim_base.push_back(base);
      base += c.primitive_count();
      samples.push_back(sample_rigid_particles(c, cfg.spacing(), cfg.seed));
      any_moving = any_moving || c.moving();
    }
    cgrid.init(cfg.grid);
    cgrid_built = false;

    if (cfg.mode == CollisionMode::GopSdf) {
      if (any_moving)
        fail(ErrorCode::BaselineUnsupported,
             "signed-distance baseline supports static colliders only");
      sdf.assign(size_t(cfg.grid.node_count()), std::numeric_limits<Real>::max());
      for (const RigidCollider& c : colliders) {
        if (!c.is_mesh())
          fail(ErrorCode::BaselineUnsupported,
               "signed-distance baseline requires mesh colliders");
        TriangleMesh posed = c.mesh();
        for (Vec3& vtx : posed.vertices) vtx += c.offset;
        finalize_mesh(posed);
        std::vector<Real> phi = build_sdf(posed, cfg.grid);
        for (size_t i = 0; i < sdf.size(); ++i) sdf[i] = std::min(sdf[i], phi[i]);
      }
    }
    if (cfg.mode == CollisionMode::RigidParticles) {
      rp_mass.clear();
      for (const RigidParticleSet& s : samples)
        for (int i = 0; i < s.size(); ++i)
          rp_mass.push_back(cfg.rp_mass_factor * typical_particle_mass);
    }
  }

  void rebuild_cgrid() {
    cgrid.clear();
    for (size_t c = 0; c < colliders.size(); ++c)
      splat_collider(cgrid, colliders[c], samples[c], int(c), prim_base[c]);
    cgrid_built = true;
  }

  // advance prescribed rigid motion by one substep
  void advance(Real dt) {
    for (RigidCollider& c : colliders) c.offset += dt * c.velocity;
    if (any_moving) cgrid_built = false;
  }

  void ensure_cgrid() {
    if (!cgrid_built) rebuild_cgrid();
  }

  SurfaceResponse response_of(int node_id) const {
    int own = cgrid.owner[size_t(node_id)];
    return own >= 0 ? colliders[size_t(own)].response : SurfaceResponse::Sticky;
  }

  Vec3 rigid_velocity_of(int node_id, const Vec3& at) const {
    int own = cgrid.owner[size_t(node_id)];
    return own >= 0 ? colliders[size_t(own)].rigid_velocity(at) : Vec3::Zero();
  }
};

} // namespace asmpm
