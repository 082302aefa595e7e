#pragma once

#include "asmpm/engine/colliders.hpp"
#include "asmpm/materials/return_map.hpp"
#include "asmpm/materials/stress.hpp"

namespace asmpm {

// particle tag as used for gating (unset unless the particle is affine)
inline int8_t gating_tag(const ParticleCollision& pc, int p) {
  return pc.aff[size_t(p)] ? pc.tag[size_t(p)] : int8_t(0);
}

// Is `node` compatible with particle p?  A degenerate interpolated normal
// turns gating off for the whole step (compat_all).
inline bool node_compatible(const ParticleCollision& pc, int p, const CollisionGrid& cg,
                            int node_id) {
  if (pc.compat_all[size_t(p)]) return true;
  return compatibility(gating_tag(pc, p), cg.tag[size_t(node_id)]);
}

// velocity reconstruction for incompatible nodes, by contact response
inline Vec3 incompatible_response(SurfaceResponse resp, const Vec3& v_p,
                                  const Vec3& n_p, int8_t t_p, const Vec3& v_r) {
  switch (resp) {
    case SurfaceResponse::Sticky:
      return v_r;
    case SurfaceResponse::Slip:
      return v_p - n_p.dot(v_p) * n_p + n_p.dot(v_r) * n_p;
    case SurfaceResponse::Separating: {
      Vec3 nbar = Real(t_p) * n_p;
      if ((v_p - v_r).dot(nbar) > 0) return v_p; // moving away: keep velocity
      return v_p - n_p.dot(v_p) * n_p + n_p.dot(v_r) * n_p;
    }
  }
  return v_p;
}

// per-particle stress cache so the backward pass reuses the forward SVD
struct StressCache {
  std::vector<Mat3> tau;
  std::vector<Svd3> svd;
  std::vector<uint8_t> svd_valid;

  void resize(size_t n) {
    tau.resize(n);
    svd.resize(n);
    svd_valid.assign(n, 0);
  }
};

// MLS-MPM particle-to-grid scatter with fused stress impulse.  Serial scatter:
// accumulation order is fixed by particle index, so results are bit-stable.
inline void p2g(const MaterialState& st, const MaterialModel& model,
                const ColliderPack& pack, EulerianGrid& grid, const SimConfig& cfg,
                StressCache* cache = nullptr) {
  grid.clear();
  const GridSpec& g = cfg.grid;
  const bool gate = cfg.mode == CollisionMode::Cpic && !pack.empty();
  const Real stress_coef = -4 * cfg.dt / (g.dx * g.dx);
  const bool solid = !std::holds_alternative<Newtonian>(model);
  const int n = st.size();
  if (cache) cache->resize(size_t(n));

  for (int p = 0; p < n; ++p) {
    SplineStencil stn = SplineStencil::make(st.x[size_t(p)], g.dx);
    if (!stencil_in_grid(stn, g))
      fail(ErrorCode::OutOfDomain,
           "particle " + std::to_string(p) + " left the domain interior");

    Mat3 strain_rate = Real(0.5) * (st.C[size_t(p)] + st.C[size_t(p)].transpose());
    Svd3 svd;
    if (solid) svd = svd3(st.F[size_t(p)]);
    Mat3 tau = stress(model, st.F[size_t(p)], strain_rate, solid ? &svd : nullptr);
    if (!tau.allFinite())
      fail(ErrorCode::Degenerate,
           "non-finite stress at particle " + std::to_string(p));
    if (cache) {
      cache->tau[size_t(p)] = tau;
      if (solid) {
        cache->svd[size_t(p)] = svd;
        cache->svd_valid[size_t(p)] = 1;
      }
    }

    Real m = st.mass[size_t(p)];
    Mat3 affine = stress_coef * st.volume0[size_t(p)] * tau + m * st.C[size_t(p)];
    Vec3 mv = m * st.v[size_t(p)];

    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          int id = g.node_id(stn.node(i, j, k));
          if (gate && !node_compatible(st.pc, p, pack.cgrid, id)) continue;
          Real w = stn.weight(i, j, k);
          Vec3 dpos = g.node_pos(stn.node(i, j, k)) - st.x[size_t(p)];
          grid.touch(id);
          grid.mass[size_t(id)] += w * m;
          grid.mom[size_t(id)] += w * (mv + affine * dpos);
        }
  }

  // rigid-particles baseline: collider samples contribute inert mass
  if (cfg.mode == CollisionMode::RigidParticles) {
    size_t rp = 0;
    for (size_t c = 0; c < pack.colliders.size(); ++c) {
      const RigidCollider& col = pack.colliders[c];
      for (int s = 0; s < pack.samples[c].size(); ++s, ++rp) {
        Vec3 xs = pack.samples[c].positions[size_t(s)] + col.offset;
        SplineStencil stn = SplineStencil::make(xs, g.dx);
        if (!stencil_in_grid(stn, g))
          fail(ErrorCode::Config, "collider extends outside the simulation domain");
        Real m = pack.rp_mass[rp];
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
              int id = g.node_id(stn.node(i, j, k));
              grid.touch(id);
              grid.mass[size_t(id)] += stn.weight(i, j, k) * m;
              // zero velocity: no momentum contribution
            }
      }
    }
  }
}

inline bool wall_node(const GridSpec& g, const Vec3i& ijk, int margin) {
  for (int d = 0; d < 3; ++d)
    if (ijk[d] <= margin || ijk[d] >= g.res[d] - margin) return true;
  return false;
}

// momentum -> velocity, gravity, then the velocity-zeroing masks
inline void grid_op(EulerianGrid& grid, const SimConfig& cfg, const ColliderPack& pack) {
  const GridSpec& g = cfg.grid;
  for (int id : grid.active) {
    Real m = grid.mass[size_t(id)];
    if (m <= 0) {
      grid.vel[size_t(id)].setZero();
      continue;
    }
    Vec3i ijk = g.node_ijk(id);
    Vec3 v = grid.mom[size_t(id)] / m + cfg.dt * cfg.gravity;
    if (wall_node(g, ijk, cfg.wall_margin)) v.setZero();
    if (cfg.mode == CollisionMode::PlanarAnalytic) {
      Vec3 xg = g.node_pos(ijk);
      for (const PlanarBoundary& pb : pack.planes)
        if ((xg - pb.point).dot(pb.normal) <= 0) v.setZero();
    } else if (cfg.mode == CollisionMode::GopSdf && !pack.sdf.empty()) {
      if (pack.sdf[size_t(id)] <= 0) v.setZero();
    }
    grid.vel[size_t(id)] = v;
  }
}

// grid-to-particle gather with CPIC reconstruction, penalty impulse, strain
// update and plastic return map; advances positions.
inline void g2p(MaterialState& st, const MaterialModel& model, const ColliderPack& pack,
                const EulerianGrid& grid, const SimConfig& cfg,
                std::vector<RmCase>* rm_out = nullptr) {
  const GridSpec& g = cfg.grid;
  const bool gate = cfg.mode == CollisionMode::Cpic && !pack.empty();
  const Real inv_d = 4 / (g.dx * g.dx); // inverse APIC inertia for quadratic kernel
  const int n = st.size();
  if (rm_out) rm_out->assign(size_t(n), RmCase::None);

  parallel_for(n, [&](int p) {
    SplineStencil stn = SplineStencil::make(st.x[size_t(p)], g.dx);
    Vec3 v_new = Vec3::Zero();
    Mat3 B = Mat3::Zero();
    const Vec3 v_old = st.v[size_t(p)];
    const Vec3 n_p = st.pc.normal[size_t(p)];
    const int8_t t_p = gating_tag(st.pc, p);

    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          int id = g.node_id(stn.node(i, j, k));
          Real w = stn.weight(i, j, k);
          Vec3 dpos = g.node_pos(stn.node(i, j, k)) - st.x[size_t(p)];
          Vec3 u;
          if (gate && !node_compatible(st.pc, p, pack.cgrid, id)) {
            Vec3 v_r = pack.rigid_velocity_of(id, st.x[size_t(p)]);
            u = incompatible_response(pack.response_of(id), v_old, n_p, t_p, v_r);
          } else {
            u = grid.vel[size_t(id)];
          }
          v_new += w * u;
          B += w * u * dpos.transpose();
        }

    Mat3 C_new = inv_d * B;

    if (gate) {
      Vec3 f = penalty_force(st.pc.aff[size_t(p)], st.pc.latched[size_t(p)],
                             st.pc.dist[size_t(p)], st.pc.tag[size_t(p)], n_p, cfg.k_h);
      v_new += cfg.dt * f / st.mass[size_t(p)];
    }

    if (!v_new.allFinite())
      fail(ErrorCode::Degenerate,
           "non-finite velocity at particle " + std::to_string(p));
    if (v_new.norm() > cfg.divergence_velocity)
      fail(ErrorCode::Diverged, "simulation diverged at particle " + std::to_string(p) +
                                    " (|v| > " + std::to_string(cfg.divergence_velocity) +
                                    " m/s); reduce dt or k_h");

    Mat3 F_trial = (Mat3::Identity() + cfg.dt * C_new) * st.F[size_t(p)];
    ReturnMap rm = return_map(model, F_trial, cfg.dt, p);
    if (rm_out) (*rm_out)[size_t(p)] = rm.kase;

    st.v[size_t(p)] = v_new;
    st.C[size_t(p)] = C_new;
    st.F[size_t(p)] = rm.F;
    st.x[size_t(p)] += cfg.dt * v_new;
  });
}

// one substep
inline void step(MaterialState& st, ColliderPack& pack, EulerianGrid& grid,
                 const MaterialModel& model, const SimConfig& cfg) {
  if (cfg.dt == 0) return;
  if (cfg.mode == CollisionMode::Cpic && !pack.empty()) {
    pack.ensure_cgrid();
    transfer_to_particles(pack.cgrid, st.x, st.pc);
  }
  p2g(st, model, pack, grid, cfg);
  grid_op(grid, cfg, pack);
  g2p(st, model, pack, grid, cfg);
  pack.advance(cfg.dt);
}

} // namespace asmpm
