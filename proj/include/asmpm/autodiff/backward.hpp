#pragma once

#include "asmpm/autodiff/tape.hpp"

namespace asmpm {

// adjoints of the particle state, updated in place substep by substep
struct AdjointState {
  std::vector<Vec3> xb, vb;
  std::vector<Mat3> Cb, Fb;

  void init(size_t n) {
    xb.assign(n, Vec3::Zero());
    vb.assign(n, Vec3::Zero());
    Cb.assign(n, Mat3::Zero());
    Fb.assign(n, Mat3::Zero());
  }
};

// scratch buffers reused across substeps
struct BackwardWork {
  MaterialState state;
  EulerianGrid grid;
  StressCache scache;
  std::vector<Vec3> vbar;   // node velocity adjoints
  std::vector<Vec3> mombar; // node momentum adjoints
  std::vector<Real> massbar;

  void init(const MaterialState& initial, const GridSpec& g) {
    state = initial;
    state.finalize();
    grid.init(g);
    size_t n = size_t(g.node_count());
    vbar.assign(n, Vec3::Zero());
    mombar.assign(n, Vec3::Zero());
    massbar.assign(n, 0);
  }
};

[[noreturn]] inline void frozen_branch_mismatch(int particle, const char* what) {
  throw std::logic_error("backward replay diverged from recorded tape at particle " +
                         std::to_string(particle) + " (" + what + ")");
}

// Reverse one substep: entering, `adj` holds adjoints w.r.t. the post-substep
// state; on return it holds adjoints w.r.t. the pre-substep state.  Parameter
// adjoints accumulate into `pg` (native units).
inline void substep_backward(const Snapshot& snap,
                             const std::vector<DiscreteRec>& disc, ColliderPack& cpack,
                             const MaterialModel& model, const SimConfig& cfg,
                             AdjointState& adj, BackwardWork& wk, ParamGrad& pg) {
  if (cfg.dt == 0) return; // identity substep

  const GridSpec& g = cfg.grid;
  const bool gate = cfg.mode == CollisionMode::Cpic && !cpack.empty();
  const Real dt = cfg.dt;
  const Real inv_d = 4 / (g.dx * g.dx);
  const Real stress_coef = -4 * dt / (g.dx * g.dx);

  // ---- replay the forward substep from the checkpoint -------------------
  MaterialState& st = wk.state;
  snap.restore(st, cpack);
  if (gate) {
    cpack.ensure_cgrid();
    transfer_to_particles(cpack.cgrid, st.x, st.pc);
  }
  p2g(st, model, cpack, wk.grid, cfg, &wk.scache);
  grid_op(wk.grid, cfg, cpack);

  const int n = st.size();
  const CollisionGrid& cg = cpack.cgrid;

  for (int id : wk.grid.active) {
    wk.vbar[size_t(id)].setZero();
    wk.mombar[size_t(id)].setZero();
    wk.massbar[size_t(id)] = 0;
  }

  // ---- pass A: g2p backward (serial: scatters into node adjoints) -------
  for (int p = 0; p < n; ++p) {
    const DiscreteRec& rec = disc[size_t(p)];
    if (gate) {
      if (rec.aff != st.pc.aff[size_t(p)] || rec.tag != st.pc.tag[size_t(p)] ||
          rec.latched != st.pc.latched[size_t(p)] ||
          rec.compat_all != st.pc.compat_all[size_t(p)])
        frozen_branch_mismatch(p, "collision transfer state");
    }

    const Vec3 x_old = st.x[size_t(p)];
    const Vec3 v_old = st.v[size_t(p)];
    const Mat3 F_old = st.F[size_t(p)];
    const Real m = st.mass[size_t(p)];
    const Vec3 n_p = st.pc.normal[size_t(p)];
    const int8_t t_p = gating_tag(st.pc, p);
    SplineStencil stn = SplineStencil::make(x_old, g.dx);

    // recompute the gather
    Vec3 u[27];
    bool incomp[27];
    Vec3 v_new = Vec3::Zero();
    Mat3 B = Mat3::Zero();
    uint32_t mask = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          const int slot = i * 9 + j * 3 + k;
          const int id = g.node_id(stn.node(i, j, k));
          const Real w = stn.weight(i, j, k);
          const Vec3 dpos = g.node_pos(stn.node(i, j, k)) - x_old;
          bool inc = gate && !node_compatible(st.pc, p, cg, id);
          if (!inc) mask |= (1u << slot);
          incomp[slot] = inc;
          u[slot] = inc ? incompatible_response(cpack.response_of(id), v_old, n_p, t_p,
                                                cpack.rigid_velocity_of(id, x_old))
                        : wk.grid.vel[size_t(id)];
          v_new += w * u[slot];
          B += w * u[slot] * dpos.transpose();
        }
    if (gate && mask != rec.compat) frozen_branch_mismatch(p, "compatibility mask");

    Mat3 C_new = inv_d * B;

    bool penalty = false;
    if (gate) {
      Vec3 f = penalty_force(st.pc.aff[size_t(p)] != 0, st.pc.latched[size_t(p)] != 0,
                             st.pc.dist[size_t(p)], st.pc.tag[size_t(p)], n_p, cfg.k_h);
      penalty = f.squaredNorm() > 0;
      if (penalty != (rec.penalty != 0)) frozen_branch_mismatch(p, "penalty gate");
      v_new += dt * f / m;
    }

    Mat3 F_trial = (Mat3::Identity() + dt * C_new) * F_old;
    ReturnMap rm = return_map(model, F_trial, dt, p);
    if (uint8_t(rm.kase) != rec.rm_case) frozen_branch_mismatch(p, "return-map case");

    // ---- local backward ----
    const Vec3 xb_new = adj.xb[size_t(p)];
    const Vec3 vb_new = adj.vb[size_t(p)];
    const Mat3 Cb_new = adj.Cb[size_t(p)];
    const Mat3 Fb_new = adj.Fb[size_t(p)];

    Vec3 xb_old = xb_new;        // advection: x_new = x_old + dt v_new
    Vec3 vb_eff = vb_new + dt * xb_new;
    Vec3 vb_old = Vec3::Zero();

    // F chain: F_new = return_map((I + dt C_new) F_old)
    Mat3 Ft_bar = Mat3::Zero();
    return_map_backward(model, F_trial, dt, rm, Fb_new, Ft_bar, pg);
    Mat3 Cb_tot = Cb_new + dt * Ft_bar * F_old.transpose();
    Mat3 Fb_old = (Mat3::Identity() + dt * C_new).transpose() * Ft_bar;

    // penalty impulse backward
    Vec3 nbar = Vec3::Zero();
    Real dbar = 0;
    if (penalty) {
      Real coef = -dt * cfg.k_h / m;
      dbar += coef * n_p.dot(vb_eff);
      nbar += coef * st.pc.dist[size_t(p)] * vb_eff;
    }

    // gather backward
    Mat3 Bbar = inv_d * Cb_tot;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          const int slot = i * 9 + j * 3 + k;
          const int id = g.node_id(stn.node(i, j, k));
          const Real w = stn.weight(i, j, k);
          const Vec3 dpos = g.node_pos(stn.node(i, j, k)) - x_old;
          const Vec3 Bd = Bbar * dpos;
          const Vec3 ubar = w * (vb_eff + Bd);
          const Real wbar = u[slot].dot(vb_eff + Bd);
          xb_old += wbar * stn.weight_grad(i, j, k) - w * (Bbar.transpose() * u[slot]);
          if (!incomp[slot]) {
            if (wk.grid.mass[size_t(id)] > 0) wk.vbar[size_t(id)] += ubar;
            continue;
          }
          // incompatible: u = h(v_old, n_p; response, v_r)
          SurfaceResponse resp = cpack.response_of(id);
          const Vec3 v_r = cpack.rigid_velocity_of(id, x_old);
          if (resp == SurfaceResponse::Sticky) continue; // u = v_r, constant
          bool away = resp == SurfaceResponse::Separating &&
                      (v_old - v_r).dot(Real(t_p) * n_p) > 0;
          if (away) {
            vb_old += ubar; // u = v_old
          } else {
            // u = v_old - (v_old . n) n + (v_r . n) n
            vb_old += ubar - n_p.dot(ubar) * n_p;
            nbar += (v_r - v_old) * n_p.dot(ubar) + (v_r - v_old).dot(n_p) * ubar;
          }
        }

    // collision-transfer backward: d_p and n_p are kernel interpolations of x
    if (gate && st.pc.aff[size_t(p)] != 0) {
      Vec3 rawbar = Vec3::Zero();
      if (!st.pc.compat_all[size_t(p)]) {
        // n = raw / |raw|
        Vec3 nraw = Vec3::Zero();
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
              int id = g.node_id(stn.node(i, j, k));
              if (cg.aff[size_t(id)])
                nraw += stn.weight(i, j, k) * cg.normal[size_t(id)];
            }
        Real nn = nraw.norm();
        rawbar = (nbar - n_p.dot(nbar) * n_p) / nn;
      }
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          for (int k = 0; k < 3; ++k) {
            int id = g.node_id(stn.node(i, j, k));
            if (!cg.aff[size_t(id)]) continue;
            Real wbar_t = Real(cg.tag[size_t(id)]) * cg.dist[size_t(id)] * dbar +
                          cg.normal[size_t(id)].dot(rawbar);
            xb_old += wbar_t * stn.weight_grad(i, j, k);
          }
    }

    adj.xb[size_t(p)] = xb_old;
    adj.vb[size_t(p)] = vb_old;
    adj.Cb[size_t(p)].setZero();
    adj.Fb[size_t(p)] = Fb_old;
  }

  // ---- pass B: grid_op backward ------------------------------------------
  for (int id : wk.grid.active) {
    Real m = wk.grid.mass[size_t(id)];
    if (m <= 0) continue;
    Vec3i ijk = g.node_ijk(id);
    if (wall_node(g, ijk, cfg.wall_margin)) continue; // v forced to zero
    if (cfg.mode == CollisionMode::PlanarAnalytic) {
      Vec3 xg = g.node_pos(ijk);
      bool masked = false;
      for (const PlanarBoundary& pb : cpack.planes)
        if ((xg - pb.point).dot(pb.normal) <= 0) masked = true;
      if (masked) continue;
    } else if (cfg.mode == CollisionMode::GopSdf && !cpack.sdf.empty()) {
      if (cpack.sdf[size_t(id)] <= 0) continue;
    }
    const Vec3& vb = wk.vbar[size_t(id)];
    Vec3 v_pre = wk.grid.mom[size_t(id)] / m;
    wk.mombar[size_t(id)] = vb / m;
    wk.massbar[size_t(id)] = -vb.dot(v_pre) / m;
  }

  // ---- pass C: p2g backward (pure gather per particle) -------------------
  for (int p = 0; p < n; ++p) {
    const Vec3 x_old = st.x[size_t(p)];
    const Vec3 v_old = st.v[size_t(p)];
    const Mat3 C_old = st.C[size_t(p)];
    const Mat3 F_old = st.F[size_t(p)];
    const Real m = st.mass[size_t(p)];
    SplineStencil stn = SplineStencil::make(x_old, g.dx);

    const Mat3& tau = wk.scache.tau[size_t(p)];
    Mat3 affine = stress_coef * st.volume0[size_t(p)] * tau + m * C_old;

    Mat3 Abar = Mat3::Zero();
    Vec3 xb_acc = Vec3::Zero();
    Vec3 vb_acc = Vec3::Zero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          const int id = g.node_id(stn.node(i, j, k));
          if (gate && !node_compatible(st.pc, p, cg, id)) continue;
          const Real w = stn.weight(i, j, k);
          const Vec3 dpos = g.node_pos(stn.node(i, j, k)) - x_old;
          const Vec3& mb = wk.mombar[size_t(id)];
          vb_acc += (w * m) * mb;
          Abar += w * mb * dpos.transpose();
          Real wbar = m * wk.massbar[size_t(id)] + mb.dot(m * v_old + affine * dpos);
          xb_acc += wbar * stn.weight_grad(i, j, k) - w * (affine.transpose() * mb);
        }

    adj.xb[size_t(p)] += xb_acc;
    adj.vb[size_t(p)] += vb_acc;
    adj.Cb[size_t(p)] += m * Abar;

    Mat3 taubar = stress_coef * st.volume0[size_t(p)] * Abar;
    Mat3 strain_rate = Real(0.5) * (C_old + C_old.transpose());
    Mat3 srbar = Mat3::Zero();
    stress_backward(model, F_old, strain_rate, wk.scache.svd[size_t(p)], taubar,
                    adj.Fb[size_t(p)], srbar, pg);
    adj.Cb[size_t(p)] += Real(0.5) * (srbar + srbar.transpose());
  }
}

} // namespace asmpm
