#pragma once

#include "asmpm/engine/rollout.hpp"

namespace asmpm {

// Discrete decisions taken during one substep, frozen for the backward pass
// and asserted against the backward replay.
struct DiscreteRec {
  uint32_t compat = ~0u; // bit (i*9 + j*3 + k): node compatible with particle
  uint8_t aff = 0;
  uint8_t latched = 0;
  uint8_t penalty = 0;
  uint8_t compat_all = 0;
  int8_t tag = 0;
  uint8_t rm_case = 0;

  bool operator==(const DiscreteRec&) const = default;
};

// full pre-substep state: enough to replay the substep bit-exactly
struct Snapshot {
  std::vector<Vec3> x, v;
  std::vector<Mat3> C, F;
  std::vector<int8_t> tag;      // latch state carried between substeps
  std::vector<uint8_t> latched;
  std::vector<Vec3> offsets;    // collider poses at substep start

  void capture(const MaterialState& st, const ColliderPack& cpack) {
    x = st.x;
    v = st.v;
    C = st.C;
    F = st.F;
    tag = st.pc.tag;
    latched = st.pc.latched;
    offsets.clear();
    for (const RigidCollider& c : cpack.colliders) offsets.push_back(c.offset);
  }

  void restore(MaterialState& st, ColliderPack& cpack) const {
    st.x = x;
    st.v = v;
    st.C = C;
    st.F = F;
    st.pc.resize(x.size());
    st.pc.tag = tag;
    st.pc.latched = latched;
    bool moved = false;
    for (size_t c = 0; c < cpack.colliders.size(); ++c) {
      if ((cpack.colliders[c].offset - offsets[c]).squaredNorm() > 0) moved = true;
      cpack.colliders[c].offset = offsets[c];
    }
    if (moved) cpack.cgrid_built = false;
  }
};

struct Tape {
  std::vector<Snapshot> snaps;            // one per substep
  std::vector<std::vector<DiscreteRec>> disc;
  Trajectory traj;
  int frames = 0;
  int substeps = 0; // per frame
};

// Record the discrete decisions of one substep.  `x_pre` are the pre-advection
// positions (p2g/g2p stencils are built from those); the collision state on
// `st` is the post-transfer one used throughout the substep.
inline void record_discrete(const MaterialState& st, const std::vector<Vec3>& x_pre,
                            const ColliderPack& cpack, const SimConfig& cfg,
                            const std::vector<RmCase>& rm,
                            std::vector<DiscreteRec>& out) {
  const int n = st.size();
  out.assign(size_t(n), DiscreteRec{});
  const bool gate = cfg.mode == CollisionMode::Cpic && !cpack.empty();
  const GridSpec& g = cfg.grid;
  parallel_for(n, [&](int p) {
    DiscreteRec& r = out[size_t(p)];
    r.rm_case = uint8_t(rm[size_t(p)]);
    if (!gate) return;
    r.aff = st.pc.aff[size_t(p)];
    r.latched = st.pc.latched[size_t(p)];
    r.compat_all = st.pc.compat_all[size_t(p)];
    r.tag = st.pc.tag[size_t(p)];
    r.penalty = penalty_force(r.aff != 0, r.latched != 0, st.pc.dist[size_t(p)],
                              r.tag, st.pc.normal[size_t(p)], cfg.k_h)
                    .squaredNorm() > 0;
    uint32_t mask = 0;
    SplineStencil stn = SplineStencil::make(x_pre[size_t(p)], g.dx);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          int id = g.node_id(stn.node(i, j, k));
          if (node_compatible(st.pc, p, cpack.cgrid, id))
            mask |= (1u << (i * 9 + j * 3 + k));
        }
    r.compat = mask;
  });
}

// forward rollout that checkpoints every substep
inline void record_rollout(MaterialState state, ColliderPack& cpack,
                           const MaterialModel& model, const SimConfig& cfg,
                           int frames, Tape& tape) {
  cfg.validate();
  reset_motion(cpack);
  state.finalize();
  tape.frames = frames;
  tape.substeps = cfg.substeps_per_frame;
  const int total = frames * cfg.substeps_per_frame;
  tape.snaps.resize(size_t(total));
  tape.disc.resize(size_t(total));
  tape.traj.init(frames, state.size());

  EulerianGrid grid;
  grid.init(cfg.grid);
  std::vector<RmCase> rm;

  int t = 0;
  for (int f = 0; f < frames; ++f) {
    for (int s = 0; s < cfg.substeps_per_frame; ++s, ++t) {
      tape.snaps[size_t(t)].capture(state, cpack);
      if (cfg.dt == 0) {
        tape.disc[size_t(t)].assign(size_t(state.size()), DiscreteRec{});
        continue;
      }
      if (cfg.mode == CollisionMode::Cpic && !cpack.empty()) {
        cpack.ensure_cgrid();
        transfer_to_particles(cpack.cgrid, state.x, state.pc);
      }
      p2g(state, model, cpack, grid, cfg);
      grid_op(grid, cfg, cpack);
      g2p(state, model, cpack, grid, cfg, &rm);
      record_discrete(state, tape.snaps[size_t(t)].x, cpack, cfg, rm,
                      tape.disc[size_t(t)]);
      cpack.advance(cfg.dt);
    }
    std::copy(state.x.begin(), state.x.end(), tape.traj.frame(f));
  }
}

} // namespace asmpm
