#pragma once

#include "asmpm/engine/step.hpp"

namespace asmpm {

// Restore prescribed-motion state so repeated rollouts of the same pack are
// identical (identification calls rollout hundreds of times).
inline void reset_motion(ColliderPack& pack) {
  bool any = false;
  for (RigidCollider& c : pack.colliders) {
    any = any || c.offset.squaredNorm() > 0;
    c.offset.setZero();
  }
  if (any || pack.any_moving) pack.cgrid_built = false;
}

inline Trajectory rollout(MaterialState state, ColliderPack& pack,
                          const MaterialModel& model, const SimConfig& cfg,
                          int frames) {
  cfg.validate();
  if (frames < 1) fail(ErrorCode::Config, "frames must be >= 1");
  reset_motion(pack);
  state.finalize();

  EulerianGrid grid;
  grid.init(cfg.grid);
  Trajectory traj;
  traj.init(frames, state.size());

  for (int f = 0; f < frames; ++f) {
    for (int s = 0; s < cfg.substeps_per_frame; ++s)
      step(state, pack, grid, model, cfg);
    std::copy(state.x.begin(), state.x.end(), traj.frame(f));
  }
  return traj;
}

} // namespace asmpm
