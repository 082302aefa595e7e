#pragma once

#include "asmpm/autodiff/backward.hpp"
#include "asmpm/engine/rollout.hpp"

namespace asmpm {

// mean squared position error over all frames and particles
inline Real loss_mse(const Trajectory& sim, const Trajectory& ref) {
  if (sim.frames != ref.frames || sim.particles != ref.particles)
    fail(ErrorCode::Dimension,
         "trajectory shape mismatch: " + std::to_string(sim.frames) + "x" +
             std::to_string(sim.particles) + " vs " + std::to_string(ref.frames) + "x" +
             std::to_string(ref.particles));
  if (sim.pos.empty()) return 0;
  Real acc = 0;
  for (size_t i = 0; i < sim.pos.size(); ++i)
    acc += (sim.pos[i] - ref.pos[i]).squaredNorm();
  return acc / (Real(sim.frames) * Real(sim.particles));
}

struct Gradient {
  Real loss = 0;
  std::vector<Real> g; // in optimization coordinates, ParameterVector order
};

namespace detail {

[[noreturn]] inline void rethrow_as_divergence(const Error& e) {
  if (e.code() == ErrorCode::Degenerate)
    throw Error(ErrorCode::Diverged,
                std::string(e.what()) + "; simulation diverged, reduce dt or k_h");
  throw e;
}

} // namespace detail

// Loss plus reverse-mode parameter gradient of a rollout against a reference
// trajectory.  The forward pass is checkpointed per substep; the backward pass
// replays each substep from its checkpoint and pulls adjoints through it.
inline Gradient grad_rollout(const ParameterVector& pv, const MaterialState& initial,
                             ColliderPack& cpack, const SimConfig& cfg,
                             const Trajectory& ref) {
  Gradient out;
  out.g.assign(size_t(pv.size()), 0);
  if (ref.frames == 0) return out;
  if (ref.particles != int(initial.x.size()))
    fail(ErrorCode::Dimension, "reference trajectory has " +
                                   std::to_string(ref.particles) + " particles, state has " +
                                   std::to_string(initial.x.size()));

  MaterialModel model = unpack(pv);
  Tape tape;
  try {
    record_rollout(initial, cpack, model, cfg, ref.frames, tape);
  } catch (const Error& e) {
    detail::rethrow_as_divergence(e);
  }
  out.loss = loss_mse(tape.traj, ref);

  const int n = int(initial.x.size());
  AdjointState adj;
  adj.init(size_t(n));
  BackwardWork wk;
  wk.init(initial, cfg.grid);
  ParamGrad pg;

  const Real coef = 2 / (Real(ref.frames) * Real(n));
  for (int f = ref.frames - 1; f >= 0; --f) {
    const Vec3* sim = tape.traj.frame(f);
    const Vec3* want = ref.frame(f);
    for (int p = 0; p < n; ++p) adj.xb[size_t(p)] += coef * (sim[size_t(p)] - want[size_t(p)]);
    for (int s = tape.substeps - 1; s >= 0; --s) {
      size_t t = size_t(f) * size_t(tape.substeps) + size_t(s);
      try {
        substep_backward(tape.snaps[t], tape.disc[t], cpack, model, cfg, adj, wk, pg);
      } catch (const Error& e) {
        detail::rethrow_as_divergence(e);
      }
    }
  }

  std::vector<Real> native(size_t(pv.size()));
  for (int i = 0; i < pv.size(); ++i) native[size_t(i)] = pg.g[i];
  out.g = to_coordinate_gradient(pv, native);
  return out;
}

// Central differences in optimization coordinates; probes are pulled inside the
// parameter bounds when a coordinate sits at its box edge.
inline Gradient finite_diff_gradient(const ParameterVector& pv,
                                     const MaterialState& initial, ColliderPack& cpack,
                                     const SimConfig& cfg, const Trajectory& ref,
                                     Real h = 1e-5) {
  Gradient out;
  out.g.assign(size_t(pv.size()), 0);
  if (ref.frames == 0) return out;

  auto eval = [&](const ParameterVector& probe) {
    Trajectory t = rollout(initial, cpack, unpack(probe), cfg, ref.frames);
    return loss_mse(t, ref);
  };
  out.loss = eval(pv);

  for (int i = 0; i < pv.size(); ++i) {
    ParameterVector probe = pv;
    Real lo = std::max(pv.bounds[size_t(i)].first, pv.values[size_t(i)] - h);
    Real hi = std::min(pv.bounds[size_t(i)].second, pv.values[size_t(i)] + h);
    probe.values[size_t(i)] = hi;
    Real fhi = eval(probe);
    probe.values[size_t(i)] = lo;
    Real flo = eval(probe);
    out.g[size_t(i)] = (fhi - flo) / (hi - lo);
  }
  return out;
}

} // namespace asmpm
