#pragma once

#include <chrono>
#include <map>
#include <ostream>

#include "asmpm/autodiff/grad.hpp"

namespace asmpm {

struct OptimizerConfig {
  Real lr = 0.05; // coordinate-space step; log10 for moduli, degrees for angles
  Real beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int max_iters = 300;
  Real stall_tol = 1e-10;  // required best-loss improvement ...
  int stall_window = 20;   // ... over this many iterations
  Real loss_floor = 1e-13; // treat as exactly recovered
  int max_lr_halvings = 5;
  std::map<std::string, Real> lr_overrides = {{"theta_fric", 0.5}};

  void validate() const {
    if (!(beta1 > 0 && beta1 < 1 && beta2 > 0 && beta2 < 1))
      fail(ErrorCode::Config, "adam betas must lie in (0, 1)");
    if (lr <= 0) fail(ErrorCode::Config, "learning rate must be > 0");
    if (max_iters < 0) fail(ErrorCode::Config, "max_iters must be >= 0");
  }
};

struct IdentificationReport {
  ParameterVector estimate;     // best-loss parameters seen
  std::vector<Real> errors;     // 100 x |coordinate - truth coordinate|; empty without truth
  std::vector<Real> loss_curve; // entry 0 is the initial guess
  Real best_loss = std::numeric_limits<Real>::max();
  int iterations = 0; // accepted optimizer steps
  int halvings = 0;
  bool aborted = false;   // divergence persisted past max_lr_halvings
  bool converged = false; // stopped on loss floor or stall, not on max_iters
  std::string stop_reason;
  Real wall_seconds = 0;
};

inline std::vector<Real> coordinate_errors(const ParameterVector& estimate,
                                           const ParameterVector& truth) {
  if (estimate.kind != truth.kind || estimate.size() != truth.size())
    fail(ErrorCode::Dimension, "estimate and truth describe different materials");
  std::vector<Real> e(size_t(estimate.size()));
  for (int i = 0; i < estimate.size(); ++i)
    e[size_t(i)] = 100 * std::abs(estimate.values[size_t(i)] - truth.values[size_t(i)]);
  return e;
}

// Adam on ParameterVector coordinates with bound clamping.  A divergent
// candidate is rejected and retried from the last accepted iterate with the
// learning rate halved; past max_lr_halvings the run aborts with the best
// parameters found so far.
inline IdentificationReport identify(const ParameterVector& guess,
                                     const MaterialState& initial, ColliderPack& cpack,
                                     const SimConfig& cfg, const Trajectory& ref,
                                     const OptimizerConfig& opt,
                                     const ParameterVector* truth = nullptr,
                                     std::ostream* log = nullptr) {
  opt.validate();
  auto t0 = std::chrono::steady_clock::now();
  auto finish = [&](IdentificationReport& r) {
    r.wall_seconds =
        std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
    if (truth) r.errors = coordinate_errors(r.estimate, *truth);
    return r;
  };

  IdentificationReport rep;
  rep.estimate = guess;

  const int np = guess.size();
  std::vector<Real> lr(size_t(np), opt.lr);
  for (int i = 0; i < np; ++i) {
    auto it = opt.lr_overrides.find(guess.names[size_t(i)]);
    if (it != opt.lr_overrides.end()) lr[size_t(i)] = it->second;
  }

  ParameterVector pv = guess;
  std::vector<Real> grad;
  try {
    Gradient g0 = grad_rollout(pv, initial, cpack, cfg, ref);
    grad = g0.g;
    rep.loss_curve.push_back(g0.loss);
    rep.best_loss = g0.loss;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Diverged) throw;
    rep.aborted = true;
    rep.stop_reason = std::string("diverged at the initial guess: ") + e.what();
    return finish(rep);
  }
  if (log) *log << "iter 0 loss " << rep.best_loss << "\n";
  std::vector<Real> best_curve = {rep.best_loss};

  if (rep.best_loss <= opt.loss_floor) {
    rep.converged = true;
    rep.stop_reason = "loss at floor";
    return finish(rep);
  }

  std::vector<Real> m(size_t(np), 0), v(size_t(np), 0);
  Real lr_scale = 1;

  for (int iter = 1; iter <= opt.max_iters; ++iter) {
    // moment update once per iteration; retries reuse it with a smaller step
    std::vector<Real> m1 = m, v1 = v;
    for (int i = 0; i < np; ++i) {
      m1[size_t(i)] = opt.beta1 * m[size_t(i)] + (1 - opt.beta1) * grad[size_t(i)];
      v1[size_t(i)] = opt.beta2 * v[size_t(i)] + (1 - opt.beta2) * sqr(grad[size_t(i)]);
    }
    Real bc1 = 1 - std::pow(opt.beta1, iter);
    Real bc2 = 1 - std::pow(opt.beta2, iter);

    Gradient gc;
    ParameterVector cand;
    for (;;) {
      cand = pv;
      for (int i = 0; i < np; ++i) {
        Real step = lr_scale * lr[size_t(i)] * (m1[size_t(i)] / bc1) /
                    (std::sqrt(v1[size_t(i)] / bc2) + opt.eps);
        cand.values[size_t(i)] -= step;
      }
      cand.clamp_to_bounds();
      try {
        gc = grad_rollout(cand, initial, cpack, cfg, ref);
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Diverged) throw;
        ++rep.halvings;
        lr_scale /= 2;
        if (log)
          *log << "iter " << iter << " diverged, lr scale now " << lr_scale << "\n";
        if (rep.halvings > opt.max_lr_halvings) {
          rep.aborted = true;
          rep.stop_reason = "diverged after maximum learning-rate halvings";
          return finish(rep);
        }
      }
    }

    pv = cand;
    m = m1;
    v = v1;
    grad = gc.g;
    rep.loss_curve.push_back(gc.loss);
    rep.iterations = iter;
    if (gc.loss < rep.best_loss) {
      rep.best_loss = gc.loss;
      rep.estimate = pv;
    }
    best_curve.push_back(rep.best_loss);
    if (log) *log << "iter " << iter << " loss " << gc.loss << "\n";

    if (rep.best_loss <= opt.loss_floor) {
      rep.converged = true;
      rep.stop_reason = "loss at floor";
      return finish(rep);
    }
    if (iter >= opt.stall_window &&
        best_curve[size_t(iter - opt.stall_window)] - rep.best_loss < opt.stall_tol) {
      rep.converged = true;
      rep.stop_reason = "no improvement over stall window";
      return finish(rep);
    }
  }
  rep.stop_reason = "max iterations";
  return finish(rep);
}

} // namespace asmpm
