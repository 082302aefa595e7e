#pragma once

#include "asmpm/core/svd3.hpp"
#include "asmpm/materials/stress.hpp"

namespace asmpm {

// Which branch of the return map fired; frozen on the tape so the backward
// pass differentiates the same piecewise-smooth branch the forward pass took.
enum class RmCase : uint8_t {
  None = 0,     // elastic / inside yield surface: F unchanged
  Project = 1,  // radial projection in Hencky space (von Mises / DP shell)
  Tip = 2,      // Drucker-Prager cone tip: all elastic strain removed
  Volume = 3,   // newtonian: deviatoric reset, F <- J^(1/3) I
};

struct ReturnMap {
  Mat3 F;
  RmCase kase = RmCase::None;
  Svd3 svd;           // of F_trial (valid unless kase == None/Volume)
  bool svd_valid = false;
};

inline Real drucker_prager_alpha(Real theta_deg) {
  Real s = std::sin(theta_deg * Real(EIGEN_PI) / 180);
  return std::sqrt(Real(2) / 3) * 2 * s / (3 - s);
}

namespace detail {

inline Vec3 hencky_of(const Svd3& svd, int particle) {
  Vec3 eps;
  for (int i = 0; i < 3; ++i) {
    if (svd.s[i] <= Real(1e-10))
      fail(ErrorCode::Degenerate,
           "deformation gradient lost invertibility at particle " +
               std::to_string(particle));
    eps[i] = std::log(svd.s[i]);
  }
  return eps;
}

inline Mat3 rebuild_from_hencky(const Svd3& svd, const Vec3& eps) {
  Vec3 s(std::exp(eps[0]), std::exp(eps[1]), std::exp(eps[2]));
  return svd.U * s.asDiagonal() * svd.V.transpose();
}

} // namespace detail

inline ReturnMap return_map(const MaterialModel& model, const Mat3& F_trial, Real dt,
                            int particle = -1) {
  ReturnMap out;
  out.F = F_trial;

  if (std::holds_alternative<Elastic>(model)) return out;

  if (std::holds_alternative<Newtonian>(model)) {
    Real J = F_trial.determinant();
    if (J <= 0)
      fail(ErrorCode::Degenerate,
           "fluid volume became non-positive at particle " + std::to_string(particle));
    out.F = std::cbrt(J) * Mat3::Identity();
    out.kase = RmCase::Volume;
    return out;
  }

  out.svd = svd3(F_trial);
  out.svd_valid = true;
  Vec3 eps = detail::hencky_of(out.svd, particle);
  Real trace = eps.sum();
  Vec3 dev = eps - Vec3::Constant(trace / 3);
  Real n = dev.norm();
  Lame lm = lame_of(model);

  if (auto* p = std::get_if<Plasticine>(&model)) {
    Real r = p->tau_y / (2 * lm.mu); // yield radius in Hencky strain
    if (n <= r) return out;
    Vec3 eps_new = eps - (n - r) / n * dev;
    out.F = detail::rebuild_from_hencky(out.svd, eps_new);
    out.kase = RmCase::Project;
    return out;
  }

  if (auto* nn = std::get_if<NonNewtonian>(&model)) {
    Real r = nn->tau_y / (2 * lm.mu);
    if (n <= r) return out;
    // Bingham overstress: excess deviatoric strain decays at a rate set by eta
    Real beta = nn->eta / (nn->eta + 2 * lm.mu * dt);
    Real n_new = r + beta * (n - r);
    Vec3 eps_new = Vec3::Constant(trace / 3) + (n_new / n) * dev;
    out.F = detail::rebuild_from_hencky(out.svd, eps_new);
    out.kase = RmCase::Project;
    return out;
  }

  if (auto* g = std::get_if<Granular>(&model)) {
    if (trace > 0) { // expansion: no resistance, snap to the cone tip
      out.F = out.svd.rotation();
      out.kase = RmCase::Tip;
      return out;
    }
    Real alpha = drucker_prager_alpha(g->theta_fric);
    Real dgamma = n + alpha * (3 * lm.lambda + 2 * lm.mu) / (2 * lm.mu) * trace;
    if (dgamma <= 0) return out;
    Vec3 eps_new = eps - dgamma / n * dev;
    out.F = detail::rebuild_from_hencky(out.svd, eps_new);
    out.kase = RmCase::Project;
    return out;
  }

  return out; // newtonian handled above; elastic falls through earlier
}

// Reverse-mode rule.  Recomputes the (frozen) branch picked by `kase` and
// accumulates the trial-gradient plus native-parameter adjoints.
inline void return_map_backward(const MaterialModel& model, const Mat3& F_trial,
                                Real dt, const ReturnMap& rm, const Mat3& Fn_bar,
                                Mat3& Ft_bar, ParamGrad& pg) {
  if (rm.kase == RmCase::None) {
    Ft_bar += Fn_bar; // identity map
    return;
  }

  if (rm.kase == RmCase::Volume) {
    // F_new = J^(1/3) I  =>  F_bar = tr(Fn_bar) (1/3) J^(-2/3) cof(F)
    Real J = F_trial.determinant();
    Ft_bar += Fn_bar.trace() * (Real(1) / 3) * std::pow(J, Real(-2) / 3) *
              cofactor(F_trial);
    return;
  }

  const Svd3& svd = rm.svd;
  Vec3 eps;
  for (int i = 0; i < 3; ++i) eps[i] = std::log(svd.s[i]);
  Real trace = eps.sum();
  Vec3 dev = eps - Vec3::Constant(trace / 3);
  Real n = dev.norm();
  Lame lm = lame_of(model);

  // recompute projected strain to get s' = exp(eps')
  Vec3 eps_new = eps;
  if (rm.kase == RmCase::Tip) {
    eps_new.setZero();
  } else if (auto* p = std::get_if<Plasticine>(&model)) {
    eps_new = eps - (n - p->tau_y / (2 * lm.mu)) / n * dev;
  } else if (auto* nn = std::get_if<NonNewtonian>(&model)) {
    Real r = nn->tau_y / (2 * lm.mu);
    Real beta = nn->eta / (nn->eta + 2 * lm.mu * dt);
    eps_new = Vec3::Constant(trace / 3) + ((r + beta * (n - r)) / n) * dev;
  } else if (auto* g = std::get_if<Granular>(&model)) {
    Real alpha = drucker_prager_alpha(g->theta_fric);
    Real dgamma = n + alpha * (3 * lm.lambda + 2 * lm.mu) / (2 * lm.mu) * trace;
    eps_new = eps - dgamma / n * dev;
  }

  Vec3 s_new(std::exp(eps_new[0]), std::exp(eps_new[1]), std::exp(eps_new[2]));

  // F_new = U diag(s') V^T: split Fn_bar into U, s', V adjoints
  Mat3 U_bar = Fn_bar * svd.V * s_new.asDiagonal();
  Mat3 V_bar = Fn_bar.transpose() * svd.U * s_new.asDiagonal();
  Mat3 core = svd.U.transpose() * Fn_bar * svd.V;
  Vec3 eps_new_bar(core(0, 0) * s_new[0], core(1, 1) * s_new[1],
                   core(2, 2) * s_new[2]);

  // eps' -> eps and parameter adjoints, per branch
  Vec3 eps_bar = Vec3::Zero();
  const Vec3 ones = Vec3::Ones();
  auto dev_of = [&](const Vec3& v) { return Vec3(v - Vec3::Constant(v.sum() / 3)); };

  if (rm.kase == RmCase::Tip) {
    // eps' constant: nothing flows into eps or parameters
  } else if (auto* p = std::get_if<Plasticine>(&model)) {
    Real r = p->tau_y / (2 * lm.mu);
    // eps' = mean(eps) 1 + (r/n) dev
    Real d_dot = dev.dot(eps_new_bar);
    eps_bar = Vec3::Constant(eps_new_bar.sum() / 3) + (r / n) * dev_of(eps_new_bar) -
              (r / (n * n * n)) * d_dot * dev;
    Real r_bar = d_dot / n;
    // r = tau_y / (2 mu(E, nu))
    Real tau_bar = r_bar / (2 * lm.mu);
    Real mu_bar = -r_bar * p->tau_y / (2 * lm.mu * lm.mu);
    pg.g[2] += tau_bar; // tau_y
    pg.g[0] += mu_bar / (2 * (1 + p->nu));                                   // E
    pg.g[1] += -mu_bar * p->E / (2 * sqr(1 + p->nu));                        // nu
  } else if (auto* nn = std::get_if<NonNewtonian>(&model)) {
    Real r = nn->tau_y / (2 * lm.mu);
    Real denom = nn->eta + 2 * lm.mu * dt;
    Real beta = nn->eta / denom;
    Real q_over_n = (r + beta * (n - r)) / n;
    Real d_dot = dev.dot(eps_new_bar);
    // eps' = mean(eps) 1 + (q(n)/n) dev,  q = beta n + (1-beta) r
    eps_bar = Vec3::Constant(eps_new_bar.sum() / 3) + q_over_n * dev_of(eps_new_bar) -
              ((1 - beta) * r / (n * n * n)) * d_dot * dev;
    Real r_bar = (1 - beta) * d_dot / n;
    Real beta_bar = (n - r) * d_dot / n;
    // beta = eta / (eta + 2 mu dt)
    pg.g[3] += beta_bar * 2 * lm.mu * dt / sqr(denom);                // eta
    Real mu_bar = -beta_bar * nn->eta * 2 * dt / sqr(denom)           // via beta
                  - r_bar * nn->tau_y / (2 * lm.mu * lm.mu);          // via r
    pg.g[2] += r_bar / (2 * lm.mu);                                   // tau_y
    // lambda = kappa - 2 mu / 3 does not enter this projection; mu direct
    pg.g[0] += mu_bar;
  } else if (auto* g = std::get_if<Granular>(&model)) {
    Real alpha = drucker_prager_alpha(g->theta_fric);
    Real k = (3 * lm.lambda + 2 * lm.mu) / (2 * lm.mu);
    Real dgamma = n + alpha * k * trace;
    Real d_dot = dev.dot(eps_new_bar);
    // eps' = eps - (dgamma/n) dev; dgamma = n + alpha k tr(eps)
    // expand: eps' = eps - dev - (alpha k tr / n) dev
    Real c = alpha * k * trace / n;
    eps_bar = eps_new_bar - dev_of(eps_new_bar) - c * dev_of(eps_new_bar) -
              (alpha * k / n) * d_dot * ones + (alpha * k * trace / (n * n * n)) * d_dot * dev;
    Real alpha_bar = -k * trace * d_dot / n;
    Real s = std::sin(g->theta_fric * Real(EIGEN_PI) / 180);
    Real cth = std::cos(g->theta_fric * Real(EIGEN_PI) / 180);
    Real dalpha_dtheta =
        std::sqrt(Real(2) / 3) * 2 * 3 * cth / sqr(3 - s) * Real(EIGEN_PI) / 180;
    pg.g[0] += alpha_bar * dalpha_dtheta; // theta_fric
    (void)dgamma;
  }

  // eps -> s, then F_trial through the SVD
  Vec3 s_bar(eps_bar[0] / svd.s[0], eps_bar[1] / svd.s[1], eps_bar[2] / svd.s[2]);
  Ft_bar += svd3_backward(svd, U_bar, s_bar, V_bar);
}

} // namespace asmpm
