#pragma once

#include "asmpm/core/svd3.hpp"
#include "asmpm/materials/model.hpp"

namespace asmpm {

// Native-parameter gradient slots, ordered exactly like pack().
// Unused tail entries stay zero.
struct ParamGrad {
  Real g[4] = {0, 0, 0, 0};

  void accumulate(const ParamGrad& o) {
    for (int i = 0; i < 4; ++i) g[i] += o.g[i];
  }
};

// Kirchhoff stress.
//  - solids (fixed corotated):   tau = 2 mu (F - R) F^T + lambda J (J - 1) I
//  - newtonian fluid:            tau = kappa (J - 1) J I + 2 mu sym(C)
// `rot` caches the SVD of F for solids (needed again in the backward pass).
inline Mat3 stress(const MaterialModel& model, const Mat3& F, const Mat3& strain_rate,
                   const Svd3* cached_svd = nullptr) {
  if (auto* nw = std::get_if<Newtonian>(&model)) {
    Real J = F.determinant();
    return nw->kappa * (J - 1) * J * Mat3::Identity() + 2 * nw->mu * strain_rate;
  }
  Lame lm = lame_of(model);
  Svd3 svd = cached_svd ? *cached_svd : svd3(F);
  Mat3 R = svd.rotation();
  Real J = F.determinant();
  return 2 * lm.mu * (F - R) * F.transpose() +
         lm.lambda * J * (J - 1) * Mat3::Identity();
}

// Reverse-mode rule for stress: given tau_bar, accumulate adjoints of F, of the
// strain rate, and of the native model parameters.
inline void stress_backward(const MaterialModel& model, const Mat3& F,
                            const Mat3& strain_rate, const Svd3& svd,
                            const Mat3& tau_bar, Mat3& F_bar, Mat3& strain_rate_bar,
                            ParamGrad& pg) {
  Real J = F.determinant();
  Real trace_tb = tau_bar.trace();

  if (auto* nw = std::get_if<Newtonian>(&model)) {
    // d(kappa (J^2 - J))/dJ = kappa (2J - 1); dJ/dF = cof(F)
    pg.g[0] += 2 * tau_bar.cwiseProduct(strain_rate).sum(); // mu
    pg.g[1] += trace_tb * (J * J - J);                      // kappa
    strain_rate_bar += 2 * nw->mu * tau_bar;
    F_bar += nw->kappa * trace_tb * (2 * J - 1) * cofactor(F);
    return;
  }

  Lame lm = lame_of(model);
  Mat3 R = svd.rotation();
  Mat3 A = F - R;

  Real mu_bar = 2 * tau_bar.cwiseProduct(A * F.transpose()).sum();
  Real lambda_bar = trace_tb * (J * J - J);

  F_bar += 2 * lm.mu * (tau_bar * F + tau_bar.transpose() * A) +
           lm.lambda * trace_tb * (2 * J - 1) * cofactor(F);

  // rotation path: R = U V^T
  Mat3 R_bar = -2 * lm.mu * (tau_bar * F);
  Mat3 U_bar = R_bar * svd.V;
  Mat3 V_bar = R_bar.transpose() * svd.U;
  F_bar += svd3_backward(svd, U_bar, Vec3::Zero(), V_bar);

  // route (mu_bar, lambda_bar) into native parameters
  if (auto* nn = std::get_if<NonNewtonian>(&model)) {
    (void)nn;
    pg.g[0] += mu_bar - 2 * lambda_bar / 3; // mu (lambda = kappa - 2mu/3)
    pg.g[1] += lambda_bar;                  // kappa
  } else if (std::holds_alternative<Elastic>(model) ||
             std::holds_alternative<Plasticine>(model)) {
    Real E, nu;
    if (auto* e = std::get_if<Elastic>(&model))
      E = e->E, nu = e->nu;
    else {
      auto* p = std::get_if<Plasticine>(&model);
      E = p->E, nu = p->nu;
    }
    Real D = (1 + nu) * (1 - 2 * nu);
    pg.g[0] += mu_bar / (2 * (1 + nu)) + lambda_bar * nu / D;                // E
    pg.g[1] += -mu_bar * E / (2 * sqr(1 + nu)) +
               lambda_bar * E * (1 + 2 * nu * nu) / sqr(D);                  // nu
  }
  // granular: elastic constants fixed, no parameter adjoint
}

} // namespace asmpm
