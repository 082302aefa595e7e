#pragma once

#include <algorithm>
#include <string>
#include <variant>
#include <vector>

#include "asmpm/core/common.hpp"

namespace asmpm {

// Weakly compressible viscous fluid: mu is dynamic viscosity (Pa.s),
// kappa the bulk modulus (Pa).
struct Newtonian {
  Real mu = 10;
  Real kappa = 1e4;
};

// Viscoplastic (Bingham) solid: elastic shear modulus mu, bulk kappa,
// yield stress tau_y, plastic viscosity eta.
struct NonNewtonian {
  Real mu = 100;
  Real kappa = 1e5;
  Real tau_y = 10;
  Real eta = 1;
};

// Cohesionless granular medium, Drucker-Prager yield.  Only the friction
// angle is identified; the elastic constants are fixed scene properties.
struct Granular {
  Real theta_fric = 10; // degrees
  Real E = 3.537e5;     // fixed
  Real nu = 0.3;        // fixed
};

struct Elastic {
  Real E = 1e5;
  Real nu = 0.3;
};

// Elastoplastic solid with von Mises yield
struct Plasticine {
  Real E = 2e5;
  Real nu = 0.3;
  Real tau_y = 2e3;
};

using MaterialModel = std::variant<Newtonian, NonNewtonian, Granular, Elastic, Plasticine>;

inline const char* model_name(const MaterialModel& m) {
  static const char* names[] = {"newtonian", "non_newtonian", "granular", "elastic",
                                "plasticine"};
  return names[m.index()];
}

struct Lame {
  Real mu, lambda;
};

inline Lame lame_from_young(Real E, Real nu) {
  return {E / (2 * (1 + nu)), E * nu / ((1 + nu) * (1 - 2 * nu))};
}

inline Lame lame_of(const MaterialModel& m) {
  if (auto* e = std::get_if<Elastic>(&m)) return lame_from_young(e->E, e->nu);
  if (auto* p = std::get_if<Plasticine>(&m)) return lame_from_young(p->E, p->nu);
  if (auto* g = std::get_if<Granular>(&m)) return lame_from_young(g->E, g->nu);
  if (auto* n = std::get_if<NonNewtonian>(&m))
    return {n->mu, n->kappa - 2 * n->mu / 3};
  fail(ErrorCode::Config, "newtonian model has no Lame parameters");
}

// ---- optimization coordinates -------------------------------------------
//
// Moduli, viscosities and yield stresses are optimized in log10 space;
// Poisson ratio and friction angle stay linear.  Identification errors are
// reported as 100x absolute differences of these coordinates.

enum class ParamScale { Log10, Linear };

struct ParameterVector {
  int kind = 0; // MaterialModel variant index
  std::vector<Real> values;
  std::vector<std::string> names;
  std::vector<ParamScale> scales;
  std::vector<std::pair<Real, Real>> bounds; // in stored coordinates
  std::vector<Real> fixed; // non-identified model constants (granular E, nu)

  int size() const { return int(values.size()); }

  void clamp_to_bounds() {
    for (size_t i = 0; i < values.size(); ++i)
      values[i] = std::clamp(values[i], bounds[i].first, bounds[i].second);
  }
};

namespace detail {

constexpr Real kLogLo = 0, kLogHi = 7;      // moduli etc: 1 .. 1e7
constexpr Real kThetaLo = 5, kThetaHi = 85; // degrees
constexpr Real kNuLo = 0.05, kNuHi = 0.45;

inline void push_log(ParameterVector& pv, const char* name, Real value) {
  if (!(value > 0))
    fail(ErrorCode::Bounds, std::string("parameter '") + name + "' must be positive");
  Real v = std::log10(value);
  if (v < kLogLo || v > kLogHi)
    fail(ErrorCode::Bounds, std::string("parameter '") + name + "' out of bounds [1, 1e7]");
  pv.values.push_back(v);
  pv.names.push_back(name);
  pv.scales.push_back(ParamScale::Log10);
  pv.bounds.emplace_back(kLogLo, kLogHi);
}

inline void push_linear(ParameterVector& pv, const char* name, Real value, Real lo,
                        Real hi) {
  if (value < lo || value > hi)
    fail(ErrorCode::Bounds, std::string("parameter '") + name + "' out of bounds [" +
                                std::to_string(lo) + ", " + std::to_string(hi) + "]");
  pv.values.push_back(value);
  pv.names.push_back(name);
  pv.scales.push_back(ParamScale::Linear);
  pv.bounds.emplace_back(lo, hi);
}

} // namespace detail

inline ParameterVector pack(const MaterialModel& m) {
  using namespace detail;
  ParameterVector pv;
  pv.kind = int(m.index());
  if (auto* n = std::get_if<Newtonian>(&m)) {
    push_log(pv, "mu", n->mu);
    push_log(pv, "kappa", n->kappa);
  } else if (auto* n = std::get_if<NonNewtonian>(&m)) {
    push_log(pv, "mu", n->mu);
    push_log(pv, "kappa", n->kappa);
    push_log(pv, "tau_y", n->tau_y);
    push_log(pv, "eta", n->eta);
  } else if (auto* g = std::get_if<Granular>(&m)) {
    push_linear(pv, "theta_fric", g->theta_fric, kThetaLo, kThetaHi);
    pv.fixed = {g->E, g->nu};
  } else if (auto* e = std::get_if<Elastic>(&m)) {
    push_log(pv, "E", e->E);
    push_linear(pv, "nu", e->nu, kNuLo, kNuHi);
  } else if (auto* p = std::get_if<Plasticine>(&m)) {
    push_log(pv, "E", p->E);
    push_linear(pv, "nu", p->nu, kNuLo, kNuHi);
    push_log(pv, "tau_y", p->tau_y);
  }
  return pv;
}

inline MaterialModel unpack(const ParameterVector& pv) {
  for (size_t i = 0; i < pv.values.size(); ++i)
    if (pv.values[i] < pv.bounds[i].first || pv.values[i] > pv.bounds[i].second)
      fail(ErrorCode::Bounds, "parameter '" + pv.names[i] + "' out of bounds");
  auto exp10 = [](Real v) { return std::pow(Real(10), v); };
  switch (pv.kind) {
    case 0: return Newtonian{exp10(pv.values[0]), exp10(pv.values[1])};
    case 1:
      return NonNewtonian{exp10(pv.values[0]), exp10(pv.values[1]),
                          exp10(pv.values[2]), exp10(pv.values[3])};
    case 2:
      if (pv.fixed.size() == 2) return Granular{pv.values[0], pv.fixed[0], pv.fixed[1]};
      return Granular{pv.values[0]};
    case 3: return Elastic{exp10(pv.values[0]), pv.values[1]};
    case 4: return Plasticine{exp10(pv.values[0]), pv.values[1], exp10(pv.values[2])};
  }
  fail(ErrorCode::Config, "unknown material kind in parameter vector");
}

// chain rule from native-parameter gradients to stored-coordinate gradients:
// d/d(log10 p) = p ln(10) d/dp
inline std::vector<Real> to_coordinate_gradient(const ParameterVector& pv,
                                                const std::vector<Real>& native_grad) {
  if (native_grad.size() != pv.values.size())
    fail(ErrorCode::Dimension, "gradient size mismatch");
  std::vector<Real> g(native_grad);
  const Real ln10 = std::log(Real(10));
  for (size_t i = 0; i < g.size(); ++i)
    if (pv.scales[i] == ParamScale::Log10)
      g[i] *= std::pow(Real(10), pv.values[i]) * ln10;
  return g;
}

} // namespace asmpm
