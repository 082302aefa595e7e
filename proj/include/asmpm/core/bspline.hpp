#pragma once

#include "asmpm/core/common.hpp"

namespace asmpm {

// Quadratic B-spline stencil for one particle: 3x3x3 nodes starting at `base`.
// fx is the particle offset from the base node in cell units, fx in [0.5, 1.5).
struct SplineStencil {
  Vec3i base;
  Vec3 fx;
  Real w[3][3];  // w[axis][offset]
  Real dw[3][3]; // d(w)/d(x_axis), world units (already divided by dx)

  static SplineStencil make(const Vec3& x, Real dx) {
    SplineStencil s;
    Real inv_dx = Real(1) / dx;
    for (int d = 0; d < 3; ++d) {
      Real xc = x[d] * inv_dx;
      s.base[d] = int(std::floor(xc - Real(0.5)));
      Real f = xc - Real(s.base[d]);
      s.fx[d] = f;
      s.w[d][0] = Real(0.5) * sqr(Real(1.5) - f);
      s.w[d][1] = Real(0.75) - sqr(f - Real(1.0));
      s.w[d][2] = Real(0.5) * sqr(f - Real(0.5));
      s.dw[d][0] = -(Real(1.5) - f) * inv_dx;
      s.dw[d][1] = Real(-2.0) * (f - Real(1.0)) * inv_dx;
      s.dw[d][2] = (f - Real(0.5)) * inv_dx;
    }
    return s;
  }

  Real weight(int i, int j, int k) const { return w[0][i] * w[1][j] * w[2][k]; }

  // gradient of the trilinear-product weight w.r.t. particle position
  Vec3 weight_grad(int i, int j, int k) const {
    return Vec3(dw[0][i] * w[1][j] * w[2][k], w[0][i] * dw[1][j] * w[2][k],
                w[0][i] * w[1][j] * dw[2][k]);
  }

  Vec3i node(int i, int j, int k) const { return base + Vec3i(i, j, k); }
};

// Whole 3x3x3 stencil must be inside the node lattice; enforced by keeping
// particles >= 2 cells away from the domain faces.
inline bool stencil_in_grid(const SplineStencil& s, const GridSpec& g) {
  return g.node_valid(s.base) && g.node_valid(s.base + Vec3i(2, 2, 2));
}

} // namespace asmpm
