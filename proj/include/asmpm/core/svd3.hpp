#pragma once

#include <Eigen/SVD>

#include "asmpm/core/common.hpp"

namespace asmpm {

// 3x3 SVD with U, V forced to proper rotations (det = +1); any reflection is
// absorbed into the sign of the smallest singular value.  For det(F) > 0 all
// singular values stay positive.
struct Svd3 {
  Mat3 U;
  Vec3 s;
  Mat3 V;

  Mat3 rebuild() const { return U * s.asDiagonal() * V.transpose(); }
  Mat3 rotation() const { return U * V.transpose(); }
};

inline Svd3 svd3(const Mat3& F) {
  Eigen::JacobiSVD<Mat3> svd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Svd3 r{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  if (r.U.determinant() < 0) {
    r.U.col(2) *= -1;
    r.s[2] = -r.s[2];
  }
  if (r.V.determinant() < 0) {
    r.V.col(2) *= -1;
    r.s[2] = -r.s[2];
  }
  return r;
}

// Reverse-mode rule for F = U diag(s) V^T given adjoints of U, s, V.
// Near-equal singular values make the true Jacobian blow up; the inverse
// spectral gap is clamped so gradients stay finite (matching the frozen
// branch structure used by the simulation tape).
inline Mat3 svd3_backward(const Svd3& d, const Mat3& Ub, const Vec3& sb,
                          const Mat3& Vb, Real gap_clamp = Real(1e6)) {
  const Mat3& U = d.U;
  const Mat3& V = d.V;
  const Vec3& s = d.s;

  Mat3 K; // K_ij = 1 / (s_j^2 - s_i^2), clamped
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if (i == j) {
        K(i, j) = 0;
        continue;
      }
      Real gap = s[j] * s[j] - s[i] * s[i];
      Real inv = Real(1) / gap;
      if (!std::isfinite(inv) || std::abs(inv) > gap_clamp)
        inv = (gap >= 0 ? gap_clamp : -gap_clamp);
      K(i, j) = inv;
    }

  Mat3 Ut_dU = U.transpose() * Ub;
  Mat3 Vt_dV = V.transpose() * Vb;
  Mat3 term = K.cwiseProduct(Ut_dU - Ut_dU.transpose()) * s.asDiagonal() +
              s.asDiagonal() * K.cwiseProduct(Vt_dV - Vt_dV.transpose());
  term += Mat3(sb.asDiagonal());
  return U * term * V.transpose();
}

// cofactor matrix: d(det F)/dF, robust at singular F
inline Mat3 cofactor(const Mat3& F) {
  Mat3 c;
  c(0, 0) = F(1, 1) * F(2, 2) - F(1, 2) * F(2, 1);
  c(0, 1) = F(1, 2) * F(2, 0) - F(1, 0) * F(2, 2);
  c(0, 2) = F(1, 0) * F(2, 1) - F(1, 1) * F(2, 0);
  c(1, 0) = F(0, 2) * F(2, 1) - F(0, 1) * F(2, 2);
  c(1, 1) = F(0, 0) * F(2, 2) - F(0, 2) * F(2, 0);
  c(1, 2) = F(0, 1) * F(2, 0) - F(0, 0) * F(2, 1);
  c(2, 0) = F(0, 1) * F(1, 2) - F(0, 2) * F(1, 1);
  c(2, 1) = F(0, 2) * F(1, 0) - F(0, 0) * F(1, 2);
  c(2, 2) = F(0, 0) * F(1, 1) - F(0, 1) * F(1, 0);
  return c;
}

} // namespace asmpm
