#pragma once

#include <unordered_map>

#include "asmpm/core/rng.hpp"

namespace asmpm {

namespace detail {

// Uniform hash grid for exact nearest-neighbor queries.  A query expands cell
// rings outward; once every point of Chebyshev cell distance <= k has been
// scanned, any unscanned point is at least k*h away, so the current best is
// final as soon as best <= (k*h)^2.  The per-pair arithmetic is the same
// squaredNorm a brute-force scan would use, so results match it exactly.
struct NnGrid {
  const std::vector<Vec3>& pts;
  Vec3 lo;
  Real h;
  Vec3i lo_cell, hi_cell;
  std::unordered_map<int64_t, std::vector<int>> cells;

  static int64_t key(const Vec3i& c) {
    return (int64_t(c[0]) << 42) ^ (int64_t(c[1]) << 21) ^ int64_t(c[2]);
  }

  explicit NnGrid(const std::vector<Vec3>& p) : pts(p) {
    Vec3 hi = p[0];
    lo = p[0];
    for (const Vec3& q : p) {
      lo = lo.cwiseMin(q);
      hi = hi.cwiseMax(q);
    }
    Real extent = (hi - lo).maxCoeff();
    h = extent / std::max(Real(1), std::cbrt(Real(p.size())));
    if (h <= 0) h = 1;
    lo_cell = cell(lo);
    hi_cell = cell(hi);
    for (int i = 0; i < int(p.size()); ++i) cells[key(cell(p[size_t(i)]))].push_back(i);
  }

  Vec3i cell(const Vec3& q) const {
    Vec3 t = (q - lo) / h;
    return Vec3i(int(std::floor(t[0])), int(std::floor(t[1])), int(std::floor(t[2])));
  }

  Real min_sq_dist(const Vec3& q) const {
    Vec3i c = cell(q);
    // ring radius needed to cover the whole occupied box from c
    int kmax = 0;
    for (int d = 0; d < 3; ++d) {
      kmax = std::max(kmax, std::abs(c[d] - lo_cell[d]));
      kmax = std::max(kmax, std::abs(c[d] - hi_cell[d]));
    }
    Real best = std::numeric_limits<Real>::max();
    for (int k = 0; k <= kmax; ++k) {
      // rings >= k only hold points at least (k-1)*h away
      if (k > 0 && best <= sqr(Real(k - 1) * h)) break;
      for (int di = -k; di <= k; ++di)
        for (int dj = -k; dj <= k; ++dj)
          for (int dk = -k; dk <= k; ++dk) {
            if (std::max({std::abs(di), std::abs(dj), std::abs(dk)}) != k) continue;
            auto it = cells.find(key(Vec3i(c[0] + di, c[1] + dj, c[2] + dk)));
            if (it == cells.end()) continue;
            for (int i : it->second)
              best = std::min(best, (pts[size_t(i)] - q).squaredNorm());
          }
    }
    return best;
  }
};

} // namespace detail

// Symmetric Chamfer distance: average of the two directional means of
// nearest-neighbor squared distances, reported in units of 1e-3.
inline Real chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty())
    fail(ErrorCode::Dimension, "chamfer distance of an empty point set");
  detail::NnGrid ga(a), gb(b);
  Real sum_ab = 0, sum_ba = 0;
  for (const Vec3& q : a) sum_ab += gb.min_sq_dist(q);
  for (const Vec3& q : b) sum_ba += ga.min_sq_dist(q);
  return Real(0.5) * (sum_ab / Real(a.size()) + sum_ba / Real(b.size())) * 1000;
}

namespace detail {

// Exact rectangular-free assignment (Jonker-Volgenant style shortest
// augmenting paths with dual potentials), O(n^3).
inline Real solve_assignment(const std::vector<Real>& cost, int n,
                             std::vector<int>& row_of_col) {
  const Real inf = std::numeric_limits<Real>::max();
  std::vector<Real> u(size_t(n) + 1, 0), v(size_t(n) + 1, 0);
  std::vector<int> p(size_t(n) + 1, 0), way(size_t(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<Real> minv(size_t(n) + 1, inf);
    std::vector<char> used(size_t(n) + 1, 0);
    do {
      used[size_t(j0)] = 1;
      int i0 = p[size_t(j0)], j1 = 0;
      Real delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[size_t(j)]) continue;
        Real cur = cost[size_t(i0 - 1) * size_t(n) + size_t(j - 1)] - u[size_t(i0)] -
                   v[size_t(j)];
        if (cur < minv[size_t(j)]) {
          minv[size_t(j)] = cur;
          way[size_t(j)] = j0;
        }
        if (minv[size_t(j)] < delta) {
          delta = minv[size_t(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[size_t(j)]) {
          u[size_t(p[size_t(j)])] += delta;
          v[size_t(j)] -= delta;
        } else {
          minv[size_t(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[size_t(j0)] != 0);
    do {
      int j1 = way[size_t(j0)];
      p[size_t(j0)] = p[size_t(j1)];
      j0 = j1;
    } while (j0);
  }
  row_of_col.assign(size_t(n) + 1, 0);
  Real total = 0;
  for (int j = 1; j <= n; ++j) {
    row_of_col[size_t(j)] = p[size_t(j)];
    if (p[size_t(j)] > 0)
      total += cost[size_t(p[size_t(j)] - 1) * size_t(n) + size_t(j - 1)];
  }
  return total;
}

} // namespace detail

// Earth mover's distance: mean per-point Euclidean distance under the optimal
// one-to-one assignment.  Sets larger than `cap` points are subsampled
// deterministically so the exact solver stays tractable.
inline Real emd(const std::vector<Vec3>& a, const std::vector<Vec3>& b, int cap = 512,
                uint64_t seed = 0) {
  if (a.empty() || b.empty())
    fail(ErrorCode::Dimension, "earth mover's distance of an empty point set");
  int m = int(std::min({a.size(), b.size(), size_t(cap)}));
  std::vector<int> ia = subsample_indices(int(a.size()), m, seed);
  std::vector<int> ib = subsample_indices(int(b.size()), m, seed + 1);

  std::vector<Real> cost(size_t(m) * size_t(m));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      cost[size_t(i) * size_t(m) + size_t(j)] =
          (a[size_t(ia[size_t(i)])] - b[size_t(ib[size_t(j)])]).norm();
  std::vector<int> assign;
  Real total = detail::solve_assignment(cost, m, assign);
  return total / Real(m);
}

} // namespace asmpm
