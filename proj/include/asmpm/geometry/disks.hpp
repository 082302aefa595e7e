#pragma once

#include "asmpm/core/common.hpp"
#include "asmpm/geometry/ply.hpp"

namespace asmpm {

// planar circular disks (splat-style reconstruction output)
struct DiskSet {
  std::vector<Vec3> centers;
  std::vector<Vec3> normals; // unit
  std::vector<Real> radii;   // > 0

  int size() const { return int(centers.size()); }
};

// active rotation by unit quaternion (w, x, y, z)
inline Mat3 quat_to_mat(Real w, Real x, Real y, Real z) {
  Real n = std::sqrt(w * w + x * x + y * y + z * z);
  if (n < Real(1e-12)) fail(ErrorCode::MalformedFile, "zero-norm quaternion");
  w /= n, x /= n, y /= n, z /= n;
  Mat3 R;
  R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return R;
}

// PLY points with per-point rotation quaternion (rot_0..rot_3, w first) and two
// in-plane scales.  Disk normal = rotated local z; radius = cutoff * max scale.
inline DiskSet load_disks(const std::string& path, Real cutoff_sigma = Real(2.0)) {
  auto elements = read_ply(path);
  DiskSet out;
  for (const PlyElement& el : elements) {
    if (el.name != "vertex") continue;
    const char* req[] = {"x", "y", "z", "rot_0", "rot_1", "rot_2", "rot_3",
                         "scale_0", "scale_1"};
    int idx[9];
    for (int i = 0; i < 9; ++i) {
      idx[i] = el.prop_index(req[i]);
      if (idx[i] < 0 && el.count > 0)
        fail(ErrorCode::MalformedFile,
             path + ": vertex element missing property '" + std::string(req[i]) + "'");
    }
    for (size_t r = 0; r < el.count; ++r) {
      out.centers.emplace_back(el.at(r, idx[0]), el.at(r, idx[1]), el.at(r, idx[2]));
      Mat3 R = quat_to_mat(el.at(r, idx[3]), el.at(r, idx[4]), el.at(r, idx[5]),
                           el.at(r, idx[6]));
      out.normals.push_back(R.col(2));
      Real radius = cutoff_sigma * std::max(el.at(r, idx[7]), el.at(r, idx[8]));
      if (!(radius > 0))
        fail(ErrorCode::MalformedFile,
             path + ": non-positive disk radius at point " + std::to_string(r));
      out.radii.push_back(radius);
    }
    return out;
  }
  return out; // no vertex element -> empty set
}

} // namespace asmpm
