#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace asmpm {

using Real = double;
using Vec3 = Eigen::Matrix<Real, 3, 1>;
using Mat3 = Eigen::Matrix<Real, 3, 3>;
using Vec3i = Eigen::Matrix<int, 3, 1>;
using VecX = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

// sign with sign(0) = +1; collision tags must never be 0 once assigned
inline Real sign_pos(Real v) { return v < 0 ? Real(-1) : Real(1); }

inline Real sqr(Real v) { return v * v; }

enum class ErrorCode {
  MalformedFile,       // parse failure, message carries line number
  UnsupportedGeometry, // e.g. non-triangle faces
  Config,              // bad/missing/out-of-range configuration
  OutOfDomain,         // particle left the domain, message carries index
  Degenerate,          // non-finite state, message carries particle index
  Diverged,            // simulation blow-up past the divergence guard
  Dimension,           // mismatched sizes (trajectories, point sets)
  Bounds,              // parameter outside its optimization bounds
  BaselineUnsupported, // scene not representable in the requested baseline
  Io,                  // filesystem failure
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

// Uniform background grid over the axis-aligned domain [0, res*dx]^3.
// Nodes sit at integer multiples of dx, (res+1) per axis.
struct GridSpec {
  Vec3i res = Vec3i(64, 64, 64); // cells per axis
  Real dx = Real(1) / 64;

  Vec3i nodes() const { return res + Vec3i(1, 1, 1); }
  int node_count() const {
    Vec3i n = nodes();
    return n.x() * n.y() * n.z();
  }
  int node_id(int i, int j, int k) const {
    Vec3i n = nodes();
    return (i * n.y() + j) * n.z() + k;
  }
  int node_id(const Vec3i& ijk) const { return node_id(ijk.x(), ijk.y(), ijk.z()); }
  Vec3i node_ijk(int id) const {
    Vec3i n = nodes();
    int k = id % n.z();
    int j = (id / n.z()) % n.y();
    int i = id / (n.z() * n.y());
    return Vec3i(i, j, k);
  }
  Vec3 node_pos(const Vec3i& ijk) const { return ijk.cast<Real>() * dx; }
  Vec3 extent() const { return res.cast<Real>() * dx; }
  bool node_valid(const Vec3i& ijk) const {
    Vec3i n = nodes();
    return ijk.x() >= 0 && ijk.y() >= 0 && ijk.z() >= 0 && ijk.x() < n.x() &&
           ijk.y() < n.y() && ijk.z() < n.z();
  }
};

} // namespace asmpm
