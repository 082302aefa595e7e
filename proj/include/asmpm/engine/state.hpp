#pragma once

#include "asmpm/collision/transfer.hpp"
#include "asmpm/core/bspline.hpp"

namespace asmpm {

// Particle state, struct-of-arrays
struct MaterialState {
  std::vector<Vec3> x;    // position
  std::vector<Vec3> v;    // velocity
  std::vector<Real> mass;
  std::vector<Real> volume0; // initial volume
  std::vector<Mat3> C;    // APIC affine velocity
  std::vector<Mat3> F;    // elastic deformation gradient
  ParticleCollision pc;

  int size() const { return int(x.size()); }

  void add_particle(const Vec3& pos, const Vec3& vel, Real m, Real vol) {
    x.push_back(pos);
    v.push_back(vel);
    mass.push_back(m);
    volume0.push_back(vol);
    C.push_back(Mat3::Zero());
    F.push_back(Mat3::Identity());
    pc.resize(x.size());
  }

  void finalize() { pc.resize(x.size()); }
};

struct EulerianGrid {
  GridSpec spec;
  std::vector<Real> mass;
  std::vector<Vec3> mom;      // momentum during p2g, then velocity after grid_op
  std::vector<Vec3> vel;
  std::vector<int> active;    // node ids touched this substep
  std::vector<uint32_t> stamp;
  uint32_t cur_stamp = 0;

  void init(const GridSpec& g) {
    spec = g;
    size_t n = size_t(g.node_count());
    mass.assign(n, 0);
    mom.assign(n, Vec3::Zero());
    vel.assign(n, Vec3::Zero());
    stamp.assign(n, 0);
    active.clear();
    cur_stamp = 1; // out of phase with fresh stamps so touch() works immediately
  }

  void clear() {
    for (int id : active) {
      mass[size_t(id)] = 0;
      mom[size_t(id)].setZero();
      vel[size_t(id)].setZero();
    }
    active.clear();
    ++cur_stamp;
  }

  void touch(int id) {
    if (stamp[size_t(id)] != cur_stamp) {
      stamp[size_t(id)] = cur_stamp;
      active.push_back(id);
    }
  }
};

enum class CollisionMode { Cpic, GopSdf, RigidParticles, PlanarAnalytic };

inline const char* to_string(CollisionMode m) {
  switch (m) {
    case CollisionMode::Cpic: return "cpic";
    case CollisionMode::GopSdf: return "gop_sdf";
    case CollisionMode::RigidParticles: return "rigid_particles";
    case CollisionMode::PlanarAnalytic: return "planar_analytic";
  }
  return "?";
}

struct PlanarBoundary {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3(0, 0, 1);
  SurfaceResponse response = SurfaceResponse::Sticky;
};

struct SimConfig {
  GridSpec grid;
  Real dt = 1e-4;
  int substeps_per_frame = 25;
  Vec3 gravity = Vec3(0, 0, Real(-9.8));
  Real k_h = 1e4;
  CollisionMode mode = CollisionMode::Cpic;
  Real max_expected_velocity = 5.0; // CFL guard input
  Real divergence_velocity = 200.0; // hard blow-up guard
  int wall_margin = 2;              // sticky domain shell, in cells
  uint64_t seed = 0;
  Real sample_spacing = 0;          // collider surface sampling; 0 -> dx/2
  Real rp_mass_factor = 1000;       // rigid-particles baseline mass multiplier

  Real spacing() const { return sample_spacing > 0 ? sample_spacing : grid.dx / 2; }

  void validate() const {
    if (dt < 0) fail(ErrorCode::Config, "dt must be >= 0");
    if (substeps_per_frame < 1) fail(ErrorCode::Config, "substeps_per_frame must be >= 1");
    if (max_expected_velocity <= 0)
      fail(ErrorCode::Config, "max_expected_velocity must be > 0");
    if (dt > Real(0.2) * grid.dx / max_expected_velocity)
      fail(ErrorCode::Config,
           "CFL violated: dt > 0.2 dx / max_expected_velocity");
  }
};

// trajectory of particle positions, one record per frame
struct Trajectory {
  int frames = 0;
  int particles = 0;
  std::vector<Vec3> pos; // frames * particles

  void init(int f, int n) {
    frames = f;
    particles = n;
    pos.assign(size_t(f) * size_t(n), Vec3::Zero());
  }
  Vec3* frame(int f) { return pos.data() + size_t(f) * size_t(particles); }
  const Vec3* frame(int f) const { return pos.data() + size_t(f) * size_t(particles); }
};

} // namespace asmpm
