#include <catch2/catch_amalgamated.hpp>

#include "asmpm/autodiff/backward.hpp"
#include "asmpm/autodiff/grad.hpp"
#include "asmpm/autodiff/tape.hpp"

using namespace asmpm;
using Catch::Approx;

namespace {

struct Scene {
  MaterialState state;
  ColliderPack pack;
  SimConfig cfg;
};

// small block with an initial shear so stress immediately matters
Scene make_scene(bool with_box, const Vec3& vel, const Mat3& c0) {
  Scene sc;
  sc.cfg.grid.res = Vec3i(32, 32, 32);
  sc.cfg.grid.dx = Real(1) / 32;
  sc.cfg.dt = 5e-4;
  sc.cfg.substeps_per_frame = 6;
  sc.cfg.max_expected_velocity = 5;
  sc.cfg.seed = 11;

  Real h = sc.cfg.grid.dx / 2;
  Vec3 corner = with_box ? Vec3(0.45, 0.45, 0.41) : Vec3(0.45, 0.45, 0.55);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) {
        Vec3 p = corner + h * Vec3(i, j, k);
        sc.state.add_particle(p, vel, Real(1e-3), h * h * h);
        sc.state.C.back() = c0;
      }
  sc.state.finalize();

  if (with_box) {
    RigidCollider col;
    col.surface = box_mesh(Vec3(0.5, 0.5, 0.3), Vec3(0.12, 0.12, 0.1));
    sc.pack.colliders = {col};
    sc.pack.prepare(sc.cfg, Real(1e-3));
  }
  return sc;
}

Mat3 shear() {
  Mat3 c = Mat3::Zero();
  c(0, 1) = 2;
  return c;
}

void require_gradient_matches(Scene& sc, const MaterialModel& model, int frames) {
  ParameterVector pv = pack(model);

  // reference produced from the identical (unpacked) parameters: bitwise match
  Trajectory ref = rollout(sc.state, sc.pack, unpack(pv), sc.cfg, frames);
  Gradient adj = grad_rollout(pv, sc.state, sc.pack, sc.cfg, ref);
  REQUIRE(adj.loss == 0.0);
  for (Real g : adj.g) REQUIRE(g == 0.0);

  // reference from the native model: pack/unpack round-trip noise (~1e-16
  // relative in the parameters) must stay far below the optimizer loss floor
  Trajectory native_ref = rollout(sc.state, sc.pack, model, sc.cfg, frames);
  Gradient near = grad_rollout(pv, sc.state, sc.pack, sc.cfg, native_ref);
  REQUIRE(near.loss < 1e-25);
}

} // namespace

TEST_CASE("tape records one checkpoint per substep") {
  Scene sc = make_scene(false, Vec3(0, 0, -0.2), shear());
  MaterialModel model = Elastic{Real(2e5), Real(0.25)};
  Tape tape;
  record_rollout(sc.state, sc.pack, model, sc.cfg, 3, tape);

  REQUIRE(tape.frames == 3);
  REQUIRE(tape.substeps == sc.cfg.substeps_per_frame);
  REQUIRE(tape.snaps.size() == size_t(3 * sc.cfg.substeps_per_frame));
  REQUIRE(tape.disc.size() == tape.snaps.size());
  for (const auto& d : tape.disc) REQUIRE(d.size() == size_t(sc.state.size()));
  REQUIRE(tape.traj.frames == 3);
  REQUIRE(tape.traj.particles == sc.state.size());

  // first snapshot is the initial state
  for (int p = 0; p < sc.state.size(); ++p) {
    REQUIRE(tape.snaps[0].x[size_t(p)] == sc.state.x[size_t(p)]);
    REQUIRE(tape.snaps[0].F[size_t(p)] == Mat3::Identity());
  }

  // the recorded trajectory equals a plain rollout bit for bit
  Trajectory plain = rollout(sc.state, sc.pack, model, sc.cfg, 3);
  for (size_t i = 0; i < plain.pos.size(); ++i)
    REQUIRE(tape.traj.pos[i] == plain.pos[i]);
}

TEST_CASE("mean squared position error") {
  Trajectory a, b;
  a.init(2, 3);
  b.init(2, 3);
  REQUIRE(loss_mse(a, b) == 0.0);

  for (Vec3& p : b.pos) p += Vec3(0.1, 0, 0);
  REQUIRE(loss_mse(a, b) == Approx(0.01).epsilon(1e-12));

  b = a;
  b.pos[4] += Vec3(3, 4, 0); // squared norm 25, averaged over 6 entries
  REQUIRE(loss_mse(a, b) == Approx(25.0 / 6).epsilon(1e-12));

  Trajectory c;
  c.init(2, 4);
  try {
    loss_mse(a, c);
    FAIL("expected Dimension error");
  } catch (const Error& e) {
    REQUIRE(e.code() == ErrorCode::Dimension);
  }
}

TEST_CASE("matching parameters give exactly zero loss and gradient") {
  SECTION("free elastic block") {
    Scene sc = make_scene(false, Vec3(0, 0, -0.2), shear());
    require_gradient_matches(sc, Elastic{Real(2e5), Real(0.25)}, 2);
  }
  SECTION("fluid on a box collider") {
    Scene sc = make_scene(true, Vec3(0, 0, -0.6), shear());
    require_gradient_matches(sc, Newtonian{Real(50), Real(5e4)}, 2);
  }
}

TEST_CASE("adjoint gradient matches finite differences") {
  const Real fd_h = 1e-4;
  auto check = [&](Scene& sc, const MaterialModel& sim_model,
                   const MaterialModel& ref_model, int frames) {
    Trajectory ref = rollout(sc.state, sc.pack, ref_model, sc.cfg, frames);
    ParameterVector pv = pack(sim_model);

    Gradient adj = grad_rollout(pv, sc.state, sc.pack, sc.cfg, ref);
    Gradient fd = finite_diff_gradient(pv, sc.state, sc.pack, sc.cfg, ref, fd_h);

    REQUIRE(adj.loss == Approx(fd.loss).epsilon(1e-12));
    REQUIRE(adj.loss > 0);
    for (size_t i = 0; i < adj.g.size(); ++i) {
      INFO(model_name(sim_model) << " coord " << pv.names[i] << ": adjoint "
                                 << adj.g[i] << " vs fd " << fd.g[i]);
      if (std::abs(fd.g[i]) < 1e-8) {
        REQUIRE(std::abs(adj.g[i] - fd.g[i]) < 1e-8);
      } else {
        REQUIRE(std::abs(adj.g[i] - fd.g[i]) <= 5e-3 * std::abs(fd.g[i]));
      }
    }
  };

  SECTION("elastic, free flight with shear") {
    Scene sc = make_scene(false, Vec3(0, 0, -0.2), shear());
    check(sc, Elastic{Real(2e5), Real(0.25)}, Elastic{Real(1.5e5), Real(0.3)}, 2);
  }
  SECTION("newtonian fluid against a box") {
    Scene sc = make_scene(true, Vec3(0, 0, -0.6), shear());
    check(sc, Newtonian{Real(50), Real(5e4)}, Newtonian{Real(30), Real(3e4)}, 2);
  }
  SECTION("plasticine past yield") {
    Scene sc = make_scene(false, Vec3(0, 0, -0.2), Real(2.5) * shear());
    check(sc, Plasticine{Real(2e5), Real(0.3), Real(80)},
          Plasticine{Real(1.2e5), Real(0.25), Real(50)}, 2);
  }
  SECTION("bingham fluid past yield") {
    Scene sc = make_scene(false, Vec3(0, 0, -0.2), Real(2.5) * shear());
    check(sc, NonNewtonian{Real(1e4), Real(1e5), Real(60), Real(5)},
          NonNewtonian{Real(2e4), Real(2e5), Real(40), Real(10)}, 2);
  }
  SECTION("granular under compression") {
    Mat3 squeeze = Real(-1.5) * Mat3::Identity() + shear();
    Scene sc = make_scene(false, Vec3(0, 0, -0.2), squeeze);
    check(sc, Granular{Real(35)}, Granular{Real(20)}, 2);
  }
}

TEST_CASE("gradients are deterministic across calls") {
  Scene sc = make_scene(true, Vec3(0, 0, -0.6), shear());
  MaterialModel model = Newtonian{Real(50), Real(5e4)};
  Trajectory ref = rollout(sc.state, sc.pack, Newtonian{Real(40), Real(4e4)}, sc.cfg, 2);
  ParameterVector pv = pack(model);

  Gradient a = grad_rollout(pv, sc.state, sc.pack, sc.cfg, ref);
  Gradient b = grad_rollout(pv, sc.state, sc.pack, sc.cfg, ref);
  REQUIRE(a.loss == b.loss);
  for (size_t i = 0; i < a.g.size(); ++i) REQUIRE(a.g[i] == b.g[i]);
}

TEST_CASE("empty reference trajectory yields a zero gradient") {
  Scene sc = make_scene(false, Vec3::Zero(), Mat3::Zero());
  ParameterVector pv = pack(MaterialModel(Elastic{}));
  Trajectory empty;
  Gradient g = grad_rollout(pv, sc.state, sc.pack, sc.cfg, empty);
  REQUIRE(g.loss == 0.0);
  REQUIRE(g.g == std::vector<Real>{0.0, 0.0});
}

TEST_CASE("particle count mismatch is a dimension error") {
  Scene sc = make_scene(false, Vec3::Zero(), Mat3::Zero());
  ParameterVector pv = pack(MaterialModel(Elastic{}));
  Trajectory ref;
  ref.init(2, sc.state.size() + 1);
  try {
    grad_rollout(pv, sc.state, sc.pack, sc.cfg, ref);
    FAIL("expected Dimension error");
  } catch (const Error& e) {
    REQUIRE(e.code() == ErrorCode::Dimension);
  }
}

TEST_CASE("divergence inside the gradient rollout surfaces as Diverged") {
  Scene sc = make_scene(false, Vec3(0, 0, -250), Mat3::Zero());
  sc.cfg.dt = 1e-5;
  sc.cfg.max_expected_velocity = 400;
  sc.cfg.divergence_velocity = 200;
  ParameterVector pv = pack(MaterialModel(Elastic{}));
  Trajectory ref;
  ref.init(1, sc.state.size());
  try {
    grad_rollout(pv, sc.state, sc.pack, sc.cfg, ref);
    FAIL("expected Diverged");
  } catch (const Error& e) {
    REQUIRE(e.code() == ErrorCode::Diverged);
  }
}

TEST_CASE("zero dt tape replays as identity") {
  Scene sc = make_scene(false, Vec3(0.1, 0, -0.2), shear());
  sc.cfg.dt = 0;
  MaterialModel model = Elastic{};
  Tape tape;
  record_rollout(sc.state, sc.pack, model, sc.cfg, 2, tape);
  for (int f = 0; f < 2; ++f)
    for (int p = 0; p < sc.state.size(); ++p)
      REQUIRE(tape.traj.frame(f)[p] == sc.state.x[size_t(p)]);

  // backward over the identity is well-defined and zero
  ParameterVector pv = pack(model);
  Trajectory ref = tape.traj;
  Gradient g = grad_rollout(pv, sc.state, sc.pack, sc.cfg, ref);
  REQUIRE(g.loss == 0.0);
  for (Real v : g.g) REQUIRE(v == 0.0);
}
