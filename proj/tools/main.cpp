// asdiffmpm: rollouts, parameter identification, trajectory metrics and
// gradient checking for the differentiable MPM engine.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "asmpm/io/scenario.hpp"
#include "asmpm/io/trajectory_io.hpp"
#include "asmpm/sysid/identify.hpp"
#include "asmpm/sysid/metrics.hpp"

namespace fs = std::filesystem;
using namespace asmpm;

namespace {

struct CommonOpts {
  std::string config, out, ref, mode_override;
  int frames_override = -1;
  int64_t seed_override = -1;
  int jobs = 0;
};

ScenarioConfig load_with_overrides(const CommonOpts& o) {
  ScenarioConfig sc = load_scenario(o.config);
  if (o.frames_override > 0) sc.frames = o.frames_override;
  if (o.seed_override >= 0) sc.sim.seed = uint64_t(o.seed_override);
  if (!o.mode_override.empty()) sc.sim.mode = mode_from_string(o.mode_override);
  sc.sim.validate();
  return sc;
}

nlohmann::json parameter_json(const ParameterVector& pv) {
  nlohmann::json j;
  j["native"] = detail::material_to_json(unpack(pv));
  nlohmann::json coords;
  for (int i = 0; i < pv.size(); ++i) coords[pv.names[size_t(i)]] = pv.values[size_t(i)];
  j["coordinates"] = coords;
  return j;
}

int run_rollout(const CommonOpts& o) {
  ScenarioConfig sc = load_with_overrides(o);
  MaterialState st = build_state(sc);
  ColliderPack cpack = build_pack(sc, st.mass[0]);
  Trajectory traj = rollout(st, cpack, sc.material, sc.sim, sc.frames);

  nlohmann::json extra;
  extra["scenario"] = scenario_to_json(sc);
  extra["dt"] = sc.sim.dt;
  extra["substeps_per_frame"] = sc.sim.substeps_per_frame;
  save_trajectory(o.out, traj, config_hash(sc), scene_hash(sc), extra);
  std::printf("wrote %d frames x %d particles to %s\n", traj.frames, traj.particles,
              o.out.c_str());
  return 0;
}

int run_identify(const CommonOpts& o, const OptimizerConfig& opt) {
  ScenarioConfig sc = load_with_overrides(o);
  if (!sc.guess)
    fail(ErrorCode::Config,
         "material has no initial guess; use a preset or set material.guess");

  nlohmann::json man = load_manifest(o.ref);
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx", (unsigned long long)scene_hash(sc));
  if (man.value("scene_hash", "") != hex)
    fail(ErrorCode::Config, "reference in " + o.ref +
                                " was generated for a different scene (scene_hash " +
                                man.value("scene_hash", "?") + " != " + hex + ")");
  Trajectory ref = load_trajectory(o.ref);
  if (ref.frames != sc.frames)
    fail(ErrorCode::Config, "reference has " + std::to_string(ref.frames) +
                                " frames, scenario expects " + std::to_string(sc.frames));

  MaterialState st = build_state(sc);
  ColliderPack cpack = build_pack(sc, st.mass[0]);
  ParameterVector guess = pack(*sc.guess);
  ParameterVector truth = pack(sc.material);

  IdentificationReport rep =
      identify(guess, st, cpack, sc.sim, ref, opt, &truth, &std::cout);

  fs::create_directories(o.out);
  std::string csv_name = "loss_curve.csv";
  {
    std::ofstream csv(fs::path(o.out) / csv_name);
    csv << "iteration,loss\n";
    for (size_t i = 0; i < rep.loss_curve.size(); ++i)
      csv << i << "," << std::setprecision(17) << rep.loss_curve[i] << "\n";
  }

  nlohmann::json j;
  j["material"] = model_name(sc.material);
  j["mode"] = to_string(sc.sim.mode);
  j["estimate"] = parameter_json(rep.estimate);
  j["truth"] = parameter_json(truth);
  nlohmann::json errs;
  for (int i = 0; i < rep.estimate.size(); ++i)
    errs[rep.estimate.names[size_t(i)]] = rep.errors[size_t(i)];
  j["errors_x100"] = errs;
  j["best_loss"] = rep.best_loss;
  j["iterations"] = rep.iterations;
  j["halvings"] = rep.halvings;
  j["aborted"] = rep.aborted;
  j["converged"] = rep.converged;
  j["stop_reason"] = rep.stop_reason;
  j["wall_seconds"] = rep.wall_seconds;
  j["loss_curve"] = csv_name;
  std::snprintf(hex, sizeof hex, "%016llx", (unsigned long long)config_hash(sc));
  j["config_hash"] = hex;
  std::snprintf(hex, sizeof hex, "%016llx", (unsigned long long)scene_hash(sc));
  j["scene_hash"] = hex;
  {
    std::ofstream out(fs::path(o.out) / "report.json");
    out << j.dump(2) << "\n";
  }

  std::printf("%s: best loss %.6e after %d iterations (%.1fs), %s\n",
              model_name(sc.material), rep.best_loss, rep.iterations, rep.wall_seconds,
              rep.stop_reason.c_str());
  for (int i = 0; i < rep.estimate.size(); ++i)
    std::printf("  %-10s estimate %12.6g  error x100 = %.4f\n",
                rep.estimate.names[size_t(i)].c_str(), rep.estimate.values[size_t(i)],
                rep.errors[size_t(i)]);
  if (rep.aborted) {
    std::fprintf(stderr, "identification aborted: %s\n", rep.stop_reason.c_str());
    return 3;
  }
  return 0;
}

int run_metrics(const std::string& dir_a, const std::string& dir_b,
                const std::string& out_path) {
  Trajectory a = load_trajectory(dir_a);
  Trajectory b = load_trajectory(dir_b);
  if (a.frames != b.frames)
    fail(ErrorCode::Dimension, "frame count mismatch: " + std::to_string(a.frames) +
                                   " vs " + std::to_string(b.frames));

  std::vector<Real> cds, emds;
  for (int f = 0; f < a.frames; ++f) {
    std::vector<Vec3> pa(a.frame(f), a.frame(f) + a.particles);
    std::vector<Vec3> pb(b.frame(f), b.frame(f) + b.particles);
    cds.push_back(chamfer(pa, pb));
    emds.push_back(emd(pa, pb));
  }
  auto mean = [](const std::vector<Real>& v) {
    Real s = 0;
    for (Real x : v) s += x;
    return s / Real(v.size());
  };
  auto stddev = [&](const std::vector<Real>& v, Real m) {
    Real s = 0;
    for (Real x : v) s += sqr(x - m);
    return std::sqrt(s / Real(v.size()));
  };
  Real mc = mean(cds), me = mean(emds);

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) fail(ErrorCode::Io, "cannot write " + out_path);
    os = &file;
  }
  *os << "frame,cd,emd\n" << std::setprecision(12);
  for (int f = 0; f < a.frames; ++f)
    *os << f << "," << cds[size_t(f)] << "," << emds[size_t(f)] << "\n";
  *os << "mean," << mc << "," << me << "\n";
  *os << "std," << stddev(cds, mc) << "," << stddev(emds, me) << "\n";
  return 0;
}

// built-in adjoint-vs-finite-difference oracle scenes, one per material model
struct GradScene {
  const char* name;
  MaterialModel truth, start;
  Mat3 C0;
  bool with_box;
};

int run_gradcheck(const std::string& config_path) {
  GridSpec g;
  g.res = Vec3i(32, 32, 32);
  g.dx = Real(1) / 32;
  SimConfig cfg;
  cfg.grid = g;
  cfg.dt = 5e-4;
  cfg.substeps_per_frame = 10;

  int bad = 0;
  auto check = [&bad](const std::string& label, const ParameterVector& pv,
                      const MaterialState& st, ColliderPack& cpack, const SimConfig& c,
                      const Trajectory& ref) {
    Gradient adj = grad_rollout(pv, st, cpack, c, ref);
    Gradient fd = finite_diff_gradient(pv, st, cpack, c, ref, 1e-3);
    for (int i = 0; i < pv.size(); ++i) {
      Real ga = adj.g[size_t(i)], gf = fd.g[size_t(i)];
      Real rel = std::abs(ga - gf) / std::max(std::abs(gf), Real(1e-12));
      bool ok = std::abs(gf) < 1e-4 ? std::abs(ga - gf) < 1e-6 : rel < 1e-2;
      std::printf("%-18s %-10s adjoint % .6e  fd % .6e  rel %.3e  %s\n", label.c_str(),
                  pv.names[size_t(i)].c_str(), ga, gf, rel, ok ? "ok" : "FAIL");
      bad += !ok;
    }
  };

  if (!config_path.empty()) {
    ScenarioConfig sc = load_scenario(config_path);
    if (!sc.guess)
      fail(ErrorCode::Config, "gradcheck on a config needs material.guess");
    int frames = std::min(sc.frames, 4);
    MaterialState st = build_state(sc);
    ColliderPack cpack = build_pack(sc, st.mass[0]);
    Trajectory ref = rollout(st, cpack, sc.material, sc.sim, frames);
    check(fs::path(config_path).stem().string(), pack(*sc.guess), st, cpack, sc.sim,
          ref);
    std::printf(bad ? "gradcheck FAILED (%d)\n" : "gradcheck ok\n", bad);
    return bad ? 1 : 0;
  }

  Mat3 shear;
  shear << 0, 2, 0, 0, 0, 0, 0, 0, 0;
  const GradScene scenes[] = {
      {"elastic", Elastic{2e5, 0.25}, Elastic{1.5e5, 0.3}, shear, false},
      {"newtonian", Newtonian{50, 5e4}, Newtonian{30, 3e4}, shear, true},
      {"plasticine", Plasticine{2e5, 0.3, 80}, Plasticine{1.2e5, 0.25, 50},
       Real(2.5) * shear, false},
      {"non_newtonian", NonNewtonian{1e4, 1e5, 60, 5}, NonNewtonian{2e4, 2e5, 40, 10},
       Real(2.5) * shear, false},
      {"granular", Granular{35}, Granular{20},
       Mat3(Real(-1.5) * Mat3::Identity() + shear), false},
  };
  for (const GradScene& s : scenes) {
    MaterialState st;
    Real h = g.dx / 2, m = 1000 * g.dx * g.dx * g.dx / 8;
    Vec3 corner = s.with_box ? Vec3(0.45, 0.45, 0.41) : Vec3(0.45, 0.45, 0.55);
    Vec3 vel = s.with_box ? Vec3(0, 0, -0.6) : Vec3(0.2, 0, -0.3);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k) {
          st.add_particle(corner + h * Vec3(i, j, k), vel, m, g.dx * g.dx * g.dx / 8);
          st.C.back() = s.C0;
        }
    ColliderPack cpack;
    if (s.with_box) {
      RigidCollider box;
      box.surface = box_mesh(Vec3(0.5, 0.5, 0.3), Vec3(0.12, 0.12, 0.1));
      finalize_mesh(std::get<TriangleMesh>(box.surface));
      cpack.colliders.push_back(box);
    }
    cpack.prepare(cfg, m);
    Trajectory ref = rollout(st, cpack, s.truth, cfg, 3);
    check(s.name, pack(s.start), st, cpack, cfg, ref);
  }
  std::printf(bad ? "gradcheck FAILED (%d)\n" : "gradcheck ok\n", bad);
  return bad ? 1 : 0;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"differentiable MPM engine with rigid-body coupling"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  CommonOpts o;
  OptimizerConfig opt;
  std::string metrics_a, metrics_b, metrics_out, gradcheck_config;

  auto add_jobs = [&](CLI::App* cmd) {
    cmd->add_option("--jobs", o.jobs, "max worker threads (overrides AS_DIFFMPM_THREADS)");
  };

  CLI::App* ro = app.add_subcommand("rollout", "simulate and write a trajectory");
  ro->add_option("--config", o.config, "scenario JSON")->required();
  ro->add_option("--out", o.out, "output directory")->required();
  ro->add_option("--frames", o.frames_override, "override frame count");
  ro->add_option("--seed", o.seed_override, "override seed");
  add_jobs(ro);

  CLI::App* id = app.add_subcommand("identify", "recover material parameters");
  id->add_option("--config", o.config, "scenario JSON")->required();
  id->add_option("--ref", o.ref, "reference trajectory directory")->required();
  id->add_option("--out", o.out, "output directory")->required();
  id->add_option("--mode", o.mode_override,
                 "collision mode: cpic | gop_sdf | rigid_particles | planar_analytic");
  id->add_option("--frames", o.frames_override, "override frame count");
  id->add_option("--seed", o.seed_override, "override seed");
  id->add_option("--max-iters", opt.max_iters, "optimizer iteration cap");
  id->add_option("--lr", opt.lr, "optimizer learning rate");
  add_jobs(id);

  CLI::App* me = app.add_subcommand("metrics", "per-frame CD/EMD between trajectories");
  me->add_option("--a", metrics_a, "first trajectory directory")->required();
  me->add_option("--b", metrics_b, "second trajectory directory")->required();
  me->add_option("--out", metrics_out, "CSV output path (default stdout)");

  CLI::App* gc = app.add_subcommand("gradcheck", "adjoint vs finite-difference oracle");
  gc->add_option("--config", gradcheck_config, "optional scenario JSON to check");
  add_jobs(gc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (o.jobs > 0) setenv("AS_DIFFMPM_THREADS", std::to_string(o.jobs).c_str(), 1);

  if (ro->parsed()) return run_rollout(o);
  if (id->parsed()) return run_identify(o, opt);
  if (me->parsed()) return run_metrics(metrics_a, metrics_b, metrics_out);
  return run_gradcheck(gradcheck_config);
}

} // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return (e.code() == ErrorCode::Diverged || e.code() == ErrorCode::Degenerate) ? 3
                                                                                  : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
}
