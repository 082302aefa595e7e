#pragma once

#include <ctime>
#include <filesystem>
#include <fstream>

#include "asmpm/engine/state.hpp"
#include "asmpm/geometry/ply.hpp"
#include "json.hpp"

namespace asmpm {

constexpr const char* kToolVersion = "0.1.0";

inline std::string frame_file_name(int f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04d.ply", f);
  return buf;
}

inline std::string iso_timestamp() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// One PLY per frame plus a manifest.  `config_hash` covers the full scenario,
// `scene_hash` everything except the material parameters, so an
// identification run can verify it observes the same scene it optimizes on.
inline void save_trajectory(const std::string& dir, const Trajectory& traj,
                            uint64_t config_hash, uint64_t scene_hash,
                            const nlohmann::json& extra = {}) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json man;
  man["format"] = "asdiffmpm-trajectory";
  man["version"] = 1;
  man["tool_version"] = kToolVersion;
  man["created"] = iso_timestamp();
  man["frames"] = traj.frames;
  man["particles"] = traj.particles;
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx", (unsigned long long)config_hash);
  man["config_hash"] = hex;
  std::snprintf(hex, sizeof hex, "%016llx", (unsigned long long)scene_hash);
  man["scene_hash"] = hex;
  for (auto& [k, val] : extra.items()) man[k] = val;

  std::vector<std::string> files;
  for (int f = 0; f < traj.frames; ++f) {
    std::string name = frame_file_name(f);
    std::vector<Vec3> pts(traj.frame(f), traj.frame(f) + traj.particles);
    write_ply_points((fs::path(dir) / name).string(), pts);
    files.push_back(name);
  }
  man["files"] = files;

  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) fail(ErrorCode::Io, "cannot write manifest in " + dir);
  out << man.dump(2) << "\n";
}

inline nlohmann::json load_manifest(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) fail(ErrorCode::Io, "no manifest.json in " + dir);
  nlohmann::json man;
  try {
    in >> man;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedFile, "bad manifest in " + dir + ": " + e.what());
  }
  if (man.value("format", "") != "asdiffmpm-trajectory")
    fail(ErrorCode::MalformedFile, "not a trajectory manifest: " + dir);
  return man;
}

inline Trajectory load_trajectory(const std::string& dir) {
  namespace fs = std::filesystem;
  nlohmann::json man = load_manifest(dir);
  Trajectory traj;
  traj.init(man.at("frames").get<int>(), man.at("particles").get<int>());
  auto files = man.at("files").get<std::vector<std::string>>();
  if (int(files.size()) != traj.frames)
    fail(ErrorCode::MalformedFile, "manifest lists " + std::to_string(files.size()) +
                                       " files for " + std::to_string(traj.frames) +
                                       " frames");
  for (int f = 0; f < traj.frames; ++f) {
    std::vector<Vec3> pts = read_ply_points((fs::path(dir) / files[size_t(f)]).string());
    if (int(pts.size()) != traj.particles)
      fail(ErrorCode::Dimension, files[size_t(f)] + " holds " +
                                     std::to_string(pts.size()) + " points, expected " +
                                     std::to_string(traj.particles));
    std::copy(pts.begin(), pts.end(), traj.frame(f));
  }
  return traj;
}

} // namespace asmpm
