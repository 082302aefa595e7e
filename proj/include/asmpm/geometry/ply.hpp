#pragma once

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "asmpm/core/common.hpp"

namespace asmpm {

// Minimal PLY reader: ASCII or binary-little-endian, scalar properties only
// (list properties are rejected — the point-cloud files we consume have none).
// All values are widened to double.
struct PlyElement {
  std::string name;
  size_t count = 0;
  std::vector<std::string> properties;
  std::vector<Real> data; // row-major, count x properties.size()

  int prop_index(const std::string& p) const {
    for (size_t i = 0; i < properties.size(); ++i)
      if (properties[i] == p) return int(i);
    return -1;
  }
  Real at(size_t row, int prop) const { return data[row * properties.size() + size_t(prop)]; }
};

namespace detail {

inline int ply_type_size(const std::string& t) {
  if (t == "char" || t == "int8" || t == "uchar" || t == "uint8") return 1;
  if (t == "short" || t == "int16" || t == "ushort" || t == "uint16") return 2;
  if (t == "int" || t == "int32" || t == "uint" || t == "uint32" || t == "float" ||
      t == "float32")
    return 4;
  if (t == "double" || t == "float64") return 8;
  return 0;
}

inline Real ply_decode(const char* p, const std::string& t) {
  auto rd = [&]<class T>(T) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return Real(v);
  };
  if (t == "char" || t == "int8") return rd(int8_t{});
  if (t == "uchar" || t == "uint8") return rd(uint8_t{});
  if (t == "short" || t == "int16") return rd(int16_t{});
  if (t == "ushort" || t == "uint16") return rd(uint16_t{});
  if (t == "int" || t == "int32") return rd(int32_t{});
  if (t == "uint" || t == "uint32") return rd(uint32_t{});
  if (t == "float" || t == "float32") return rd(float{});
  return rd(double{});
}

} // namespace detail

inline std::vector<PlyElement> read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open PLY file: " + path);

  std::string line;
  int lineno = 0;
  auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line))
      fail(ErrorCode::MalformedFile, path + ": truncated header");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };

  if (next_line() != "ply")
    fail(ErrorCode::MalformedFile, path + ":1: missing 'ply' magic");

  bool binary = false;
  std::vector<PlyElement> elements;
  std::vector<std::vector<std::string>> prop_types; // parallel to elements
  for (;;) {
    std::istringstream ss(next_line());
    std::string tag;
    ss >> tag;
    if (tag == "comment" || tag == "obj_info") continue;
    if (tag == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "ascii")
        binary = false;
      else if (fmt == "binary_little_endian")
        binary = true;
      else
        fail(ErrorCode::MalformedFile,
             path + ":" + std::to_string(lineno) + ": unsupported format '" + fmt +
                 "' (ascii or binary_little_endian only)");
    } else if (tag == "element") {
      PlyElement el;
      ss >> el.name >> el.count;
      elements.push_back(el);
      prop_types.emplace_back();
    } else if (tag == "property") {
      if (elements.empty())
        fail(ErrorCode::MalformedFile,
             path + ":" + std::to_string(lineno) + ": property before element");
      std::string type;
      ss >> type;
      if (type == "list")
        fail(ErrorCode::MalformedFile, path + ":" + std::to_string(lineno) +
                                           ": list properties unsupported");
      std::string name;
      ss >> name;
      if (detail::ply_type_size(type) == 0)
        fail(ErrorCode::MalformedFile, path + ":" + std::to_string(lineno) +
                                           ": unknown property type '" + type + "'");
      elements.back().properties.push_back(name);
      prop_types.back().push_back(type);
    } else if (tag == "end_header") {
      break;
    } else {
      fail(ErrorCode::MalformedFile,
           path + ":" + std::to_string(lineno) + ": unknown header record '" + tag + "'");
    }
  }

  for (size_t e = 0; e < elements.size(); ++e) {
    PlyElement& el = elements[e];
    const auto& types = prop_types[e];
    el.data.resize(el.count * el.properties.size());
    if (binary) {
      int row_bytes = 0;
      for (const auto& t : types) row_bytes += detail::ply_type_size(t);
      std::vector<char> row(static_cast<size_t>(row_bytes), '\0');
      for (size_t r = 0; r < el.count; ++r) {
        in.read(row.data(), row_bytes);
        if (!in)
          fail(ErrorCode::MalformedFile,
               path + ": truncated data in element '" + el.name + "'");
        const char* p = row.data();
        for (size_t c = 0; c < types.size(); ++c) {
          el.data[r * el.properties.size() + c] = detail::ply_decode(p, types[c]);
          p += detail::ply_type_size(types[c]);
        }
      }
    } else {
      for (size_t r = 0; r < el.count; ++r) {
        std::istringstream ss(next_line());
        for (size_t c = 0; c < types.size(); ++c) {
          Real v;
          if (!(ss >> v))
            fail(ErrorCode::MalformedFile, path + ":" + std::to_string(lineno) +
                                               ": bad value in element '" + el.name + "'");
          el.data[r * el.properties.size() + c] = v;
        }
      }
    }
  }
  return elements;
}

// binary little-endian point cloud, float32 x/y/z — one frame of a trajectory
inline void write_ply_points(const std::string& path, const std::vector<Vec3>& pts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write PLY file: " + path);
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << pts.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\nend_header\n";
  for (const Vec3& p : pts) {
    float xyz[3] = {float(p.x()), float(p.y()), float(p.z())};
    out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
  }
}

inline std::vector<Vec3> read_ply_points(const std::string& path) {
  auto elements = read_ply(path);
  for (const PlyElement& el : elements) {
    if (el.name != "vertex") continue;
    int ix = el.prop_index("x"), iy = el.prop_index("y"), iz = el.prop_index("z");
    for (auto [idx, name] : {std::pair{ix, "x"}, {iy, "y"}, {iz, "z"}})
      if (idx < 0)
        fail(ErrorCode::MalformedFile, path + ": vertex element missing property '" +
                                           std::string(name) + "'");
    std::vector<Vec3> pts(el.count);
    for (size_t r = 0; r < el.count; ++r)
      pts[r] = Vec3(el.at(r, ix), el.at(r, iy), el.at(r, iz));
    return pts;
  }
  fail(ErrorCode::MalformedFile, path + ": no vertex element");
}

} // namespace asmpm
