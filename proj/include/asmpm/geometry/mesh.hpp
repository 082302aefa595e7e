#pragma once

#include <array>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "asmpm/core/common.hpp"

namespace asmpm {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Vec3i> faces;        // CCW winding, outward for closed meshes
  std::vector<Vec3> face_normals;  // unit, one per face
  int dropped_degenerate = 0;      // zero-area faces removed at load

  int face_count() const { return int(faces.size()); }

  std::array<Vec3, 3> corners(int f) const {
    const Vec3i& t = faces[size_t(f)];
    return {vertices[size_t(t[0])], vertices[size_t(t[1])], vertices[size_t(t[2])]};
  }
};

inline Real triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return Real(0.5) * (b - a).cross(c - a).norm();
}

// recompute face normals from winding; returns count of dropped zero-area faces
inline int finalize_mesh(TriangleMesh& m, Real degenerate_eps = Real(1e-12)) {
  std::vector<Vec3i> kept;
  m.face_normals.clear();
  int dropped = 0;
  for (const Vec3i& f : m.faces) {
    const Vec3& a = m.vertices[size_t(f[0])];
    const Vec3& b = m.vertices[size_t(f[1])];
    const Vec3& c = m.vertices[size_t(f[2])];
    Vec3 cr = (b - a).cross(c - a);
    Real n = cr.norm();
    if (n <= degenerate_eps) {
      ++dropped;
      continue;
    }
    kept.push_back(f);
    m.face_normals.push_back(cr / n);
  }
  m.faces = std::move(kept);
  m.dropped_degenerate += dropped;
  return dropped;
}

// Wavefront OBJ, v/f records only, triangles required.  Indices may be
// 1-based or negative (relative); `f 1/2/3` style tokens keep the first field.
inline TriangleMesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open OBJ file: " + path);
  TriangleMesh mesh;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag.empty() || tag[0] == '#') continue;
    if (tag == "v") {
      Real x, y, z;
      if (!(ss >> x >> y >> z))
        fail(ErrorCode::MalformedFile,
             path + ":" + std::to_string(lineno) + ": bad vertex record");
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<long> idx;
      std::string tok;
      while (ss >> tok) {
        size_t slash = tok.find('/');
        std::string head = slash == std::string::npos ? tok : tok.substr(0, slash);
        try {
          idx.push_back(std::stol(head));
        } catch (...) {
          fail(ErrorCode::MalformedFile,
               path + ":" + std::to_string(lineno) + ": bad face index '" + tok + "'");
        }
      }
      if (idx.size() != 3)
        fail(ErrorCode::UnsupportedGeometry,
             path + ":" + std::to_string(lineno) + ": face with " +
                 std::to_string(idx.size()) + " vertices (triangles only)");
      Vec3i f;
      for (int k = 0; k < 3; ++k) {
        long v = idx[size_t(k)];
        long n = long(mesh.vertices.size());
        long resolved = v > 0 ? v - 1 : n + v; // OBJ is 1-based; negatives relative
        if (resolved < 0 || resolved >= n)
          fail(ErrorCode::MalformedFile, path + ":" + std::to_string(lineno) +
                                             ": face index out of range");
        f[k] = int(resolved);
      }
      mesh.faces.push_back(f);
    }
    // other records (vn, vt, o, g, usemtl, s, mtllib) are ignored
  }
  finalize_mesh(mesh);
  return mesh;
}

inline void save_obj(const std::string& path, const TriangleMesh& m) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write OBJ file: " + path);
  out.precision(12);
  for (const Vec3& v : m.vertices)
    out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const Vec3i& f : m.faces)
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

// every undirected edge shared by exactly two faces with opposite orientation
inline bool mesh_watertight(const TriangleMesh& m) {
  std::map<std::pair<int, int>, int> edges; // (lo,hi) -> forward minus backward
  std::map<std::pair<int, int>, int> count;
  for (const Vec3i& f : m.faces) {
    for (int e = 0; e < 3; ++e) {
      int a = f[e], b = f[(e + 1) % 3];
      auto key = std::minmax(a, b);
      edges[key] += (a < b) ? 1 : -1;
      count[key] += 1;
    }
  }
  for (const auto& [key, c] : count)
    if (c != 2 || edges[key] != 0) return false;
  return !m.faces.empty();
}

inline TriangleMesh transformed(const TriangleMesh& m, const Mat3& linear,
                                const Vec3& translate) {
  TriangleMesh out = m;
  for (Vec3& v : out.vertices) v = linear * v + translate;
  finalize_mesh(out);
  return out;
}

// ---- builtin shapes ----------------------------------------------------

inline TriangleMesh box_mesh(const Vec3& center, const Vec3& half) {
  TriangleMesh m;
  for (int i = 0; i < 8; ++i) {
    Vec3 s(i & 1 ? 1 : -1, i & 2 ? 1 : -1, i & 4 ? 1 : -1);
    m.vertices.push_back(center + s.cwiseProduct(half));
  }
  // 12 triangles, outward CCW winding
  const int quads[6][4] = {
      {0, 2, 3, 1}, // -z  (looking from -z: CCW)
      {4, 5, 7, 6}, // +z
      {0, 1, 5, 4}, // -y
      {2, 6, 7, 3}, // +y
      {0, 4, 6, 2}, // -x
      {1, 3, 7, 5}, // +x
  };
  for (const auto& q : quads) {
    m.faces.push_back(Vec3i(q[0], q[1], q[2]));
    m.faces.push_back(Vec3i(q[0], q[2], q[3]));
  }
  finalize_mesh(m);
  return m;
}

inline TriangleMesh icosphere_mesh(const Vec3& center, Real radius, int subdiv = 2) {
  const Real t = (Real(1) + std::sqrt(Real(5))) / 2;
  std::vector<Vec3> verts = {
      {-1, t, 0}, {1, t, 0},   {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
      {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  std::vector<Vec3i> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (Vec3& v : verts) v.normalize();
  for (int s = 0; s < subdiv; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Vec3 m = (verts[size_t(a)] + verts[size_t(b)]).normalized();
      verts.push_back(m);
      int id = int(verts.size()) - 1;
      midpoint[key] = id;
      return id;
    };
    std::vector<Vec3i> next;
    next.reserve(faces.size() * 4);
    for (const Vec3i& f : faces) {
      int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back(Vec3i(f[0], ab, ca));
      next.push_back(Vec3i(f[1], bc, ab));
      next.push_back(Vec3i(f[2], ca, bc));
      next.push_back(Vec3i(ab, bc, ca));
    }
    faces = std::move(next);
  }
  TriangleMesh m;
  m.vertices.reserve(verts.size());
  for (const Vec3& v : verts) m.vertices.push_back(center + radius * v);
  m.faces = std::move(faces);
  finalize_mesh(m);
  return m;
}

// open rectangle in the plane spanned by two axes of `frame`; normal = frame z
inline TriangleMesh plate_mesh(const Vec3& center, const Mat3& frame, Real half_u,
                               Real half_v, int divisions = 1) {
  TriangleMesh m;
  Vec3 u = frame.col(0), v = frame.col(1);
  int n = std::max(1, divisions);
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      Real a = (Real(2) * i / n - 1) * half_u;
      Real b = (Real(2) * j / n - 1) * half_v;
      m.vertices.push_back(center + a * u + b * v);
    }
  auto vid = [n](int i, int j) { return i * (n + 1) + j; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      m.faces.push_back(Vec3i(vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)));
      m.faces.push_back(Vec3i(vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)));
    }
  finalize_mesh(m);
  return m;
}

// closest point on triangle (Ericson, Real-Time Collision Detection)
inline Vec3 closest_point_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                                   const Vec3& c) {
  Vec3 ab = b - a, ac = c - a, ap = p - a;
  Real d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  Vec3 bp = p - b;
  Real d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  Real vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + (d1 / (d1 - d3)) * ab;
  Vec3 cp = p - c;
  Real d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  Real vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + (d2 / (d2 - d6)) * ac;
  Real va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    Real w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return b + w * (c - b);
  }
  Real denom = Real(1) / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

} // namespace asmpm
