#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "asmpm/geometry/collider.hpp"
#include "asmpm/geometry/disks.hpp"
#include "asmpm/geometry/mesh.hpp"
#include "asmpm/geometry/ply.hpp"
#include "asmpm/geometry/sampling.hpp"
#include "asmpm/geometry/sdf.hpp"

using namespace asmpm;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  fs::path d = fs::temp_directory_path() / "asmpm_geom_tests";
  fs::create_directories(d);
  return d;
}

std::string write_text(const std::string& name, const std::string& body) {
  fs::path p = scratch() / name;
  std::ofstream out(p);
  out << body;
  return p.string();
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected asmpm::Error");
  return ErrorCode::Io;
}

template <class F>
std::string message_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  FAIL("expected asmpm::Error");
  return {};
}

Real mesh_area(const TriangleMesh& m) {
  Real a = 0;
  for (int f = 0; f < m.face_count(); ++f) {
    auto t = m.corners(f);
    a += triangle_area(t[0], t[1], t[2]);
  }
  return a;
}

bool normals_outward(const TriangleMesh& m, const Vec3& center) {
  for (int f = 0; f < m.face_count(); ++f) {
    auto t = m.corners(f);
    Vec3 centroid = (t[0] + t[1] + t[2]) / 3;
    if ((centroid - center).dot(m.face_normals[size_t(f)]) <= 0) return false;
  }
  return true;
}

} // namespace

TEST_CASE("box mesh is a closed triangulation with outward unit normals") {
  Vec3 center(0.4, 0.5, 0.6), half(0.1, 0.2, 0.3);
  TriangleMesh m = box_mesh(center, half);

  REQUIRE(m.vertices.size() == 8);
  REQUIRE(m.face_count() == 12);
  REQUIRE(m.face_normals.size() == 12);
  REQUIRE(m.dropped_degenerate == 0);
  REQUIRE(mesh_watertight(m));

  // 2*(ab + bc + ca) with full extents a=0.2, b=0.4, c=0.6
  REQUIRE(mesh_area(m) == Approx(0.88).epsilon(1e-12));
  REQUIRE(normals_outward(m, center));
  for (const Vec3& n : m.face_normals) {
    REQUIRE(n.norm() == Approx(1.0).epsilon(1e-12));
    // axis-aligned box: every normal is +/- a coordinate axis
    REQUIRE(n.cwiseAbs().maxCoeff() == Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("rigid transform preserves closedness and area under rotation") {
  TriangleMesh m = box_mesh(Vec3(0, 0, 0), Vec3(0.1, 0.2, 0.3));
  Mat3 rot = Eigen::AngleAxis<Real>(Real(0.7), Vec3(1, 2, 3).normalized()).toRotationMatrix();
  TriangleMesh t = transformed(m, rot, Vec3(0.5, 0.5, 0.5));

  REQUIRE(t.face_count() == 12);
  REQUIRE(mesh_watertight(t));
  REQUIRE(mesh_area(t) == Approx(mesh_area(m)).epsilon(1e-12));
  REQUIRE(normals_outward(t, Vec3(0.5, 0.5, 0.5)));
  // normals rotate with the surface
  for (size_t f = 0; f < t.face_normals.size(); ++f)
    REQUIRE((t.face_normals[f] - rot * m.face_normals[f]).norm() < 1e-12);
}

TEST_CASE("obj save and load round trip") {
  TriangleMesh m = box_mesh(Vec3(0.5, 0.5, 0.5), Vec3(0.25, 0.25, 0.25));
  fs::path p = scratch() / "roundtrip.obj";
  save_obj(p.string(), m);
  TriangleMesh back = load_obj(p.string());

  REQUIRE(back.vertices.size() == m.vertices.size());
  REQUIRE(back.face_count() == m.face_count());
  REQUIRE(mesh_watertight(back));
  for (size_t i = 0; i < m.vertices.size(); ++i)
    REQUIRE((back.vertices[i] - m.vertices[i]).norm() < 1e-9);
  for (size_t f = 0; f < m.faces.size(); ++f) {
    REQUIRE(back.faces[f] == m.faces[f]);
    REQUIRE((back.face_normals[f] - m.face_normals[f]).norm() < 1e-9);
  }
}

TEST_CASE("obj parser accepts slash tokens, comments and relative indices") {
  std::string body =
      "# comment\n"
      "o thing\n"
      "v 0 0 0\n"
      "v 1 0 0\n"
      "v 0 1 0\n"
      "vn 0 0 1\n"
      "vt 0 0\n"
      "f 1/1/1 2/2/1 3/3/1\n"
      "f -3 -2 -1\n";
  TriangleMesh m = load_obj(write_text("relative.obj", body));
  REQUIRE(m.vertices.size() == 3);
  REQUIRE(m.face_count() == 2);
  REQUIRE(m.faces[0] == Vec3i(0, 1, 2));
  REQUIRE(m.faces[1] == Vec3i(0, 1, 2));
}

TEST_CASE("obj parser reports malformed input with file and line") {
  SECTION("short vertex record") {
    std::string p = write_text("badv.obj", "v 0 0\n");
    auto load = [&] { load_obj(p); };
    REQUIRE(code_of(load) == ErrorCode::MalformedFile);
    std::string msg = message_of(load);
    REQUIRE(msg.find(":1:") != std::string::npos);
    REQUIRE(msg.find("bad vertex record") != std::string::npos);
  }
  SECTION("non-numeric face index") {
    std::string p = write_text("badf.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 x 3\n");
    auto load = [&] { load_obj(p); };
    REQUIRE(code_of(load) == ErrorCode::MalformedFile);
    REQUIRE(message_of(load).find("bad face index") != std::string::npos);
  }
  SECTION("quad face is unsupported geometry") {
    std::string p =
        write_text("quad.obj", "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
    auto load = [&] { load_obj(p); };
    REQUIRE(code_of(load) == ErrorCode::UnsupportedGeometry);
    std::string msg = message_of(load);
    REQUIRE(msg.find(":5:") != std::string::npos);
    REQUIRE(msg.find("triangles only") != std::string::npos);
  }
  SECTION("index past the vertex list") {
    std::string p = write_text("range.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n");
    auto load = [&] { load_obj(p); };
    REQUIRE(code_of(load) == ErrorCode::MalformedFile);
    REQUIRE(message_of(load).find("face index out of range") != std::string::npos);
  }
  SECTION("obj index zero is invalid") {
    std::string p = write_text("zero.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n");
    REQUIRE(code_of([&] { load_obj(p); }) == ErrorCode::MalformedFile);
  }
  SECTION("missing file") {
    REQUIRE(code_of([] { load_obj("/nonexistent/nope.obj"); }) == ErrorCode::Io);
  }
}

TEST_CASE("zero-area faces are dropped and counted") {
  std::string p = write_text("degen.obj",
                             "v 0 0 0\nv 1 0 0\nv 0 1 0\n"
                             "f 1 1 2\n"  // repeated vertex, zero area
                             "f 1 2 3\n");
  TriangleMesh m = load_obj(p);
  REQUIRE(m.face_count() == 1);
  REQUIRE(m.dropped_degenerate == 1);
  REQUIRE(m.face_normals.size() == 1);

  // same rule through finalize_mesh on a hand-built sliver
  TriangleMesh s;
  s.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)}; // collinear
  s.faces = {Vec3i(0, 1, 2)};
  REQUIRE(finalize_mesh(s) == 1);
  REQUIRE(s.face_count() == 0);
}

TEST_CASE("icosphere is closed at every subdivision level") {
  Vec3 c(0.5, 0.4, 0.6);
  for (int subdiv : {0, 1, 2}) {
    TriangleMesh m = icosphere_mesh(c, Real(0.3), subdiv);
    INFO("subdiv " << subdiv);
    REQUIRE(m.face_count() == 20 * (1 << (2 * subdiv)));
    REQUIRE(mesh_watertight(m));
    REQUIRE(normals_outward(m, c));
    for (const Vec3& v : m.vertices)
      REQUIRE((v - c).norm() == Approx(0.3).epsilon(1e-12));
  }
}

TEST_CASE("plate mesh is an open surface with a uniform normal") {
  Mat3 frame = Mat3::Identity();
  TriangleMesh m = plate_mesh(Vec3(0.5, 0.5, 0.3), frame, Real(0.2), Real(0.3), 4);
  REQUIRE(m.face_count() == 2 * 4 * 4);
  REQUIRE_FALSE(mesh_watertight(m));
  REQUIRE(mesh_area(m) == Approx(0.4 * 0.6).epsilon(1e-12));
  for (const Vec3& n : m.face_normals) REQUIRE((n - Vec3(0, 0, 1)).norm() < 1e-12);
  for (const Vec3& v : m.vertices) REQUIRE(v.z() == Approx(0.3).epsilon(1e-12));
}

TEST_CASE("closest point on triangle covers every Voronoi region") {
  Vec3 a(0, 0, 0), b(1, 0, 0), c(0, 1, 0);
  auto cp = [&](const Vec3& p) { return closest_point_triangle(p, a, b, c); };

  REQUIRE((cp(Vec3(-1, -1, 0)) - a).norm() < 1e-14);          // vertex a
  REQUIRE((cp(Vec3(2, -1, 0)) - b).norm() < 1e-14);           // vertex b
  REQUIRE((cp(Vec3(-1, 2, 0)) - c).norm() < 1e-14);           // vertex c
  REQUIRE((cp(Vec3(0.5, -1, 3)) - Vec3(0.5, 0, 0)).norm() < 1e-14);  // edge ab
  REQUIRE((cp(Vec3(-2, 0.5, 0)) - Vec3(0, 0.5, 0)).norm() < 1e-14);  // edge ac
  REQUIRE((cp(Vec3(1, 1, 0)) - Vec3(0.5, 0.5, 0)).norm() < 1e-14);   // edge bc
  REQUIRE((cp(Vec3(0.25, 0.25, 5)) - Vec3(0.25, 0.25, 0)).norm() < 1e-14); // face
  REQUIRE((cp(Vec3(0.2, 0.3, 0)) - Vec3(0.2, 0.3, 0)).norm() < 1e-14);     // inside
}

TEST_CASE("primitive distance and footprint tests") {
  SECTION("disk") {
    Primitive d;
    d.is_disk = true;
    d.center = Vec3(0.5, 0.5, 0.5);
    d.normal = Vec3(0, 0, 1);
    d.radius = Real(0.5);
    REQUIRE(point_primitive_distance(Vec3(0.7, 0.5, 0.8), d) == Approx(0.3));
    REQUIRE(point_primitive_distance(Vec3(0.7, 0.5, 0.2), d) == Approx(-0.3));
    REQUIRE(projection_inside(Vec3(0.7, 0.5, 0.8), d));
    REQUIRE_FALSE(projection_inside(Vec3(1.1, 0.5, 0.8), d));
  }
  SECTION("triangle") {
    Primitive t;
    t.is_disk = false;
    t.a = Vec3(0, 0, 0);
    t.b = Vec3(1, 0, 0);
    t.c = Vec3(0, 1, 0);
    t.normal = Vec3(0, 0, 1);
    REQUIRE(point_primitive_distance(Vec3(0.2, 0.2, 0.4), t) == Approx(0.4));
    REQUIRE(projection_inside(Vec3(0.2, 0.2, 0.4), t));
    REQUIRE_FALSE(projection_inside(Vec3(0.9, 0.9, 0.4), t));
  }
}

TEST_CASE("binary ply point round trip at float precision") {
  std::vector<Vec3> pts;
  Rng rng(17u, 0);
  for (int i = 0; i < 257; ++i) pts.push_back(rng.uniform_vec3(Real(0), Real(1)));
  fs::path p = scratch() / "points.ply";
  write_ply_points(p.string(), pts);
  std::vector<Vec3> back = read_ply_points(p.string());
  REQUIRE(back.size() == pts.size());
  for (size_t i = 0; i < pts.size(); ++i)
    REQUIRE((back[i] - pts[i]).cwiseAbs().maxCoeff() < 1e-6); // float32 storage
}

TEST_CASE("ascii ply parses scalar properties of any declared type") {
  std::string body =
      "ply\n"
      "format ascii 1.0\n"
      "comment generated by hand\n"
      "element vertex 2\n"
      "property float x\n"
      "property float y\n"
      "property float z\n"
      "property uchar quality\n"
      "end_header\n"
      "0.5 0.25 0.125 7\n"
      "1 2 3 255\n";
  std::string p = write_text("ascii.ply", body);
  auto els = read_ply(p);
  REQUIRE(els.size() == 1);
  REQUIRE(els[0].name == "vertex");
  REQUIRE(els[0].count == 2);
  REQUIRE(els[0].properties.size() == 4);
  REQUIRE(els[0].prop_index("quality") == 3);
  REQUIRE(els[0].at(0, 0) == Approx(0.5));
  REQUIRE(els[0].at(1, 3) == Approx(255));

  auto pts = read_ply_points(p);
  REQUIRE(pts.size() == 2);
  REQUIRE((pts[1] - Vec3(1, 2, 3)).norm() < 1e-12);
}

TEST_CASE("ply parser rejects what it cannot represent") {
  auto expect = [&](const std::string& name, const std::string& body,
                    const std::string& needle) {
    std::string p = write_text(name, body);
    auto load = [&] { read_ply(p); };
    REQUIRE(code_of(load) == ErrorCode::MalformedFile);
    std::string msg = message_of(load);
    INFO(msg);
    REQUIRE(msg.find(needle) != std::string::npos);
  };

  expect("nomagic.ply", "plyx\n", "missing 'ply' magic");
  expect("bigendian.ply", "ply\nformat binary_big_endian 1.0\nend_header\n",
         "unsupported format");
  expect("list.ply",
         "ply\nformat ascii 1.0\nelement face 1\n"
         "property list uchar int vertex_indices\nend_header\n3 0 1 2\n",
         "list properties unsupported");
  expect("unknowntype.ply",
         "ply\nformat ascii 1.0\nelement vertex 1\nproperty weird q\nend_header\n0\n",
         "unknown property type");
  expect("orphanprop.ply", "ply\nformat ascii 1.0\nproperty float x\nend_header\n",
         "property before element");
  expect("badrecord.ply", "ply\nformat ascii 1.0\nelementt vertex 1\nend_header\n",
         "unknown header record");
  expect("truncated.ply",
         "ply\nformat binary_little_endian 1.0\nelement vertex 4\n"
         "property float x\nend_header\n\x00\x00\x80?",
         "truncated data");
  expect("badvalue.ply",
         "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\nzz\n",
         "bad value");

  std::string noz = write_text(
      "noz.ply",
      "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"
      "end_header\n0 0\n");
  auto load_noz = [&] { read_ply_points(noz); };
  REQUIRE(code_of(load_noz) == ErrorCode::MalformedFile);
  REQUIRE(message_of(load_noz).find("missing property 'z'") != std::string::npos);

  REQUIRE(code_of([] { read_ply("/nonexistent/nope.ply"); }) == ErrorCode::Io);
}

TEST_CASE("disk splats carry rotated normals and scaled radii") {
  const Real s = std::sqrt(Real(0.5)); // 90 degrees about x
  std::ostringstream body;
  body << "ply\nformat ascii 1.0\nelement vertex 2\n"
          "property float x\nproperty float y\nproperty float z\n"
          "property float rot_0\nproperty float rot_1\nproperty float rot_2\n"
          "property float rot_3\nproperty float scale_0\nproperty float scale_1\n"
          "end_header\n"
          "0.1 0.2 0.3 2 0 0 0 0.02 0.05\n" // non-unit quaternion, normalized on load
       << "0.4 0.5 0.6 " << s << ' ' << s << " 0 0 0.03 0.01\n";
  std::string p = write_text("disks.ply", body.str());

  DiskSet d = load_disks(p);
  REQUIRE(d.size() == 2);
  REQUIRE((d.centers[0] - Vec3(0.1, 0.2, 0.3)).norm() < 1e-6);
  REQUIRE((d.normals[0] - Vec3(0, 0, 1)).norm() < 1e-6);
  REQUIRE(d.radii[0] == Approx(2 * 0.05));
  REQUIRE((d.normals[1] - Vec3(0, -1, 0)).norm() < 1e-6);
  REQUIRE(d.radii[1] == Approx(2 * 0.03));

  DiskSet wide = load_disks(p, Real(3));
  REQUIRE(wide.radii[0] == Approx(3 * 0.05));

  SECTION("missing rotation property is named") {
    std::string bad = write_text(
        "disks_bad.ply",
        "ply\nformat ascii 1.0\nelement vertex 1\n"
        "property float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n");
    auto load = [&] { load_disks(bad); };
    REQUIRE(code_of(load) == ErrorCode::MalformedFile);
    REQUIRE(message_of(load).find("rot_0") != std::string::npos);
  }
  SECTION("zero quaternion") {
    std::string bad = write_text(
        "disks_zeroq.ply",
        "ply\nformat ascii 1.0\nelement vertex 1\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property float rot_0\nproperty float rot_1\nproperty float rot_2\n"
        "property float rot_3\nproperty float scale_0\nproperty float scale_1\n"
        "end_header\n0 0 0 0 0 0 0 0.1 0.1\n");
    REQUIRE(code_of([&] { load_disks(bad); }) == ErrorCode::MalformedFile);
  }
  SECTION("non-positive radius") {
    std::string bad = write_text(
        "disks_zeror.ply",
        "ply\nformat ascii 1.0\nelement vertex 1\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property float rot_0\nproperty float rot_1\nproperty float rot_2\n"
        "property float rot_3\nproperty float scale_0\nproperty float scale_1\n"
        "end_header\n0 0 0 1 0 0 0 0 0\n");
    auto load = [&] { load_disks(bad); };
    REQUIRE(code_of(load) == ErrorCode::MalformedFile);
    REQUIRE(message_of(load).find("non-positive disk radius") != std::string::npos);
  }
}

TEST_CASE("tangent basis is right-handed and orthonormal") {
  for (Vec3 n : {Vec3(0, 0, 1), Vec3(0, 0, -1), Vec3(1, 0, 0),
                 Vec3(1, 1, 1).normalized(), Vec3(0.1, -0.2, 0.97).normalized()}) {
    Vec3 u, v;
    tangent_basis(n, u, v);
    REQUIRE(u.norm() == Approx(1.0).epsilon(1e-12));
    REQUIRE(v.norm() == Approx(1.0).epsilon(1e-12));
    REQUIRE(std::abs(u.dot(n)) < 1e-12);
    REQUIRE(std::abs(v.dot(n)) < 1e-12);
    REQUIRE((u.cross(v) - n).norm() < 1e-12);
  }
}

TEST_CASE("surface sampling hits the target density deterministically") {
  RigidCollider col;
  col.surface = box_mesh(Vec3(0.5, 0.5, 0.5), Vec3(0.5, 0.5, 0.5));

  // every face splits into two triangles of area 1/2; ceil(0.5 / 0.1^2) = 50 each
  RigidParticleSet set = sample_rigid_particles(col, Real(0.1), 9u);
  REQUIRE(set.size() == 600);
  for (int i = 0; i < set.size(); ++i) {
    Vec3 d = (set.positions[size_t(i)] - Vec3(0.5, 0.5, 0.5)).cwiseAbs();
    REQUIRE(d.maxCoeff() == Approx(0.5).epsilon(1e-9)); // on the cube surface
    REQUIRE(set.primitive_ids[size_t(i)] >= 0);
    REQUIRE(set.primitive_ids[size_t(i)] < 12);
  }
  std::vector<int> per_prim(12, 0);
  for (int id : set.primitive_ids) ++per_prim[size_t(id)];
  for (int c : per_prim) REQUIRE(c == 50);

  RigidParticleSet again = sample_rigid_particles(col, Real(0.1), 9u);
  REQUIRE(again.size() == set.size());
  for (int i = 0; i < set.size(); ++i)
    REQUIRE((again.positions[size_t(i)] - set.positions[size_t(i)]).norm() == 0.0);

  RigidParticleSet other = sample_rigid_particles(col, Real(0.1), 10u);
  bool differs = false;
  for (int i = 0; i < set.size() && !differs; ++i)
    differs = (other.positions[size_t(i)] - set.positions[size_t(i)]).norm() > 0;
  REQUIRE(differs);
}

TEST_CASE("sampled positions are stored in the collider base pose") {
  RigidCollider col;
  col.surface = box_mesh(Vec3(0.5, 0.5, 0.5), Vec3(0.5, 0.5, 0.5));
  col.offset = Vec3(0.25, -0.1, 0.05);
  RigidParticleSet set = sample_rigid_particles(col, Real(0.1), 9u);
  for (const Vec3& p : set.positions) {
    Vec3 d = (p - Vec3(0.5, 0.5, 0.5)).cwiseAbs();
    REQUIRE(d.maxCoeff() == Approx(0.5).epsilon(1e-9)); // offset removed again
  }
}

TEST_CASE("disk sampling rings lie in the disk plane") {
  DiskSet d;
  d.centers = {Vec3(0.5, 0.5, 0.5)};
  d.normals = {Vec3(0, 1, 0)};
  d.radii = {Real(0.1)};
  RigidCollider col;
  col.surface = d;

  // area pi r^2 over spacing r: ceil(pi) = 4 points on one ring at r/2
  RigidParticleSet set = sample_rigid_particles(col, Real(0.1), 3u);
  REQUIRE(set.size() == 4);
  for (const Vec3& p : set.positions) {
    Vec3 r = p - Vec3(0.5, 0.5, 0.5);
    REQUIRE(std::abs(r.dot(Vec3(0, 1, 0))) < 1e-12);
    REQUIRE(r.norm() == Approx(0.05).epsilon(1e-12));
  }
  for (int id : set.primitive_ids) REQUIRE(id == 0);
}

TEST_CASE("inside test by ray parity") {
  TriangleMesh sphere = icosphere_mesh(Vec3(0.5, 0.5, 0.5), Real(0.2), 1);
  REQUIRE(point_inside_mesh(Vec3(0.5, 0.5, 0.5), sphere));
  REQUIRE(point_inside_mesh(Vec3(0.5, 0.5, 0.62), sphere));
  REQUIRE_FALSE(point_inside_mesh(Vec3(0.5, 0.5, 0.75), sphere));
  REQUIRE_FALSE(point_inside_mesh(Vec3(2, 2, 2), sphere));

  TriangleMesh box = box_mesh(Vec3(0.5, 0.5, 0.5), Vec3(0.24, 0.24, 0.24));
  REQUIRE(point_inside_mesh(Vec3(0.3, 0.5, 0.5), box));
  REQUIRE_FALSE(point_inside_mesh(Vec3(0.2, 0.5, 0.5), box));
}

TEST_CASE("node-sampled signed distance is negative inside and exact for a box") {
  GridSpec grid;
  grid.res = Vec3i(8, 8, 8);
  grid.dx = Real(1) / 8;
  // faces at 0.26 and 0.74 keep every grid node strictly off the surface
  TriangleMesh box = box_mesh(Vec3(0.5, 0.5, 0.5), Vec3(0.24, 0.24, 0.24));

  std::vector<Real> phi = build_sdf(box, grid);
  REQUIRE(int(phi.size()) == grid.node_count());

  auto at = [&](int i, int j, int k) { return phi[size_t(grid.node_id(i, j, k))]; };
  REQUIRE(at(4, 4, 4) == Approx(-0.24).epsilon(1e-12));          // center
  REQUIRE(at(4, 4, 3) == Approx(-0.115).epsilon(1e-12));         // inside, near -z face
  REQUIRE(at(4, 4, 0) == Approx(0.26).epsilon(1e-12));           // below, face-normal dist
  REQUIRE(at(0, 0, 0) == Approx(0.26 * std::sqrt(3.0)).epsilon(1e-12)); // corner
  for (int id = 0; id < grid.node_count(); ++id) {
    Vec3 p = grid.node_pos(grid.node_ijk(id));
    bool inside = (p - Vec3(0.5, 0.5, 0.5)).cwiseAbs().maxCoeff() < Real(0.24);
    REQUIRE((phi[size_t(id)] < 0) == inside);
  }
}

TEST_CASE("signed distance refuses open surfaces") {
  GridSpec grid;
  grid.res = Vec3i(8, 8, 8);
  grid.dx = Real(1) / 8;
  TriangleMesh plate = plate_mesh(Vec3(0.5, 0.5, 0.3), Mat3::Identity(), 0.2, 0.2, 2);
  auto build = [&] { build_sdf(plate, grid); };
  REQUIRE(code_of(build) == ErrorCode::BaselineUnsupported);
  REQUIRE(message_of(build).find("watertight") != std::string::npos);
}
