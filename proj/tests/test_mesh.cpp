#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <string>

#include "doctest.h"
#include "occlureg/mesh.hpp"
#include "occlureg/random.hpp"

using namespace occlureg;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  out << body;
}

}  // namespace

TEST_CASE("minimal OFF file parses") {
  const std::string path = temp_path("tri.off");
  write_file(path,
             "OFF\n"
             "3 1 0\n"
             "0 0 0\n"
             "1 0 0\n"
             "0 1 0\n"
             "3 0 1 2\n");
  TriangleMesh mesh = load_off(path);
  REQUIRE(mesh.vertex_count() == 3);
  REQUIRE(mesh.face_count() == 1);
  CHECK(mesh.vertices.row(1).transpose().isApprox(Vec3(1, 0, 0)));
  CHECK(mesh.faces.row(0)[2] == 2);
  CHECK(face_area(mesh, 0) == doctest::Approx(0.5));
  std::remove(path.c_str());
}

TEST_CASE("OFF quads triangulate as a fan") {
  const std::string path = temp_path("quad.off");
  write_file(path,
             "OFF\n"
             "4 1 0\n"
             "0 0 0\n"
             "1 0 0\n"
             "1 1 0\n"
             "0 1 0\n"
             "4 0 1 2 3\n");
  TriangleMesh mesh = load_off(path);
  REQUIRE(mesh.face_count() == 2);
  CHECK(mesh.faces.row(0)[0] == 0);
  CHECK(mesh.faces.row(0)[1] == 1);
  CHECK(mesh.faces.row(0)[2] == 2);
  CHECK(mesh.faces.row(1)[0] == 0);
  CHECK(mesh.faces.row(1)[1] == 2);
  CHECK(mesh.faces.row(1)[2] == 3);
  CHECK(surface_area(mesh) == doctest::Approx(1.0));
  std::remove(path.c_str());
}

TEST_CASE("OFF with an out-of-range face index names the face") {
  const std::string path = temp_path("bad.off");
  write_file(path,
             "OFF\n"
             "3 1 0\n"
             "0 0 0\n"
             "1 0 0\n"
             "0 1 0\n"
             "3 0 1 7\n");
  CHECK_THROWS_AS(load_off(path), ParseError);
  try {
    load_off(path);
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("face") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("OBJ parses plain and slash-delimited faces") {
  const std::string path = temp_path("tri.obj");
  write_file(path,
             "# comment\n"
             "v 0 0 0\n"
             "v 1 0 0\n"
             "v 0 1 0\n"
             "v 0 0 1\n"
             "vt 0 0\n"
             "vn 0 0 1\n"
             "f 1 2 3\n"
             "f 1/1 2/1/1 4/1/1\n");
  TriangleMesh mesh = load_obj(path);
  REQUIRE(mesh.vertex_count() == 4);
  REQUIRE(mesh.face_count() == 2);
  CHECK(mesh.faces.row(1)[2] == 3);
  std::remove(path.c_str());
}

TEST_CASE("OBJ negative indices count from the end") {
  const std::string path = temp_path("neg.obj");
  write_file(path,
             "v 0 0 0\n"
             "v 1 0 0\n"
             "v 0 1 0\n"
             "f -3 -2 -1\n");
  TriangleMesh mesh = load_obj(path);
  REQUIRE(mesh.face_count() == 1);
  CHECK(mesh.faces.row(0)[0] == 0);
  CHECK(mesh.faces.row(0)[1] == 1);
  CHECK(mesh.faces.row(0)[2] == 2);
  std::remove(path.c_str());
}

TEST_CASE("save_off round-trips through load_mesh") {
  TriangleMesh box = make_box(Vec3(0.5, 0.4, 0.3));
  const std::string path = temp_path("box.off");
  save_off(path, box);
  TriangleMesh back = load_mesh(path);
  REQUIRE(back.vertex_count() == box.vertex_count());
  REQUIRE(back.face_count() == box.face_count());
  CHECK((back.vertices - box.vertices).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(back.faces == box.faces);
  std::remove(path.c_str());
}

TEST_CASE("surface sampling concentrates on the triangle") {
  TriangleMesh mesh;
  mesh.vertices.resize(3, 3);
  mesh.vertices << 0, 0, 0, 1, 0, 0, 0, 1, 0;
  mesh.faces.resize(1, 3);
  mesh.faces << 0, 1, 2;
  PointCloud samples = sample_surface(mesh, 10000, 21);
  REQUIRE(samples.size() == 10000);
  const Vec3 mean = samples.points.colwise().mean().transpose();
  const Vec3 centroid(1.0 / 3.0, 1.0 / 3.0, 0.0);
  CHECK((mean - centroid).norm() < 0.01);
  for (int i = 0; i < samples.size(); ++i) {
    CHECK(samples.points(i, 2) == 0.0);
    CHECK(samples.points(i, 0) >= -1e-12);
    CHECK(samples.points(i, 1) >= -1e-12);
    CHECK(samples.points(i, 0) + samples.points(i, 1) <= 1.0 + 1e-12);
  }
}

TEST_CASE("surface sampling picks faces by area") {
  // Two coplanar triangles with area ratio 1:3, separated along x.
  TriangleMesh mesh;
  mesh.vertices.resize(6, 3);
  mesh.vertices << 0, 0, 0, 1, 0, 0, 0, 1, 0,  // area 1/2
      5, 0, 0, 8, 0, 0, 5, 1, 0;               // area 3/2
  mesh.faces.resize(2, 3);
  mesh.faces << 0, 1, 2, 3, 4, 5;
  PointCloud samples = sample_surface(mesh, 20000, 22);
  int on_big = 0;
  for (int i = 0; i < samples.size(); ++i)
    if (samples.points(i, 0) >= 4.0) ++on_big;
  // Binomial(20000, 0.75): five sigma is ~0.0153.
  CHECK(static_cast<double>(on_big) / 20000.0 == doctest::Approx(0.75).epsilon(0.021));
}

TEST_CASE("surface sampling is deterministic and sized exactly") {
  TriangleMesh box = make_box(Vec3(1, 1, 1));
  PointCloud a = sample_surface(box, 1024, 3);
  PointCloud b = sample_surface(box, 1024, 3);
  REQUIRE(a.size() == 1024);
  CHECK(a.points == b.points);
  PointCloud c = sample_surface(box, 1024, 4);
  CHECK(a.points != c.points);
  PointCloud with_n = sample_surface(box, 128, 3, true);
  REQUIRE(with_n.has_normals());
  for (int i = 0; i < with_n.size(); ++i)
    CHECK(with_n.normals.row(i).norm() == doctest::Approx(1.0));
}

TEST_CASE("primitive faces wind outward") {
  struct Case {
    TriangleMesh mesh;
    const char* name;
  };
  const Case cases[] = {
      {make_box(Vec3(0.5, 0.7, 0.9)), "box"},
      {make_cylinder(0.5, 0.8, 24), "cylinder"},
      {make_cone(0.5, 1.0, 24), "cone"},
      {make_uv_sphere(1.0, 12, 24), "sphere"},
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    const Vec3 center = (c.mesh.vertices.colwise().minCoeff() +
                         c.mesh.vertices.colwise().maxCoeff())
                            .transpose() /
                        2.0;
    for (Eigen::Index f = 0; f < c.mesh.face_count(); ++f) {
      Vec3 centroid = Vec3::Zero();
      for (int k = 0; k < 3; ++k)
        centroid += c.mesh.vertices.row(c.mesh.faces(f, k)).transpose();
      centroid /= 3.0;
      CHECK(face_normal(c.mesh, f).dot(centroid - center) > 0.0);
    }
  }
}

TEST_CASE("torus normals point away from the tube core") {
  TriangleMesh torus = make_torus(1.0, 0.25, 32, 16);
  for (Eigen::Index f = 0; f < torus.face_count(); ++f) {
    Vec3 centroid = Vec3::Zero();
    for (int k = 0; k < 3; ++k)
      centroid += torus.vertices.row(torus.faces(f, k)).transpose();
    centroid /= 3.0;
    Vec3 core(centroid.x(), centroid.y(), 0.0);
    core = core.normalized();  // nearest point on the major circle
    CHECK(face_normal(torus, f).dot(centroid - core) > 0.0);
  }
}

TEST_CASE("box surface area is analytic") {
  TriangleMesh box = make_box(Vec3(0.5, 1.0, 1.5));
  // Full extents 1 x 2 x 3: area = 2(1*2 + 1*3 + 2*3) = 22.
  CHECK(surface_area(box) == doctest::Approx(22.0));
  TriangleMesh sphere = make_uv_sphere(1.0, 64, 128);
  CHECK(surface_area(sphere) ==
        doctest::Approx(4.0 * std::numbers::pi).epsilon(0.01));
}

TEST_CASE("degenerate faces are dropped") {
  TriangleMesh mesh;
  mesh.vertices.resize(4, 3);
  mesh.vertices << 0, 0, 0, 1, 0, 0, 0, 1, 0, 2, 0, 0;
  mesh.faces.resize(3, 3);
  mesh.faces << 0, 1, 2,  // fine
      0, 1, 1,            // collapsed edge
      0, 1, 3;            // collinear
  TriangleMesh cleaned = drop_degenerate_faces(mesh);
  REQUIRE(cleaned.face_count() == 1);
  CHECK(cleaned.faces.row(0)[2] == 2);
  CHECK(cleaned.vertex_count() == 4);
}

TEST_CASE("catalog shapes are deterministic, labeled and normalized") {
  const int n = shape_catalog_size();
  CHECK(n == 60);
  std::set<std::string> labels;
  for (int i = 0; i < n; ++i) {
    TriangleMesh a = make_catalog_shape(i);
    TriangleMesh b = make_catalog_shape(i);
    REQUIRE_FALSE(a.empty());
    CHECK(a.vertices == b.vertices);
    CHECK(a.faces == b.faces);
    const Vec3 lo = a.vertices.colwise().minCoeff();
    const Vec3 hi = a.vertices.colwise().maxCoeff();
    CHECK((hi - lo).maxCoeff() == doctest::Approx(2.0));
    CHECK(lo.minCoeff() >= -1.0 - 1e-9);
    CHECK(hi.maxCoeff() <= 1.0 + 1e-9);
    labels.insert(shape_catalog_label(i));
  }
  CHECK(labels.size() == static_cast<std::size_t>(n));
  CHECK(shape_catalog_label(0).find('_') != std::string::npos);
}

TEST_CASE("mesh transform moves vertices rigidly") {
  TriangleMesh box = make_box(Vec3(0.3, 0.3, 0.3));
  RigidTransform t = RigidTransform::Identity();
  t.linear() = Eigen::AngleAxisd(0.5, Vec3(0, 0, 1)).toRotationMatrix();
  t.translation() = Vec3(1, 2, 3);
  TriangleMesh moved = apply_transform(t, box);
  CHECK(moved.faces == box.faces);
  for (Eigen::Index i = 0; i < box.vertex_count(); ++i) {
    const Vec3 expect = t * Vec3(box.vertices.row(i));
    CHECK((moved.vertices.row(i).transpose() - expect).norm() < 1e-12);
  }
  CHECK(surface_area(moved) == doctest::Approx(surface_area(box)));
}
