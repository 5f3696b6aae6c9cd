#include "occlureg/mesh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "occlureg/random.hpp"

namespace occlureg {

namespace {

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Line reader that strips '#' comments, skips blank lines, and tracks the
/// 1-based line number for error messages.
struct LineReader {
  std::ifstream in;
  std::string path;
  long line_no = 0;

  explicit LineReader(const std::string& p) : in(p), path(p) {
    if (!in) throw IoError("cannot open " + p);
  }

  bool next(std::string& out) {
    std::string raw;
    while (std::getline(in, raw)) {
      ++line_no;
      if (const auto hash = raw.find('#'); hash != std::string::npos)
        raw.erase(hash);
      raw = trimmed(raw);
      if (!raw.empty()) {
        out = raw;
        return true;
      }
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(path, line_no, message);
  }
};

long take_long(std::istringstream& s, LineReader& r, const char* what) {
  long value = 0;
  if (!(s >> value)) r.fail(std::string("expected ") + what);
  return value;
}

double take_double(std::istringstream& s, LineReader& r, const char* what) {
  double value = 0;
  if (!(s >> value)) r.fail(std::string("expected ") + what);
  return value;
}

void append_fan(std::vector<std::array<int, 3>>& faces, const std::vector<long>& poly,
                long n_vertices, long face_ordinal, LineReader& r) {
  for (long idx : poly)
    if (idx < 0 || idx >= n_vertices)
      r.fail("face " + std::to_string(face_ordinal) + ": vertex index " +
             std::to_string(idx) + " out of range [0, " + std::to_string(n_vertices) + ")");
  for (std::size_t k = 1; k + 1 < poly.size(); ++k)
    faces.push_back({static_cast<int>(poly[0]), static_cast<int>(poly[k]),
                     static_cast<int>(poly[k + 1])});
}

TriangleMesh assemble(std::vector<Vec3>&& vertices, std::vector<std::array<int, 3>>&& faces,
                      const std::string& path) {
  TriangleMesh mesh;
  mesh.vertices.resize(static_cast<Eigen::Index>(vertices.size()), 3);
  for (std::size_t i = 0; i < vertices.size(); ++i)
    mesh.vertices.row(static_cast<Eigen::Index>(i)) = vertices[i].transpose();
  mesh.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
  for (std::size_t i = 0; i < faces.size(); ++i)
    for (int c = 0; c < 3; ++c) mesh.faces(static_cast<Eigen::Index>(i), c) = faces[i][c];
  mesh = drop_degenerate_faces(mesh);
  if (mesh.empty()) throw EmptyMesh(path + ": no non-degenerate faces");
  return mesh;
}

}  // namespace

TriangleMesh load_off(const std::string& path) {
  LineReader r(path);
  std::string line;
  if (!r.next(line)) r.fail("empty file");

  // Header: "OFF" alone, "OFF nv nf ne", or the glued "OFFnv nf ne" variant.
  std::string counts_part;
  if (line.rfind("OFF", 0) == 0)
    counts_part = trimmed(line.substr(3));
  else
    r.fail("missing OFF header");
  if (counts_part.empty()) {
    if (!r.next(counts_part)) r.fail("missing vertex/face counts");
  }
  std::istringstream counts(counts_part);
  const long nv = take_long(counts, r, "vertex count");
  const long nf = take_long(counts, r, "face count");
  if (nv <= 0) throw EmptyMesh(path + ": no vertices");

  std::vector<Vec3> vertices;
  vertices.reserve(static_cast<std::size_t>(nv));
  for (long i = 0; i < nv; ++i) {
    if (!r.next(line)) r.fail("unexpected end of file in vertex list");
    std::istringstream s(line);
    const double x = take_double(s, r, "vertex coordinate");
    const double y = take_double(s, r, "vertex coordinate");
    const double z = take_double(s, r, "vertex coordinate");
    vertices.emplace_back(x, y, z);
  }

  std::vector<std::array<int, 3>> faces;
  faces.reserve(static_cast<std::size_t>(nf));
  for (long f = 0; f < nf; ++f) {
    if (!r.next(line)) r.fail("unexpected end of file in face list");
    std::istringstream s(line);
    const long k = take_long(s, r, "face vertex count");
    if (k < 3) r.fail("face " + std::to_string(f) + ": fewer than 3 vertices");
    std::vector<long> poly(static_cast<std::size_t>(k));
    for (long i = 0; i < k; ++i) poly[static_cast<std::size_t>(i)] = take_long(s, r, "face index");
    append_fan(faces, poly, nv, f, r);
  }
  return assemble(std::move(vertices), std::move(faces), path);
}

TriangleMesh load_obj(const std::string& path) {
  LineReader r(path);
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  long face_ordinal = 0;
  std::string line;
  while (r.next(line)) {
    std::istringstream s(line);
    std::string tag;
    s >> tag;
    if (tag == "v") {
      const double x = take_double(s, r, "vertex coordinate");
      const double y = take_double(s, r, "vertex coordinate");
      const double z = take_double(s, r, "vertex coordinate");
      vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<long> poly;
      std::string ref;
      while (s >> ref) {
        // "f v", "f v/vt", "f v/vt/vn", "f v//vn": the vertex index leads.
        const std::string head = ref.substr(0, ref.find('/'));
        long idx = 0;
        try {
          idx = std::stol(head);
        } catch (const std::exception&) {
          r.fail("bad face reference '" + ref + "'");
        }
        // OBJ indices are 1-based; negatives count back from the end.
        if (idx < 0)
          idx += static_cast<long>(vertices.size());
        else
          idx -= 1;
        poly.push_back(idx);
      }
      if (poly.size() < 3) r.fail("face " + std::to_string(face_ordinal) + ": fewer than 3 vertices");
      append_fan(faces, poly, static_cast<long>(vertices.size()), face_ordinal, r);
      ++face_ordinal;
    }
  }
  if (vertices.empty()) throw EmptyMesh(path + ": no vertices");
  return assemble(std::move(vertices), std::move(faces), path);
}

TriangleMesh load_mesh(const std::string& path) {
  const auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == "off") return load_off(path);
  if (ext == "obj") return load_obj(path);
  throw MeshLoadError(path + ": unsupported mesh format '" + ext + "'");
}

void save_off(const std::string& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "OFF\n" << mesh.vertex_count() << " " << mesh.face_count() << " 0\n";
  char buf[96];
  for (Eigen::Index i = 0; i < mesh.vertex_count(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", mesh.vertices(i, 0),
                  mesh.vertices(i, 1), mesh.vertices(i, 2));
    out << buf;
  }
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f)
    out << "3 " << mesh.faces(f, 0) << " " << mesh.faces(f, 1) << " " << mesh.faces(f, 2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

double face_area(const TriangleMesh& mesh, Eigen::Index face) {
  const Vec3 a = mesh.vertices.row(mesh.faces(face, 0));
  const Vec3 b = mesh.vertices.row(mesh.faces(face, 1));
  const Vec3 c = mesh.vertices.row(mesh.faces(face, 2));
  return 0.5 * (b - a).cross(c - a).norm();
}

Vec3 face_normal(const TriangleMesh& mesh, Eigen::Index face) {
  const Vec3 a = mesh.vertices.row(mesh.faces(face, 0));
  const Vec3 b = mesh.vertices.row(mesh.faces(face, 1));
  const Vec3 c = mesh.vertices.row(mesh.faces(face, 2));
  const Vec3 n = (b - a).cross(c - a);
  const double len = n.norm();
  if (len <= 0.0) return Vec3::UnitZ();
  return n / len;
}

double surface_area(const TriangleMesh& mesh) {
  double total = 0.0;
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) total += face_area(mesh, f);
  return total;
}

TriangleMesh drop_degenerate_faces(const TriangleMesh& mesh, double eps) {
  TriangleMesh out;
  out.vertices = mesh.vertices;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f)
    if (face_area(mesh, f) > eps) keep.push_back(f);
  out.faces.resize(static_cast<Eigen::Index>(keep.size()), 3);
  for (std::size_t i = 0; i < keep.size(); ++i)
    out.faces.row(static_cast<Eigen::Index>(i)) = mesh.faces.row(keep[i]);
  return out;
}

TriangleMesh apply_transform(const RigidTransform& t, const TriangleMesh& mesh) {
  TriangleMesh out;
  out.vertices = apply_transform(t, mesh.vertices);
  out.faces = mesh.faces;
  return out;
}

std::pair<TriangleMesh, NormalizeRecord> normalize_unit_cube(const TriangleMesh& mesh) {
  const NormalizeRecord record = unit_cube_record(mesh.vertices);
  TriangleMesh out;
  out.vertices = apply_record(record, mesh.vertices);
  out.faces = mesh.faces;
  return {out, record};
}

PointCloud sample_surface(const TriangleMesh& mesh, Eigen::Index m, std::uint64_t seed,
                          bool with_normals) {
  if (mesh.empty()) throw EmptyMesh("sample_surface: empty mesh");
  if (m < 1) throw DegenerateInput("sample_surface: m must be >= 1");

  std::vector<double> cumulative(static_cast<std::size_t>(mesh.face_count()));
  double total = 0.0;
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    total += face_area(mesh, f);
    cumulative[static_cast<std::size_t>(f)] = total;
  }
  if (total <= 0.0) throw EmptyMesh("sample_surface: zero surface area");

  Rng rng(seed);
  PointCloud out;
  out.points.resize(m, 3);
  if (with_normals) out.normals.resize(m, 3);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double r = rng.uniform01() * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
    const auto f = static_cast<Eigen::Index>(
        std::min<std::ptrdiff_t>(it - cumulative.begin(), mesh.face_count() - 1));
    double u = rng.uniform01();
    double v = rng.uniform01();
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    const Vec3 a = mesh.vertices.row(mesh.faces(f, 0));
    const Vec3 b = mesh.vertices.row(mesh.faces(f, 1));
    const Vec3 c = mesh.vertices.row(mesh.faces(f, 2));
    out.points.row(i) = (a + u * (b - a) + v * (c - a)).transpose();
    if (with_normals) out.normals.row(i) = face_normal(mesh, f).transpose();
  }
  return out;
}

TriangleMesh merge_meshes(const std::vector<TriangleMesh>& parts) {
  Eigen::Index nv = 0, nf = 0;
  for (const auto& p : parts) {
    nv += p.vertex_count();
    nf += p.face_count();
  }
  TriangleMesh out;
  out.vertices.resize(nv, 3);
  out.faces.resize(nf, 3);
  Eigen::Index voff = 0, foff = 0;
  for (const auto& p : parts) {
    out.vertices.middleRows(voff, p.vertex_count()) = p.vertices;
    out.faces.middleRows(foff, p.face_count()) = p.faces.array() + static_cast<int>(voff);
    voff += p.vertex_count();
    foff += p.face_count();
  }
  return out;
}

namespace {

struct MeshBuilder {
  std::vector<Vec3> v;
  std::vector<std::array<int, 3>> f;

  int vertex(double x, double y, double z) {
    v.emplace_back(x, y, z);
    return static_cast<int>(v.size()) - 1;
  }
  void face(int a, int b, int c) { f.push_back({a, b, c}); }

  TriangleMesh take() {
    TriangleMesh mesh;
    mesh.vertices.resize(static_cast<Eigen::Index>(v.size()), 3);
    for (std::size_t i = 0; i < v.size(); ++i)
      mesh.vertices.row(static_cast<Eigen::Index>(i)) = v[i].transpose();
    mesh.faces.resize(static_cast<Eigen::Index>(f.size()), 3);
    for (std::size_t i = 0; i < f.size(); ++i)
      for (int c = 0; c < 3; ++c)
        mesh.faces(static_cast<Eigen::Index>(i), c) = f[i][c];
    return mesh;
  }
};

}  // namespace

TriangleMesh make_box(const Vec3& half_extents) {
  const double x = half_extents[0], y = half_extents[1], z = half_extents[2];
  MeshBuilder b;
  for (int i = 0; i < 8; ++i)
    b.vertex(i & 1 ? x : -x, i & 2 ? y : -y, i & 4 ? z : -z);
  // Windings give outward normals.
  b.face(0, 2, 3); b.face(0, 3, 1);  // -z
  b.face(4, 5, 7); b.face(4, 7, 6);  // +z
  b.face(0, 1, 5); b.face(0, 5, 4);  // -y
  b.face(2, 6, 7); b.face(2, 7, 3);  // +y
  b.face(0, 4, 6); b.face(0, 6, 2);  // -x
  b.face(1, 3, 7); b.face(1, 7, 5);  // +x
  return b.take();
}

TriangleMesh make_cylinder(double radius, double half_height, int segments) {
  MeshBuilder b;
  for (int i = 0; i < segments; ++i) {
    const double t = 2.0 * std::numbers::pi * i / segments;
    b.vertex(radius * std::cos(t), radius * std::sin(t), -half_height);
    b.vertex(radius * std::cos(t), radius * std::sin(t), half_height);
  }
  const int cb = b.vertex(0, 0, -half_height);
  const int ct = b.vertex(0, 0, half_height);
  for (int i = 0; i < segments; ++i) {
    const int n = (i + 1) % segments;
    const int bi = 2 * i, ti = 2 * i + 1, bn = 2 * n, tn = 2 * n + 1;
    b.face(bi, bn, tn);
    b.face(bi, tn, ti);
    b.face(cb, bn, bi);
    b.face(ct, ti, tn);
  }
  return b.take();
}

TriangleMesh make_cone(double radius, double height, int segments) {
  MeshBuilder b;
  for (int i = 0; i < segments; ++i) {
    const double t = 2.0 * std::numbers::pi * i / segments;
    b.vertex(radius * std::cos(t), radius * std::sin(t), -height / 2.0);
  }
  const int c = b.vertex(0, 0, -height / 2.0);
  const int apex = b.vertex(0, 0, height / 2.0);
  for (int i = 0; i < segments; ++i) {
    const int n = (i + 1) % segments;
    b.face(i, n, apex);
    b.face(c, n, i);
  }
  return b.take();
}

TriangleMesh make_torus(double major_radius, double minor_radius, int major_segments,
                        int minor_segments) {
  MeshBuilder b;
  for (int i = 0; i < major_segments; ++i) {
    const double u = 2.0 * std::numbers::pi * i / major_segments;
    for (int j = 0; j < minor_segments; ++j) {
      const double v = 2.0 * std::numbers::pi * j / minor_segments;
      const double ring = major_radius + minor_radius * std::cos(v);
      b.vertex(ring * std::cos(u), ring * std::sin(u), minor_radius * std::sin(v));
    }
  }
  const auto idx = [&](int i, int j) {
    return (i % major_segments) * minor_segments + (j % minor_segments);
  };
  for (int i = 0; i < major_segments; ++i)
    for (int j = 0; j < minor_segments; ++j) {
      b.face(idx(i, j), idx(i + 1, j), idx(i + 1, j + 1));
      b.face(idx(i, j), idx(i + 1, j + 1), idx(i, j + 1));
    }
  return b.take();
}

TriangleMesh make_uv_sphere(double radius, int rings, int segments) {
  MeshBuilder b;
  const int top = b.vertex(0, 0, radius);
  const int bottom = b.vertex(0, 0, -radius);
  const auto ring_start = [&](int k) { return 2 + (k - 1) * segments; };
  for (int k = 1; k < rings; ++k) {
    const double phi = std::numbers::pi * k / rings;
    for (int j = 0; j < segments; ++j) {
      const double theta = 2.0 * std::numbers::pi * j / segments;
      b.vertex(radius * std::sin(phi) * std::cos(theta),
               radius * std::sin(phi) * std::sin(theta), radius * std::cos(phi));
    }
  }
  for (int j = 0; j < segments; ++j) {
    const int jn = (j + 1) % segments;
    b.face(top, ring_start(1) + j, ring_start(1) + jn);
    b.face(bottom, ring_start(rings - 1) + jn, ring_start(rings - 1) + j);
  }
  for (int k = 1; k + 1 < rings; ++k)
    for (int j = 0; j < segments; ++j) {
      const int jn = (j + 1) % segments;
      const int u0 = ring_start(k) + j, u1 = ring_start(k) + jn;
      const int l0 = ring_start(k + 1) + j, l1 = ring_start(k + 1) + jn;
      b.face(u0, l0, l1);
      b.face(u0, l1, u1);
    }
  return b.take();
}

TriangleMesh make_ground_plane(double half_side, double z) {
  MeshBuilder b;
  const int v0 = b.vertex(-half_side, -half_side, z);
  const int v1 = b.vertex(half_side, -half_side, z);
  const int v2 = b.vertex(half_side, half_side, z);
  const int v3 = b.vertex(-half_side, half_side, z);
  b.face(v0, v1, v2);
  b.face(v0, v2, v3);
  return b.take();
}

TriangleMesh make_box_room(double side) {
  return make_box(Vec3::Constant(side / 2.0));
}

namespace {

constexpr std::uint64_t kCatalogSeed = 0x0cc104c7u;
constexpr int kVariantsPerCategory = 6;
const std::array<const char*, 10> kCategories = {
    "plank", "pole", "plate", "cross", "frame",
    "lamp",  "tee",  "ring",  "wedge", "ladder"};

RigidTransform at(double x, double y, double z) {
  RigidTransform t = RigidTransform::Identity();
  t.translation() = Vec3(x, y, z);
  return t;
}

// The catalog shapes keep solid material away from the standard viewing ring
// (distance 0.65, elevation 15..75 deg) so the camera never starts inside the
// object: bulk sits either below z ~ 0.14 or beyond xy radius ~ 0.66 after
// normalization.
TriangleMesh build_shape(int category, Rng& rng) {
  switch (category) {
    case 0:  // plank
      return make_box({1.0, rng.uniform(0.15, 0.3), rng.uniform(0.06, 0.12)});
    case 1: {  // pole
      const double r = rng.uniform(0.07, 0.12);
      if (rng.uniform01() < 0.5) return make_cylinder(r, 1.0, 24);
      return make_box({r, r, 1.0});
    }
    case 2:  // plate
      return make_box({1.0, rng.uniform(0.55, 0.95), rng.uniform(0.04, 0.1)});
    case 3: {  // cross
      const double w = rng.uniform(0.08, 0.15);
      const double t = rng.uniform(0.05, 0.1);
      return merge_meshes({make_box({1.0, w, t}), make_box({w, 1.0, t})});
    }
    case 4: {  // frame
      const double w = rng.uniform(0.08, 0.16);
      const double t = rng.uniform(0.05, 0.1);
      const TriangleMesh xbar = make_box({1.0, w, t});
      const TriangleMesh ybar = make_box({w, 1.0 - 2.0 * w, t});
      return merge_meshes({apply_transform(at(0, 1.0 - w, 0), xbar),
                           apply_transform(at(0, w - 1.0, 0), xbar),
                           apply_transform(at(1.0 - w, 0, 0), ybar),
                           apply_transform(at(w - 1.0, 0, 0), ybar)});
    }
    case 5: {  // lamp: base slab, thin mast, high cap
      const double bx = rng.uniform(0.7, 1.0);
      const double by = rng.uniform(0.7, 1.0);
      const double bt = rng.uniform(0.05, 0.1);
      const double mast_r = rng.uniform(0.04, 0.07);
      const double mast_h = rng.uniform(1.0, 1.3);
      const double cap_r = rng.uniform(0.2, 0.3);
      return merge_meshes(
          {apply_transform(at(0, 0, -bt), make_box({bx, by, bt})),
           apply_transform(at(0, 0, mast_h / 2.0), make_cylinder(mast_r, mast_h / 2.0, 16)),
           apply_transform(at(0, 0, mast_h + 0.04), make_cylinder(cap_r, 0.04, 20))});
    }
    case 6: {  // tee
      const double w = rng.uniform(0.08, 0.15);
      const double t = rng.uniform(0.05, 0.1);
      const double leg = rng.uniform(0.5, 0.9);
      return merge_meshes(
          {make_box({1.0, w, t}), apply_transform(at(0, leg, 0), make_box({w, leg, t}))});
    }
    case 7:  // ring
      return make_torus(rng.uniform(0.78, 0.95), rng.uniform(0.06, 0.11), 32, 12);
    case 8: {  // wedge: cone lying on its side, axis along x
      const double r = rng.uniform(0.25, 0.4);
      RigidTransform lie = RigidTransform::Identity();
      lie.linear() = Eigen::AngleAxisd(std::numbers::pi / 2.0, Vec3::UnitY()).toRotationMatrix();
      return apply_transform(lie, make_cone(r, 2.0, 24));
    }
    default: {  // ladder
      const double w = rng.uniform(0.3, 0.5);
      const double t = rng.uniform(0.04, 0.08);
      const double rail = rng.uniform(0.05, 0.08);
      std::vector<TriangleMesh> parts = {
          apply_transform(at(0, w, 0), make_box({1.0, rail, t})),
          apply_transform(at(0, -w, 0), make_box({1.0, rail, t}))};
      const int rungs = 4 + static_cast<int>(rng.below(3));
      for (int i = 0; i < rungs; ++i) {
        const double x = -1.0 + 2.0 * (i + 0.5) / rungs;
        parts.push_back(apply_transform(at(x, 0, 0), make_box({rail, w, t})));
      }
      return merge_meshes(parts);
    }
  }
}

}  // namespace

int shape_catalog_size() {
  return static_cast<int>(kCategories.size()) * kVariantsPerCategory;
}

std::string shape_catalog_label(int index) {
  if (index < 0 || index >= shape_catalog_size())
    throw DegenerateInput("shape catalog: index out of range");
  const int category = index % static_cast<int>(kCategories.size());
  const int variant = index / static_cast<int>(kCategories.size());
  return std::string(kCategories[static_cast<std::size_t>(category)]) + "_" +
         std::to_string(variant);
}

TriangleMesh make_catalog_shape(int index) {
  if (index < 0 || index >= shape_catalog_size())
    throw DegenerateInput("shape catalog: index out of range");
  Rng rng(mix_seed(kCatalogSeed, static_cast<std::uint64_t>(index)));
  const int category = index % static_cast<int>(kCategories.size());
  return normalize_unit_cube(build_shape(category, rng)).first;
}

}  // namespace occlureg
