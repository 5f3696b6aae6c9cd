#pragma once

#include <string>
#include <utility>
#include <vector>

#include "occlureg/cloud.hpp"
#include "occlureg/geometry.hpp"
#include "occlureg/types.hpp"

namespace occlureg {

using Faces = Eigen::Matrix<int, Eigen::Dynamic, 3>;

struct TriangleMesh {
  Points vertices;
  Faces faces;

  Eigen::Index vertex_count() const { return vertices.rows(); }
  Eigen::Index face_count() const { return faces.rows(); }
  bool empty() const { return faces.rows() == 0; }
};

/// Loads a mesh, picking the parser from the file extension (.off, .obj).
/// Polygons with more than 3 vertices triangulate as a fan around the first
/// vertex; zero-area faces are dropped after load.
TriangleMesh load_mesh(const std::string& path);
TriangleMesh load_off(const std::string& path);
TriangleMesh load_obj(const std::string& path);
void save_off(const std::string& path, const TriangleMesh& mesh);

double face_area(const TriangleMesh& mesh, Eigen::Index face);
/// Unit normal of the face plane with counter-clockwise winding.
Vec3 face_normal(const TriangleMesh& mesh, Eigen::Index face);
double surface_area(const TriangleMesh& mesh);

/// Drops faces whose area is <= eps; vertices are left untouched.
TriangleMesh drop_degenerate_faces(const TriangleMesh& mesh, double eps = 0.0);

TriangleMesh apply_transform(const RigidTransform& t, const TriangleMesh& mesh);

/// Isotropic rescale of the vertex set so the axis of largest extent spans
/// exactly [-1, 1]; same record convention as the point-cloud overload.
std::pair<TriangleMesh, NormalizeRecord> normalize_unit_cube(const TriangleMesh& mesh);

/// Area-uniform surface sampling: faces picked proportional to area,
/// barycentric coordinates uniform on the simplex, deterministic per seed.
/// With `with_normals` each sample carries its face normal.
PointCloud sample_surface(const TriangleMesh& mesh, Eigen::Index m, std::uint64_t seed,
                          bool with_normals = false);

TriangleMesh merge_meshes(const std::vector<TriangleMesh>& parts);

// Primitive builders. All are centered at the origin and axis aligned; the
// cylinder/cone axis is z.
TriangleMesh make_box(const Vec3& half_extents);
TriangleMesh make_cylinder(double radius, double half_height, int segments);
TriangleMesh make_cone(double radius, double height, int segments);
TriangleMesh make_torus(double major_radius, double minor_radius, int major_segments,
                        int minor_segments);
TriangleMesh make_uv_sphere(double radius, int rings, int segments);

/// Horizontal quad at the given height spanning [-half_side, half_side]^2.
TriangleMesh make_ground_plane(double half_side, double z);
/// Closed axis-aligned cube of the given side centered at the origin; rays
/// cast from inside hit its walls (the renderer does not cull back faces).
TriangleMesh make_box_room(double side);

/// Procedural stand-in for a mesh dataset: a fixed catalog of labeled shapes
/// (deterministic, parameter variation per index). Every shape is normalized
/// so its largest axis spans [-1, 1] and is slim enough that the standard
/// viewing ring (distance 0.65) stays outside the surface.
int shape_catalog_size();
std::string shape_catalog_label(int index);
TriangleMesh make_catalog_shape(int index);

}  // namespace occlureg
