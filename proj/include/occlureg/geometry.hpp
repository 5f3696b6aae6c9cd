#pragma once

#include <Eigen/Geometry>

#include "occlureg/random.hpp"
#include "occlureg/types.hpp"

namespace occlureg {

/// Rigid motion (proper rotation + translation). Eigen's isometry transform
/// is used directly: composition is `a * b`, inversion is `t.inverse()`.
using RigidTransform = Eigen::Isometry3d;

/// Extrinsic transform mapping world coordinates to camera coordinates.
/// Convention: right handed, camera looks along +z, image x right, y down.
using CameraPose = RigidTransform;

bool is_rotation(const Mat3& r, double tol = 1e-9);
bool is_rigid(const RigidTransform& t, double tol = 1e-9);

/// Applies R*p + t to every point; normals, when present, rotate only.
PointCloud apply_transform(const RigidTransform& t, const PointCloud& cloud);
Points apply_transform(const RigidTransform& t, const Points& points);

/// Weighted Procrustes solve: the rigid transform minimizing
/// sum_i w_i * |R*src_i + t - tgt_i|^2. The rotation is forced proper by
/// flipping the singular direction with the smallest singular value when
/// det(V*U^T) < 0.
///
/// Throws DegenerateInput when fewer than 3 points carry positive weight or
/// the positively weighted source points are collinear.
RigidTransform kabsch(const Points& src, const Points& tgt, const VecX& weights);
RigidTransform kabsch(const Points& src, const Points& tgt);

/// Relative rotation angle in [0, pi]: arccos((trace(a^T b) - 1) / 2) with
/// the argument clamped to [-1, 1].
double rotation_error(const Mat3& r_hat, const Mat3& r_gt);
double rotation_error(const RigidTransform& a, const RigidTransform& b);

/// Squared Euclidean norm |t_hat - t_gt|^2.
double translation_error(const Vec3& t_hat, const Vec3& t_gt);
/// Unsquared companion of translation_error.
double translation_distance(const Vec3& t_hat, const Vec3& t_gt);

struct CameraIntrinsics {
  double fx = 570.0;
  double fy = 570.0;
  double cx = 319.5;
  double cy = 239.5;
  int width = 640;
  int height = 480;

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && width > 0 && height > 0 && cx >= 0.0 &&
           cx < width && cy >= 0.0 && cy < height;
  }
};

/// Pinhole projection of a camera-frame point (z > 0) to pixel coordinates.
Eigen::Vector2d project(const CameraIntrinsics& intr, const Vec3& p_cam);

/// Camera-frame point for pixel (u, v) at depth d:
/// ((u - cx) * d / fx, (v - cy) * d / fy, d).
Vec3 backproject_pixel(const CameraIntrinsics& intr, double u, double v, double depth);

/// World-to-camera pose with the camera at `eye` looking toward `center`.
/// Throws DegenerateInput when eye == center or up is parallel to the view
/// direction.
CameraPose look_at(const Vec3& eye, const Vec3& center, const Vec3& up);

struct ViewRanges {
  double elevation_lo_deg = 15.0;
  double elevation_hi_deg = 75.0;
  double azimuth_lo_deg = 0.0;
  double azimuth_hi_deg = 89.0;
  double distance = 0.65;
};

/// Samples elevation and azimuth independently and uniformly (degrees), puts
/// the eye on the sphere of radius `distance`, and looks at the origin with
/// +z as up. Elevation is measured from the xy-plane toward +z.
CameraPose sample_view(const ViewRanges& ranges, Rng& rng);
CameraPose sample_view(const ViewRanges& ranges, std::uint64_t seed);

/// Eye position for given spherical angles (degrees) and distance.
Vec3 view_eye(double elevation_deg, double azimuth_deg, double distance);

}  // namespace occlureg
