#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "occlureg/geometry.hpp"
#include "occlureg/registration.hpp"
#include "occlureg/render.hpp"
#include "occlureg/types.hpp"

namespace occlureg {

// Point clouds: ASCII PLY (xyz + optional normals; other properties are
// skipped) and plain XYZ rows. load_cloud dispatches on the extension.
void save_ply(const std::string& path, const PointCloud& cloud);
PointCloud load_ply(const std::string& path);
void save_xyz(const std::string& path, const PointCloud& cloud);
PointCloud load_xyz(const std::string& path);
PointCloud load_cloud(const std::string& path);

// Dense matrices as a one-line JSON header {"schema":1,"rows":R,"dim":D}
// followed by row-major little-endian floats: 32-bit for descriptors, 64-bit
// for score maps, plans, and GT matrices.
void save_matrix_f32(const std::string& path, const MatX& mat);
MatX load_matrix_f32(const std::string& path);
void save_matrix_f64(const std::string& path, const MatX& mat);
MatX load_matrix_f64(const std::string& path);

// Binary PBM (P4) masks, 1 = object; the loader also accepts ASCII P1.
void save_pbm(const std::string& path, const MaskImage& mask);
MaskImage load_pbm(const std::string& path);

void save_intrinsics(const std::string& path, const CameraIntrinsics& intr);
CameraIntrinsics load_intrinsics(const std::string& path);

/// Everything a depth grid needs to be self-describing; gt_pose and
/// inlier_rate are present only for rendered ground-truth samples.
struct DepthSidecar {
  int width = 0;
  int height = 0;
  CameraIntrinsics intrinsics;
  bool has_gt_pose = false;
  RigidTransform gt_pose = RigidTransform::Identity();
  std::string object_id;
  bool has_inlier_rate = false;
  double inlier_rate = 0.0;
};

void save_depth_raw(const std::string& path, const DepthMap& depth);
DepthMap load_depth_raw(const std::string& path, int width, int height);
void save_depth_sidecar(const std::string& path, const DepthSidecar& sidecar);
DepthSidecar load_depth_sidecar(const std::string& path);

/// Writes stem.raw, stem.json, stem.pbm.
void save_scene_sample(const std::string& stem, const SceneSample& sample);
SceneSample load_scene_sample(const std::string& stem);

/// Pose as a row-major 4x4 array. Correspondences and wall time are opt-in;
/// timings vary run to run and would break byte-level reproducibility.
void save_registration_result(const std::string& path, const RegistrationResult& result,
                              bool include_correspondences = false,
                              bool include_timings = false);

struct GradientCheckEntry {
  int entry;  // flat index into the score matrix
  double analytic;
  double finite_diff;
  double rel_err;
};

/// CSV with header "entry,analytic,finite_diff,rel_err".
void write_gradient_check_csv(const std::string& path,
                              const std::vector<GradientCheckEntry>& entries);

/// Shortest round-trip decimal form; the single formatter behind every
/// numeric field written by this module, so outputs are byte-stable.
std::string format_double(double value);

}  // namespace occlureg
