#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "occlureg/geometry.hpp"
#include "occlureg/mesh.hpp"
#include "occlureg/types.hpp"

namespace occlureg {

/// Row-major camera-frame z grid; 0 marks a pixel with no surface hit.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<float> depth;

  float at(int u, int v) const { return depth[static_cast<std::size_t>(v) * width + u]; }
  float& at(int u, int v) { return depth[static_cast<std::size_t>(v) * width + u]; }
};

/// Row-major binary grid, 1 = object pixel. Dimensions match the paired depth.
struct MaskImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> mask;

  std::uint8_t at(int u, int v) const {
    return mask[static_cast<std::size_t>(v) * width + u];
  }
  std::uint8_t& at(int u, int v) {
    return mask[static_cast<std::size_t>(v) * width + u];
  }
};

/// One mesh placed in the world; only object-flagged instances contribute to
/// the mask.
struct SceneInstance {
  TriangleMesh mesh;
  RigidTransform pose = RigidTransform::Identity();
  bool is_object = false;
};

enum class Background { none, ground_plane, box_room };

struct ComposedScene {
  std::vector<SceneInstance> instances;
  CameraPose camera = CameraPose::Identity();  // world -> camera
  CameraIntrinsics intrinsics;
  RigidTransform gt_pose = RigidTransform::Identity();  // object -> camera
  std::string object_id;
};

struct SceneSample {
  DepthMap depth;
  MaskImage mask;
  CameraIntrinsics intrinsics;
  RigidTransform gt_pose = RigidTransform::Identity();
  std::string object_id;
  /// Mask-on fraction of the valid-depth pixels.
  double inlier_rate = 0.0;
};

/// Casts one ray per pixel center against every instance; nearest positive
/// hit sets the depth (camera-frame z) and the mask flag of its mesh.
std::pair<DepthMap, MaskImage> render_depth(const std::vector<SceneInstance>& scene,
                                            const CameraPose& camera,
                                            const CameraIntrinsics& intr);

/// Camera-frame points of the masked valid pixels, in row-major pixel order.
PointCloud backproject(const DepthMap& depth, const MaskImage& mask,
                       const CameraIntrinsics& intr);

/// Normalizes the object into [-1,1]^3 at the origin, adds the requested
/// background geometry, and samples a camera view; gt_pose is the resulting
/// object-to-camera transform. Views from which no probe ray reaches the
/// object are rejected and redrawn (deterministically per seed); throws
/// DegenerateInput when 64 draws in a row stay blind.
ComposedScene compose_scene(const TriangleMesh& object, Background background,
                            std::uint64_t seed, const std::string& object_id = "");

SceneSample render_scene(const ComposedScene& scene);

enum class MaskPerturbKind { erode3, dilate3, boundary_noise };

struct MaskPerturb {
  MaskPerturbKind kind = MaskPerturbKind::erode3;
  double p = 0.0;  // flip probability, boundary_noise only
};

/// erode3/dilate3: one pass with the full 3x3 structuring element, pixels
/// outside the image counting as 0. boundary_noise: flips each pixel that has
/// a differing 4-neighbor with probability p, drawing in row-major order.
MaskImage perturb_mask(const MaskImage& mask, const MaskPerturb& mode,
                       std::uint64_t seed);

}  // namespace occlureg
