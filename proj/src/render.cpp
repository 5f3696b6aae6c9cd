#include "occlureg/render.hpp"

#include <limits>

#include "occlureg/bvh.hpp"
#include "occlureg/parallel.hpp"
#include "occlureg/random.hpp"

namespace occlureg {

std::pair<DepthMap, MaskImage> render_depth(const std::vector<SceneInstance>& scene,
                                            const CameraPose& camera,
                                            const CameraIntrinsics& intr) {
  if (scene.empty()) throw DegenerateInput("render_depth: empty scene");
  if (!intr.valid()) throw DegenerateInput("render_depth: invalid intrinsics");
  if (!is_rigid(camera)) throw DegenerateInput("render_depth: camera pose not rigid");

  // All instances merged into camera frame; per-face flags survive the merge
  // because merge_meshes concatenates faces in order.
  std::vector<TriangleMesh> parts;
  std::vector<std::uint8_t> face_is_object;
  parts.reserve(scene.size());
  for (const auto& inst : scene) {
    parts.push_back(apply_transform(camera * inst.pose, inst.mesh));
    face_is_object.insert(face_is_object.end(),
                          static_cast<std::size_t>(inst.mesh.face_count()),
                          inst.is_object ? 1 : 0);
  }
  TriangleMesh merged = merge_meshes(parts);
  Bvh bvh(merged);

  DepthMap depth{intr.width, intr.height,
                 std::vector<float>(static_cast<std::size_t>(intr.width) * intr.height, 0.0f)};
  MaskImage mask{intr.width, intr.height,
                 std::vector<std::uint8_t>(static_cast<std::size_t>(intr.width) * intr.height, 0)};

  parallel_for(intr.height, [&](long row_begin, long row_end) {
    for (long v = row_begin; v < row_end; ++v) {
      for (int u = 0; u < intr.width; ++u) {
        // Direction with unit z, so the ray parameter is the camera-frame z.
        const Vec3 dir((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
        RayHit hit;
        if (bvh.raycast(Vec3::Zero(), dir, &hit)) {
          depth.at(u, static_cast<int>(v)) = static_cast<float>(hit.t);
          mask.at(u, static_cast<int>(v)) =
              face_is_object[static_cast<std::size_t>(hit.face)];
        }
      }
    }
  });
  return {std::move(depth), std::move(mask)};
}

PointCloud backproject(const DepthMap& depth, const MaskImage& mask,
                       const CameraIntrinsics& intr) {
  if (depth.width != mask.width || depth.height != mask.height)
    throw DimensionMismatch("backproject: depth and mask dimensions differ");

  std::vector<int> pixels;
  for (int v = 0; v < depth.height; ++v)
    for (int u = 0; u < depth.width; ++u)
      if (mask.at(u, v) && depth.at(u, v) > 0.0f)
        pixels.push_back(v * depth.width + u);

  PointCloud cloud;
  cloud.points.resize(static_cast<Eigen::Index>(pixels.size()), 3);
  for (std::size_t k = 0; k < pixels.size(); ++k) {
    const int u = pixels[k] % depth.width;
    const int v = pixels[k] / depth.width;
    cloud.points.row(static_cast<Eigen::Index>(k)) =
        backproject_pixel(intr, u, v, depth.at(u, v));
  }
  return cloud;
}

ComposedScene compose_scene(const TriangleMesh& object, Background background,
                            std::uint64_t seed, const std::string& object_id) {
  ComposedScene scene;
  scene.object_id = object_id;

  auto [normalized, record] = normalize_unit_cube(object);
  scene.instances.push_back({normalized, RigidTransform::Identity(), true});

  switch (background) {
    case Background::none:
      break;
    case Background::ground_plane:
      scene.instances.push_back(
          {make_ground_plane(2.0, normalized.vertices.col(2).minCoeff()),
           RigidTransform::Identity(), false});
      break;
    case Background::box_room:
      scene.instances.push_back(
          {make_box_room(4.0), RigidTransform::Identity(), false});
      break;
  }

  // Hollow or rim-heavy shapes can dodge the narrow frustum entirely (the
  // camera sits inside the unit cube), so views are rejection-sampled until a
  // coarse probe grid sees the object.
  const Bvh probe(normalized);
  Rng rng(seed);
  for (int attempt = 0; attempt < 64; ++attempt) {
    scene.camera = sample_view(ViewRanges{}, rng);
    const RigidTransform to_world = scene.camera.inverse();
    const Vec3 eye = to_world.translation();
    bool seen = false;
    for (int v = 0; v < scene.intrinsics.height && !seen; v += 16)
      for (int u = 0; u < scene.intrinsics.width && !seen; u += 16) {
        const Vec3 dir((u - scene.intrinsics.cx) / scene.intrinsics.fx,
                       (v - scene.intrinsics.cy) / scene.intrinsics.fy, 1.0);
        seen = probe.raycast(eye, to_world.linear() * dir, nullptr);
      }
    if (seen) {
      // The object sits at the world origin, so its camera-frame pose is the
      // camera transform itself.
      scene.gt_pose = scene.camera;
      return scene;
    }
  }
  throw DegenerateInput("compose_scene: object invisible from every sampled view");
}

SceneSample render_scene(const ComposedScene& scene) {
  SceneSample sample;
  std::tie(sample.depth, sample.mask) =
      render_depth(scene.instances, scene.camera, scene.intrinsics);
  sample.intrinsics = scene.intrinsics;
  sample.gt_pose = scene.gt_pose;
  sample.object_id = scene.object_id;

  long valid = 0, inlier = 0;
  for (std::size_t k = 0; k < sample.depth.depth.size(); ++k) {
    if (sample.depth.depth[k] > 0.0f) {
      ++valid;
      if (sample.mask.mask[k]) ++inlier;
    }
  }
  sample.inlier_rate = valid > 0 ? static_cast<double>(inlier) / valid : 0.0;
  return sample;
}

namespace {

MaskImage morphology(const MaskImage& mask, bool erode) {
  MaskImage out = mask;
  for (int v = 0; v < mask.height; ++v) {
    for (int u = 0; u < mask.width; ++u) {
      std::uint8_t acc = erode ? 1 : 0;
      for (int dv = -1; dv <= 1 && (erode ? acc : !acc); ++dv) {
        for (int du = -1; du <= 1; ++du) {
          const int uu = u + du, vv = v + dv;
          const std::uint8_t px =
              (uu >= 0 && uu < mask.width && vv >= 0 && vv < mask.height)
                  ? mask.at(uu, vv)
                  : 0;
          if (erode)
            acc = static_cast<std::uint8_t>(acc & (px ? 1 : 0));
          else
            acc = static_cast<std::uint8_t>(acc | (px ? 1 : 0));
        }
      }
      out.at(u, v) = acc;
    }
  }
  return out;
}

bool on_boundary(const MaskImage& mask, int u, int v) {
  const std::uint8_t c = mask.at(u, v);
  const int du[] = {1, -1, 0, 0};
  const int dv[] = {0, 0, 1, -1};
  for (int k = 0; k < 4; ++k) {
    const int uu = u + du[k], vv = v + dv[k];
    if (uu < 0 || uu >= mask.width || vv < 0 || vv >= mask.height) continue;
    if (mask.at(uu, vv) != c) return true;
  }
  return false;
}

}  // namespace

MaskImage perturb_mask(const MaskImage& mask, const MaskPerturb& mode,
                       std::uint64_t seed) {
  switch (mode.kind) {
    case MaskPerturbKind::erode3:
      return morphology(mask, true);
    case MaskPerturbKind::dilate3:
      return morphology(mask, false);
    case MaskPerturbKind::boundary_noise:
      break;
  }
  if (mode.p < 0.0 || mode.p > 1.0)
    throw DegenerateInput("perturb_mask: flip probability outside [0,1]");
  MaskImage out = mask;
  Rng rng(seed);
  for (int v = 0; v < mask.height; ++v)
    for (int u = 0; u < mask.width; ++u)
      if (on_boundary(mask, u, v) && rng.uniform01() < mode.p)
        out.at(u, v) = static_cast<std::uint8_t>(1 - mask.at(u, v));
  return out;
}

}  // namespace occlureg
