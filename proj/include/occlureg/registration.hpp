#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "occlureg/descriptors.hpp"
#include "occlureg/geometry.hpp"
#include "occlureg/matching.hpp"
#include "occlureg/types.hpp"

namespace occlureg {

enum class Matcher { softmax, ot };

struct PipelineParams {
  int m_source = 1024;
  int n_target = 768;
  double voxel = 0.05 * std::numbers::sqrt2 / 2.0;
  double lambda = 0.5;
  int sinkhorn_k = 50;
  double alpha = 0.01;
  double gt_threshold = 0.05;
  double crop_radius = 1.2;
  Matcher matcher = Matcher::ot;
  /// Optional local refinement after the one-shot pose. Not part of the
  /// method; exposed for comparison only.
  bool refine_icp = false;
  std::uint64_t seed = 0;

  /// Throws ConfigError unless all reals are positive and counts are >= 3.
  void validate() const;
};

struct RegistrationResult {
  RigidTransform pose = RigidTransform::Identity();
  std::vector<Correspondence> correspondences;
  std::optional<double> rotation_error;     // radians, filled when GT known
  std::optional<double> translation_error;  // squared units, same condition
  std::string method;
  double wall_time = 0.0;  // seconds
  std::map<std::string, double> diagnostics;
};

/// Produces one descriptor matrix per cloud; both with the same width.
using DescriptorPairFn =
    std::function<std::pair<MatX, MatX>(const PointCloud&, const PointCloud&)>;

/// FPFH on both clouds. Missing normals are estimated with k neighbors,
/// oriented outward from the origin for the source (a centered model) and
/// toward the origin for the target (a camera-frame depth cloud).
DescriptorPairFn make_fpfh_descriptor(const FpfhParams& params = {},
                                      int normals_k = 16);

/// Wraps oracle_descriptors for matcher-isolation experiments.
DescriptorPairFn make_oracle_descriptor(const RigidTransform& gt, int dim,
                                        double sigma, std::uint64_t seed,
                                        double inlier_threshold = 0.05);

/// Horizon handed to the oracle descriptor when it stands in for a learned
/// feature. A subsampled source covers its surface only to a few voxels, so
/// on-surface targets can sit beyond gt_threshold from every source point;
/// four voxels spans that gap while staying well under background depth
/// offsets, which keeps genuine outliers unmatched.
inline double oracle_horizon(const PipelineParams& params) {
  return params.gt_threshold > 4.0 * params.voxel ? params.gt_threshold
                                                  : 4.0 * params.voxel;
}

/// Voxel downsample followed by sampling to exactly n points. Deterministic
/// per seed; `with_replacement` reports whether the cloud was smaller than n.
PointCloud preprocess_cloud(const PointCloud& cloud, double voxel, Eigen::Index n,
                            std::uint64_t seed, bool* with_replacement = nullptr);

/// One-shot registration: preprocess both clouds, extract descriptors, build
/// the augmented score map, run the configured matcher, and solve a weighted
/// Procrustes problem on the surviving pairs. Correspondence indices refer to
/// the preprocessed clouds. Throws InsufficientCorrespondences when fewer
/// than 3 pairs survive.
RegistrationResult register_ot(const PointCloud& x, const PointCloud& y,
                               const DescriptorPairFn& descriptor,
                               const PipelineParams& params);

/// Point-to-point ICP seeded at `init`. Each target point picks its nearest
/// transformed source point; the pose is re-solved in full each iteration and
/// the loop stops when the pose delta drops below tol or after max_iter
/// rounds. Converges to whatever optimum the basin of `init` holds.
RegistrationResult register_icp(const PointCloud& x, const PointCloud& y,
                                const RigidTransform& init = RigidTransform::Identity(),
                                int max_iter = 50, double tol = 1e-8);

/// Hypothesize-and-verify over mutual descriptor nearest neighbors: sample 3
/// putative matches per iteration, solve, count matches within
/// inlier_threshold, keep the best, refine on its inliers. Deterministic per
/// seed. Throws InsufficientCorrespondences with fewer than 3 putatives.
RegistrationResult register_ransac(const PointCloud& x, const PointCloud& y,
                                   const DescriptorPairFn& descriptor, int iters,
                                   double inlier_threshold, std::uint64_t rng_seed);

}  // namespace occlureg
