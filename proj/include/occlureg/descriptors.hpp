#pragma once

#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

#include "occlureg/geometry.hpp"
#include "occlureg/kdtree.hpp"
#include "occlureg/types.hpp"

namespace occlureg {

// Descriptor matrices carry one P-dimensional row per point of the
// originating cloud.

struct FpfhParams {
  /// Neighborhood radius in scene units; 5 voxels at the default voxel size.
  double radius = 5.0 * 0.05 * std::numbers::sqrt2 / 2.0;
  int bins_per_feature = 11;  // P = 3 * bins_per_feature
};

/// Simplified point feature histograms: per point, the Darboux-frame angle
/// triple (alpha, phi, theta) against each radius neighbor, binned into three
/// concatenated histograms, each block normalized to sum 1. Points without
/// neighbors get uniform blocks and a low-confidence flag. Coincident
/// neighbors are skipped with a count decrement; a neighbor direction
/// parallel to the source normal falls back to an arbitrary orthogonal frame
/// axis (alpha = 0, phi extreme, theta = 0).
MatX spfh(const PointCloud& cloud, const KdTree& index, const FpfhParams& params,
          std::vector<std::uint8_t>* low_confidence = nullptr);

/// FPFH(p) = SPFH(p) + (1/K) sum_k SPFH(p_k) / |p - p_k| over the K radius
/// neighbors, each histogram block normalized to sum 1.
MatX fpfh(const PointCloud& cloud, const KdTree& index, const FpfhParams& params);
MatX fpfh(const PointCloud& cloud, const FpfhParams& params = {});

/// Synthetic descriptors with controllable quality, for isolating the
/// matcher from feature extraction: every x_i gets a random unit vector;
/// every y_j within `inlier_threshold` of T(X) gets its nearest counterpart's
/// vector plus isotropic Gaussian noise of expected norm sigma, renormalized;
/// farther y_j (outliers) get independent random unit vectors.
std::pair<MatX, MatX> oracle_descriptors(const PointCloud& x, const PointCloud& y,
                                         const RigidTransform& gt, int dim, double sigma,
                                         std::uint64_t seed,
                                         double inlier_threshold = 0.05);

}  // namespace occlureg
