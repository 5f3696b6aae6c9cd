#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "occlureg/kdtree.hpp"
#include "occlureg/random.hpp"
#include "occlureg/types.hpp"

namespace occlureg {

/// Isotropic rescaling record: normalized = (p - offset) * scale.
struct NormalizeRecord {
  double scale = 1.0;
  Vec3 offset = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return (p - offset) * scale; }
  Vec3 invert(const Vec3& p) const { return p / scale + offset; }
};

/// Centers the cloud and rescales isotropically so the axis of largest
/// extent spans exactly [-1, 1]. Throws DegenerateInput when the cloud has
/// no extent (e.g. a single point).
std::pair<PointCloud, NormalizeRecord> normalize_unit_cube(const PointCloud& cloud);
NormalizeRecord unit_cube_record(const Points& points);
Points apply_record(const NormalizeRecord& record, const Points& points);
Points invert_record(const NormalizeRecord& record, const Points& points);

using VoxelKey = std::array<std::int64_t, 3>;

/// Occupancy grid with cell index floor(coordinate / voxel_size) per axis; a
/// point exactly on a cell boundary belongs to the higher cell.
struct VoxelGrid {
  double voxel_size = 0.0;
  std::map<VoxelKey, std::vector<int>> cells;
};

VoxelGrid build_voxel_grid(const Points& points, double voxel_size);

/// One centroid per occupied voxel, emitted in ascending cell-index order.
/// Normals are dropped; re-estimate them after downsampling.
PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size);

/// Samples n points, without replacement when n <= |cloud| (a full sample is
/// a permutation), with replacement otherwise; `with_replacement`, when
/// given, records which case ran. Deterministic per seed.
PointCloud random_sample(const PointCloud& cloud, Eigen::Index n, std::uint64_t seed,
                         bool* with_replacement = nullptr);

/// Per-point normals as the smallest-eigenvalue direction of the k-NN
/// covariance (the neighborhood includes the point itself). Signs are chosen
/// to face `viewpoint` when `toward` is true (depth clouds face the sensor)
/// and away from it otherwise (full models face outward from their center).
/// Rank-1 neighborhoods get an arbitrary orthogonal normal and a low
/// confidence flag; rank-0 neighborhoods throw DegenerateInput.
PointCloud estimate_normals(const PointCloud& cloud, int k,
                            const Vec3& viewpoint = Vec3::Zero(), bool toward = true,
                            std::vector<std::uint8_t>* low_confidence = nullptr);

/// Keeps points with |p - center| <= radius (closed ball), preserving order.
PointCloud sphere_crop(const PointCloud& cloud, const Vec3& center, double radius);

/// Row subset helper shared by the sampling and cropping operations.
PointCloud select_rows(const PointCloud& cloud, const std::vector<int>& rows);

}  // namespace occlureg
