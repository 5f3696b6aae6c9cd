#include "occlureg/cloud.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace occlureg {

NormalizeRecord unit_cube_record(const Points& points) {
  if (points.rows() == 0) throw DegenerateInput("normalize: empty cloud");
  const Vec3 lo = points.colwise().minCoeff();
  const Vec3 hi = points.colwise().maxCoeff();
  const double extent = (hi - lo).maxCoeff();
  if (extent <= 0.0)
    throw DegenerateInput("normalize: cloud has no spatial extent");
  NormalizeRecord record;
  record.offset = (lo + hi) / 2.0;
  record.scale = 2.0 / extent;
  return record;
}

Points apply_record(const NormalizeRecord& record, const Points& points) {
  Points out = points;
  out.rowwise() -= record.offset.transpose();
  out *= record.scale;
  return out;
}

Points invert_record(const NormalizeRecord& record, const Points& points) {
  Points out = points / record.scale;
  out.rowwise() += record.offset.transpose();
  return out;
}

std::pair<PointCloud, NormalizeRecord> normalize_unit_cube(const PointCloud& cloud) {
  const NormalizeRecord record = unit_cube_record(cloud.points);
  PointCloud out;
  out.points = apply_record(record, cloud.points);
  out.normals = cloud.normals;  // isotropic scaling keeps directions
  return {out, record};
}

namespace {

inline std::int64_t cell_of(double coordinate, double voxel_size) {
  return static_cast<std::int64_t>(std::floor(coordinate / voxel_size));
}

}  // namespace

VoxelGrid build_voxel_grid(const Points& points, double voxel_size) {
  if (voxel_size <= 0.0) throw DegenerateInput("voxel grid: voxel_size must be > 0");
  VoxelGrid grid;
  grid.voxel_size = voxel_size;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const VoxelKey key{cell_of(points(i, 0), voxel_size),
                       cell_of(points(i, 1), voxel_size),
                       cell_of(points(i, 2), voxel_size)};
    grid.cells[key].push_back(static_cast<int>(i));
  }
  return grid;
}

PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size) {
  const VoxelGrid grid = build_voxel_grid(cloud.points, voxel_size);
  PointCloud out;
  out.points.resize(static_cast<Eigen::Index>(grid.cells.size()), 3);
  Eigen::Index row = 0;
  for (const auto& [key, members] : grid.cells) {
    Vec3 centroid = Vec3::Zero();
    for (int idx : members) centroid += cloud.points.row(idx).transpose();
    out.points.row(row++) = (centroid / static_cast<double>(members.size())).transpose();
  }
  return out;
}

PointCloud select_rows(const PointCloud& cloud, const std::vector<int>& rows) {
  PointCloud out;
  out.points.resize(static_cast<Eigen::Index>(rows.size()), 3);
  const bool normals = cloud.has_normals();
  if (normals) out.normals.resize(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.points.row(static_cast<Eigen::Index>(i)) = cloud.points.row(rows[i]);
    if (normals) out.normals.row(static_cast<Eigen::Index>(i)) = cloud.normals.row(rows[i]);
  }
  return out;
}

PointCloud random_sample(const PointCloud& cloud, Eigen::Index n, std::uint64_t seed,
                         bool* with_replacement) {
  if (n < 1) throw DegenerateInput("random_sample: n must be >= 1");
  if (cloud.empty()) throw DegenerateInput("random_sample: empty cloud");
  Rng rng(seed);
  std::vector<int> picks;
  picks.reserve(static_cast<std::size_t>(n));
  const Eigen::Index m = cloud.size();
  if (n <= m) {
    if (with_replacement) *with_replacement = false;
    // Partial Fisher-Yates over the index vector.
    std::vector<int> indices(static_cast<std::size_t>(m));
    std::iota(indices.begin(), indices.end(), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto j = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(m - i)));
      std::swap(indices[static_cast<std::size_t>(i)], indices[static_cast<std::size_t>(j)]);
      picks.push_back(indices[static_cast<std::size_t>(i)]);
    }
  } else {
    if (with_replacement) *with_replacement = true;
    for (Eigen::Index i = 0; i < n; ++i)
      picks.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(m))));
  }
  return select_rows(cloud, picks);
}

PointCloud estimate_normals(const PointCloud& cloud, int k, const Vec3& viewpoint,
                            bool toward, std::vector<std::uint8_t>* low_confidence) {
  if (k < 3) throw DegenerateInput("estimate_normals: k must be >= 3");
  if (cloud.size() <= k)
    throw DegenerateInput("estimate_normals: cloud must have more than k points");

  const KdTree tree(cloud.points);
  PointCloud out;
  out.points = cloud.points;
  out.normals.resize(cloud.size(), 3);
  if (low_confidence) low_confidence->assign(static_cast<std::size_t>(cloud.size()), 0);

  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const Vec3 p = cloud.points.row(i);
    const auto neighbors = tree.knn(p, k);
    Vec3 mean = Vec3::Zero();
    for (const auto& nb : neighbors) mean += cloud.points.row(nb.index).transpose();
    mean /= static_cast<double>(neighbors.size());

    Mat3 cov = Mat3::Zero();
    for (const auto& nb : neighbors) {
      const Vec3 d = cloud.points.row(nb.index).transpose() - mean;
      cov.noalias() += d * d.transpose();
    }

    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    const Vec3 evals = eig.eigenvalues();  // ascending
    if (evals[2] <= 0.0)
      throw DegenerateInput("estimate_normals: rank-0 neighborhood");

    Vec3 normal = eig.eigenvectors().col(0);
    // Rank-1 neighborhood: both small eigenvalues vanish, the normal is only
    // defined up to rotation about the line.
    if (evals[1] <= evals[2] * 1e-12 && low_confidence)
      (*low_confidence)[static_cast<std::size_t>(i)] = 1;

    const double facing = normal.dot(viewpoint - p);
    if ((toward && facing < 0.0) || (!toward && facing > 0.0)) normal = -normal;
    out.normals.row(i) = normal.normalized().transpose();
  }
  return out;
}

PointCloud sphere_crop(const PointCloud& cloud, const Vec3& center, double radius) {
  if (radius <= 0.0) throw DegenerateInput("sphere_crop: radius must be > 0");
  std::vector<int> keep;
  for (Eigen::Index i = 0; i < cloud.size(); ++i)
    if ((cloud.points.row(i).transpose() - center).norm() <= radius)
      keep.push_back(static_cast<int>(i));
  return select_rows(cloud, keep);
}

}  // namespace occlureg
