#pragma once

#include <utility>
#include <vector>

#include "occlureg/types.hpp"

namespace occlureg {

/// Exact nearest-neighbor index over a fixed 3D point set. Immutable after
/// construction and safe for concurrent queries.
///
/// Distances are squared Euclidean; equal distances are resolved in favor of
/// the lower point index so queries are fully deterministic.
class KdTree {
 public:
  struct Neighbor {
    int index;
    double squared_distance;
  };

  KdTree() = default;
  explicit KdTree(const Points& points);

  Eigen::Index size() const { return points_.rows(); }

  /// k nearest neighbors, ascending (squared_distance, index).
  std::vector<Neighbor> knn(const Vec3& query, int k) const;

  /// All points with squared distance <= radius^2 (closed ball), ascending
  /// (squared_distance, index).
  std::vector<Neighbor> radius_search(const Vec3& query, double radius) const;

  Neighbor nearest(const Vec3& query) const;

 private:
  struct Node {
    int left = -1;
    int right = -1;
    int begin = 0;
    int end = 0;
    int axis = 0;
    double split = 0.0;
    bool leaf = false;
  };

  int build(int begin, int end);

  Points points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;

  static constexpr int kLeafSize = 8;
};

}  // namespace occlureg
