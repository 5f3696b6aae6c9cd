#pragma once

#include <limits>
#include <vector>

#include "occlureg/mesh.hpp"
#include "occlureg/types.hpp"

namespace occlureg {

struct RayHit {
  double t = 0.0;  // parameter along the ray, in units of |direction|
  int face = -1;
};

struct SurfacePoint {
  Vec3 point = Vec3::Zero();
  int face = -1;
  double squared_distance = std::numeric_limits<double>::infinity();
};

/// Bounding-volume hierarchy over a triangle mesh. Supports nearest ray hits
/// (Moller-Trumbore, both triangle sides) and closest-surface-point queries.
class Bvh {
 public:
  explicit Bvh(const TriangleMesh& mesh);

  /// Nearest intersection with parameter t > t_min; false when the ray
  /// misses every triangle. `direction` need not be normalized.
  bool raycast(const Vec3& origin, const Vec3& direction, RayHit* hit,
               double t_min = 1e-9) const;

  SurfacePoint closest_point(const Vec3& query) const;
  /// Euclidean distance from the query to the mesh surface.
  double distance(const Vec3& query) const;

  Eigen::Index triangle_count() const { return static_cast<Eigen::Index>(a_.size()); }

 private:
  struct Node {
    Vec3 lo, hi;
    int left = -1, right = -1;
    int begin = 0, end = 0;
    bool leaf() const { return left < 0; }
  };

  int build(std::vector<int>& order, int begin, int end, const std::vector<Vec3>& centroids);
  static bool slab_range(const Node& node, const Vec3& origin, const Vec3& direction,
                         double& t_enter, double& t_exit);

  std::vector<Node> nodes_;
  std::vector<int> order_;              // triangle index per slot
  std::vector<Vec3> a_, e1_, e2_;       // vertex a and the two edges per triangle
};

}  // namespace occlureg
