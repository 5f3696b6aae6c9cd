#include "occlureg/kdtree.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

namespace occlureg {

namespace {

// Lexicographic (squared_distance, index); lower index wins ties.
inline bool better(const KdTree::Neighbor& a, const KdTree::Neighbor& b) {
  if (a.squared_distance != b.squared_distance)
    return a.squared_distance < b.squared_distance;
  return a.index < b.index;
}

struct WorseFirst {
  bool operator()(const KdTree::Neighbor& a, const KdTree::Neighbor& b) const {
    return better(a, b);
  }
};

}  // namespace

KdTree::KdTree(const Points& points) : points_(points) {
  order_.resize(static_cast<std::size_t>(points_.rows()));
  std::iota(order_.begin(), order_.end(), 0);
  if (!order_.empty()) root_ = build(0, static_cast<int>(order_.size()));
}

int KdTree::build(int begin, int end) {
  Node node;
  node.begin = begin;
  node.end = end;
  const int node_index = static_cast<int>(nodes_.size());
  nodes_.push_back(node);

  if (end - begin <= kLeafSize) {
    nodes_[node_index].leaf = true;
    return node_index;
  }

  Vec3 lo = points_.row(order_[begin]);
  Vec3 hi = lo;
  for (int i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_.row(order_[i]).transpose());
    hi = hi.cwiseMax(points_.row(order_[i]).transpose());
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);

  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid,
                   order_.begin() + end, [&](int a, int b) {
                     const double pa = points_(a, axis);
                     const double pb = points_(b, axis);
                     if (pa != pb) return pa < pb;
                     return a < b;
                   });

  nodes_[node_index].axis = axis;
  nodes_[node_index].split = points_(order_[mid], axis);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[node_index].left = left;
  nodes_[node_index].right = right;
  return node_index;
}

std::vector<KdTree::Neighbor> KdTree::knn(const Vec3& query, int k) const {
  std::vector<Neighbor> result;
  if (k <= 0 || root_ < 0) return result;
  k = std::min<int>(k, static_cast<int>(points_.rows()));

  // Max-heap of the current k best, worst on top.
  std::priority_queue<Neighbor, std::vector<Neighbor>, WorseFirst> heap;

  auto visit = [&](auto&& self, int node_index) -> void {
    const Node& node = nodes_[node_index];
    if (node.leaf) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = order_[i];
        const Neighbor cand{idx, (points_.row(idx).transpose() - query).squaredNorm()};
        if (static_cast<int>(heap.size()) < k) {
          heap.push(cand);
        } else if (better(cand, heap.top())) {
          heap.pop();
          heap.push(cand);
        }
      }
      return;
    }
    const double delta = query[node.axis] - node.split;
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    self(self, near);
    // <= keeps equal-distance candidates reachable for index tie-breaking.
    if (static_cast<int>(heap.size()) < k || delta * delta <= heap.top().squared_distance)
      self(self, far);
  };
  visit(visit, root_);

  result.resize(heap.size());
  for (auto it = result.rbegin(); it != result.rend(); ++it) {
    *it = heap.top();
    heap.pop();
  }
  return result;
}

std::vector<KdTree::Neighbor> KdTree::radius_search(const Vec3& query,
                                                    double radius) const {
  std::vector<Neighbor> result;
  if (root_ < 0 || radius < 0.0) return result;
  const double r2 = radius * radius;

  auto visit = [&](auto&& self, int node_index) -> void {
    const Node& node = nodes_[node_index];
    if (node.leaf) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = order_[i];
        const double d2 = (points_.row(idx).transpose() - query).squaredNorm();
        if (d2 <= r2) result.push_back({idx, d2});
      }
      return;
    }
    const double delta = query[node.axis] - node.split;
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    self(self, near);
    if (delta * delta <= r2) self(self, far);
  };
  visit(visit, root_);

  std::sort(result.begin(), result.end(), better);
  return result;
}

KdTree::Neighbor KdTree::nearest(const Vec3& query) const {
  const auto result = knn(query, 1);
  if (result.empty()) throw DegenerateInput("nearest: empty index");
  return result[0];
}

}  // namespace occlureg
