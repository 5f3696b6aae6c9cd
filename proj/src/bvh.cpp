#include "occlureg/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace occlureg {

namespace {

constexpr int kLeafSize = 4;

Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0)
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);

  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

double box_squared_distance(const Vec3& lo, const Vec3& hi, const Vec3& q) {
  double d2 = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double below = lo[k] - q[k];
    const double above = q[k] - hi[k];
    const double d = std::max({below, above, 0.0});
    d2 += d * d;
  }
  return d2;
}

}  // namespace

Bvh::Bvh(const TriangleMesh& mesh) {
  if (mesh.empty()) throw EmptyMesh("bvh: empty mesh");
  const auto n = static_cast<int>(mesh.face_count());
  a_.resize(static_cast<std::size_t>(n));
  e1_.resize(static_cast<std::size_t>(n));
  e2_.resize(static_cast<std::size_t>(n));
  std::vector<Vec3> centroids(static_cast<std::size_t>(n));
  for (int f = 0; f < n; ++f) {
    const Vec3 a = mesh.vertices.row(mesh.faces(f, 0));
    const Vec3 b = mesh.vertices.row(mesh.faces(f, 1));
    const Vec3 c = mesh.vertices.row(mesh.faces(f, 2));
    a_[static_cast<std::size_t>(f)] = a;
    e1_[static_cast<std::size_t>(f)] = b - a;
    e2_[static_cast<std::size_t>(f)] = c - a;
    centroids[static_cast<std::size_t>(f)] = (a + b + c) / 3.0;
  }
  order_.resize(static_cast<std::size_t>(n));
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(static_cast<std::size_t>(2 * n));
  build(order_, 0, n, centroids);
}

int Bvh::build(std::vector<int>& order, int begin, int end,
               const std::vector<Vec3>& centroids) {
  const int node_index = static_cast<int>(nodes_.size());
  nodes_.emplace_back();

  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (int s = begin; s < end; ++s) {
    const auto f = static_cast<std::size_t>(order[static_cast<std::size_t>(s)]);
    const Vec3 a = a_[f], b = a_[f] + e1_[f], c = a_[f] + e2_[f];
    lo = lo.cwiseMin(a).cwiseMin(b).cwiseMin(c);
    hi = hi.cwiseMax(a).cwiseMax(b).cwiseMax(c);
  }
  nodes_[static_cast<std::size_t>(node_index)].lo = lo;
  nodes_[static_cast<std::size_t>(node_index)].hi = hi;
  nodes_[static_cast<std::size_t>(node_index)].begin = begin;
  nodes_[static_cast<std::size_t>(node_index)].end = end;

  if (end - begin <= kLeafSize) return node_index;

  Vec3 clo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 chi = -clo;
  for (int s = begin; s < end; ++s) {
    const Vec3& c = centroids[static_cast<std::size_t>(order[static_cast<std::size_t>(s)])];
    clo = clo.cwiseMin(c);
    chi = chi.cwiseMax(c);
  }
  int axis = 0;
  (chi - clo).maxCoeff(&axis);
  if (chi[axis] <= clo[axis]) return node_index;  // all centroids coincide

  const int mid = (begin + end) / 2;
  std::nth_element(order.begin() + begin, order.begin() + mid, order.begin() + end,
                   [&](int fa, int fb) {
                     const double ca = centroids[static_cast<std::size_t>(fa)][axis];
                     const double cb = centroids[static_cast<std::size_t>(fb)][axis];
                     return ca < cb || (ca == cb && fa < fb);
                   });
  const int left = build(order, begin, mid, centroids);
  const int right = build(order, mid, end, centroids);
  nodes_[static_cast<std::size_t>(node_index)].left = left;
  nodes_[static_cast<std::size_t>(node_index)].right = right;
  return node_index;
}

bool Bvh::slab_range(const Node& node, const Vec3& origin, const Vec3& direction,
                     double& t_enter, double& t_exit) {
  t_enter = -std::numeric_limits<double>::infinity();
  t_exit = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (std::abs(direction[k]) < 1e-300) {
      if (origin[k] < node.lo[k] || origin[k] > node.hi[k]) return false;
      continue;
    }
    double t0 = (node.lo[k] - origin[k]) / direction[k];
    double t1 = (node.hi[k] - origin[k]) / direction[k];
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
    if (t_enter > t_exit) return false;
  }
  return true;
}

bool Bvh::raycast(const Vec3& origin, const Vec3& direction, RayHit* hit,
                  double t_min) const {
  double best_t = std::numeric_limits<double>::infinity();
  int best_face = -1;

  std::vector<int> stack;
  stack.reserve(64);
  stack.push_back(0);
  while (!stack.empty()) {
    const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    double enter, exit;
    if (!slab_range(node, origin, direction, enter, exit)) continue;
    if (enter > best_t || exit < t_min) continue;

    if (!node.leaf()) {
      // Nearer child popped first.
      double el, xl, er, xr;
      const Node& ln = nodes_[static_cast<std::size_t>(node.left)];
      const Node& rn = nodes_[static_cast<std::size_t>(node.right)];
      const bool okl = slab_range(ln, origin, direction, el, xl);
      const bool okr = slab_range(rn, origin, direction, er, xr);
      if (okl && okr) {
        if (el <= er) {
          stack.push_back(node.right);
          stack.push_back(node.left);
        } else {
          stack.push_back(node.left);
          stack.push_back(node.right);
        }
      } else if (okl) {
        stack.push_back(node.left);
      } else if (okr) {
        stack.push_back(node.right);
      }
      continue;
    }

    for (int s = node.begin; s < node.end; ++s) {
      const int f = order_[static_cast<std::size_t>(s)];
      const auto fi = static_cast<std::size_t>(f);
      const Vec3 pvec = direction.cross(e2_[fi]);
      const double det = e1_[fi].dot(pvec);
      if (std::abs(det) < 1e-14) continue;
      const double inv_det = 1.0 / det;
      const Vec3 tvec = origin - a_[fi];
      const double u = tvec.dot(pvec) * inv_det;
      if (u < -1e-9 || u > 1.0 + 1e-9) continue;
      const Vec3 qvec = tvec.cross(e1_[fi]);
      const double v = direction.dot(qvec) * inv_det;
      if (v < -1e-9 || u + v > 1.0 + 1e-9) continue;
      const double t = e2_[fi].dot(qvec) * inv_det;
      if (t > t_min && t < best_t) {
        best_t = t;
        best_face = f;
      }
    }
  }

  if (best_face < 0) return false;
  if (hit) {
    hit->t = best_t;
    hit->face = best_face;
  }
  return true;
}

SurfacePoint Bvh::closest_point(const Vec3& query) const {
  SurfacePoint best;
  std::vector<int> stack;
  stack.reserve(64);
  stack.push_back(0);
  while (!stack.empty()) {
    const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (box_squared_distance(node.lo, node.hi, query) >= best.squared_distance) continue;

    if (!node.leaf()) {
      const Node& ln = nodes_[static_cast<std::size_t>(node.left)];
      const Node& rn = nodes_[static_cast<std::size_t>(node.right)];
      const double dl = box_squared_distance(ln.lo, ln.hi, query);
      const double dr = box_squared_distance(rn.lo, rn.hi, query);
      if (dl <= dr) {
        stack.push_back(node.right);
        stack.push_back(node.left);
      } else {
        stack.push_back(node.left);
        stack.push_back(node.right);
      }
      continue;
    }

    for (int s = node.begin; s < node.end; ++s) {
      const int f = order_[static_cast<std::size_t>(s)];
      const auto fi = static_cast<std::size_t>(f);
      const Vec3 p =
          closest_on_triangle(query, a_[fi], a_[fi] + e1_[fi], a_[fi] + e2_[fi]);
      const double d2 = (p - query).squaredNorm();
      if (d2 < best.squared_distance) {
        best.squared_distance = d2;
        best.point = p;
        best.face = f;
      }
    }
  }
  return best;
}

double Bvh::distance(const Vec3& query) const {
  return std::sqrt(closest_point(query).squared_distance);
}

}  // namespace occlureg
