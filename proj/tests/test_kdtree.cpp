#include <algorithm>
#include <vector>

#include "doctest.h"
#include "occlureg/kdtree.hpp"
#include "occlureg/random.hpp"

using namespace occlureg;

namespace {

Points random_points(Rng& rng, int n) {
  Points p(n, 3);
  for (int i = 0; i < n; ++i)
    p.row(i) << rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1);
  return p;
}

std::vector<KdTree::Neighbor> brute_knn(const Points& pts, const Vec3& q, int k) {
  std::vector<KdTree::Neighbor> all;
  for (int i = 0; i < pts.rows(); ++i)
    all.push_back({i, (pts.row(i).transpose() - q).squaredNorm()});
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.squared_distance != b.squared_distance
               ? a.squared_distance < b.squared_distance
               : a.index < b.index;
  });
  all.resize(static_cast<std::size_t>(k));
  return all;
}

}  // namespace

TEST_CASE("self query returns the point at distance zero") {
  Points pts(5, 3);
  pts << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 1;
  KdTree tree(pts);
  auto got = tree.knn(Vec3(0, 1, 0), 1);
  REQUIRE(got.size() == 1);
  CHECK(got[0].index == 2);
  CHECK(got[0].squared_distance == 0.0);
  CHECK(tree.nearest(Vec3(0, 1, 0)).index == 2);
}

TEST_CASE("collinear points return nearest two in order") {
  Points pts(3, 3);
  pts << 0, 0, 0, 1, 0, 0, 2, 0, 0;
  KdTree tree(pts);
  auto got = tree.knn(Vec3(0, 0, 0), 2);
  REQUIRE(got.size() == 2);
  CHECK(got[0].index == 0);
  CHECK(got[1].index == 1);
  CHECK(got[1].squared_distance == doctest::Approx(1.0));
}

TEST_CASE("knn matches brute force on random instances") {
  Rng rng(31);
  Points pts = random_points(rng, 500);
  KdTree tree(pts);
  for (int q = 0; q < 100; ++q) {
    Vec3 query(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2));
    auto got = tree.knn(query, 8);
    auto want = brute_knn(pts, query, 8);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].index == want[i].index);
      CHECK(got[i].squared_distance == doctest::Approx(want[i].squared_distance));
    }
  }
}

TEST_CASE("radius search returns the closed ball in ascending order") {
  Rng rng(32);
  Points pts = random_points(rng, 300);
  KdTree tree(pts);
  const double radius = 0.4;
  for (int q = 0; q < 50; ++q) {
    Vec3 query(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    auto got = tree.radius_search(query, radius);
    std::vector<int> want;
    for (int i = 0; i < pts.rows(); ++i)
      if ((pts.row(i).transpose() - query).squaredNorm() <= radius * radius)
        want.push_back(i);
    CHECK(got.size() == want.size());
    for (std::size_t i = 0; i + 1 < got.size(); ++i)
      CHECK(got[i].squared_distance <= got[i + 1].squared_distance);
    std::vector<int> got_ids;
    for (const auto& nb : got) got_ids.push_back(nb.index);
    std::sort(got_ids.begin(), got_ids.end());
    CHECK(got_ids == want);
  }
}

TEST_CASE("exact-boundary point is inside the closed ball") {
  Points pts(2, 3);
  pts << 0, 0, 0, 1, 0, 0;
  KdTree tree(pts);
  auto got = tree.radius_search(Vec3::Zero(), 1.0);
  CHECK(got.size() == 2);
}

TEST_CASE("ties break toward the lower index") {
  Points pts(4, 3);
  pts << 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 0;  // all at distance 1 from origin
  KdTree tree(pts);
  auto got = tree.knn(Vec3::Zero(), 4);
  REQUIRE(got.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(got[static_cast<std::size_t>(i)].index == i);
}
