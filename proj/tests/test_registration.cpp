#include <cmath>
#include <vector>

#include "doctest.h"
#include "occlureg/mesh.hpp"
#include "occlureg/random.hpp"
#include "occlureg/registration.hpp"

using namespace occlureg;

namespace {

RigidTransform random_transform(Rng& rng, double max_angle = 3.0) {
  const Vec3 axis = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
  RigidTransform t = RigidTransform::Identity();
  t.linear() = Eigen::AngleAxisd(rng.uniform(0.0, max_angle), axis).toRotationMatrix();
  t.translation() = Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.5;
  return t;
}

PointCloud random_cloud(Rng& rng, int n, double scale = 0.5) {
  PointCloud c;
  c.points.resize(n, 3);
  for (int i = 0; i < n; ++i)
    c.points.row(i) << rng.uniform(-scale, scale), rng.uniform(-scale, scale),
        rng.uniform(-scale, scale);
  return c;
}

/// Params that make preprocessing a pure permutation: the voxel is far below
/// the point spacing and the sample counts equal the cloud sizes.
PipelineParams exact_params(int m, int n) {
  PipelineParams params;
  params.m_source = m;
  params.n_target = n;
  params.voxel = 1e-6;
  params.sinkhorn_k = 100;
  params.seed = 3;
  return params;
}

}  // namespace

TEST_CASE("pipeline parameters are validated") {
  PipelineParams ok;
  CHECK_NOTHROW(ok.validate());
  PipelineParams bad = ok;
  bad.m_source = 2;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.voxel = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.lambda = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.sinkhorn_k = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("preprocessing is deterministic and hits the requested size") {
  Rng rng(61);
  PointCloud cloud = random_cloud(rng, 500);
  bool repl = true;
  PointCloud a = preprocess_cloud(cloud, 0.05, 128, 9, &repl);
  CHECK_FALSE(repl);
  REQUIRE(a.size() == 128);
  PointCloud b = preprocess_cloud(cloud, 0.05, 128, 9);
  CHECK(a.points == b.points);

  PointCloud tiny = random_cloud(rng, 10, 0.01);  // collapses to few voxels
  PointCloud c = preprocess_cloud(tiny, 0.5, 16, 9, &repl);
  CHECK(repl);
  CHECK(c.size() == 16);
}

TEST_CASE("a noiseless half view registers exactly") {
  Rng rng(62);
  PointCloud x = random_cloud(rng, 80);
  const RigidTransform gt = random_transform(rng);
  PointCloud y;
  y.points = apply_transform(gt, Points(x.points.topRows(50)));

  const PipelineParams params = exact_params(80, 50);
  auto desc = make_oracle_descriptor(gt, 16, 0.0, 21);
  RegistrationResult result = register_ot(x, y, desc, params);

  CHECK(result.method == "ot");
  CHECK(is_rigid(result.pose));
  CHECK(rotation_error(result.pose, gt) < 1e-6);
  CHECK(translation_distance(result.pose.translation(), gt.translation()) < 1e-10);
  CHECK(result.correspondences.size() >= 3);
  CHECK(result.diagnostics.at("marginal_residual") >= 0.0);
  CHECK(result.diagnostics.at("inlier_count") >= 3.0);
}

TEST_CASE("too few target points fail loudly") {
  Rng rng(63);
  PointCloud x = random_cloud(rng, 30);
  PointCloud y = random_cloud(rng, 2);  // below the 3-point floor
  auto desc = make_oracle_descriptor(RigidTransform::Identity(), 8, 0.0, 1);
  CHECK_THROWS_AS(register_ot(x, y, desc, exact_params(30, 16)),
                  InsufficientCorrespondences);
}

TEST_CASE("softmax and transport matchers agree on clean data") {
  Rng rng(64);
  PointCloud x = random_cloud(rng, 60);
  const RigidTransform gt = random_transform(rng);
  PointCloud y;
  y.points = apply_transform(gt, Points(x.points.topRows(40)));

  auto desc = make_oracle_descriptor(gt, 16, 0.0, 33);
  PipelineParams params = exact_params(60, 40);
  RegistrationResult ot = register_ot(x, y, desc, params);
  params.matcher = Matcher::softmax;
  RegistrationResult softmax = register_ot(x, y, desc, params);

  CHECK(softmax.method == "softmax");
  CHECK(rotation_error(ot.pose, gt) < 1e-6);
  CHECK(rotation_error(softmax.pose, gt) < 1e-6);
  CHECK(rotation_error(ot.pose, softmax.pose) < 1e-3);
}

TEST_CASE("registration is equivariant to moving the target frame") {
  Rng rng(65);
  PointCloud x = random_cloud(rng, 70);
  const RigidTransform gt = random_transform(rng);
  PointCloud y;
  y.points = apply_transform(gt, Points(x.points.topRows(45)));

  const PipelineParams params = exact_params(70, 45);
  RegistrationResult base =
      register_ot(x, y, make_oracle_descriptor(gt, 16, 0.0, 21), params);

  const RigidTransform g = random_transform(rng);
  PointCloud moved;
  moved.points = apply_transform(g, y.points);
  RegistrationResult shifted =
      register_ot(x, moved, make_oracle_descriptor(g * gt, 16, 0.0, 21), params);

  const RigidTransform expect = g * base.pose;
  CHECK(rotation_error(shifted.pose, expect) < 1e-6);
  CHECK(translation_distance(shifted.pose.translation(), expect.translation()) < 1e-8);
}

TEST_CASE("the full pipeline holds up with real preprocessing") {
  Rng rng(66);
  PointCloud x = sample_surface(make_catalog_shape(3), 4000, 1);
  const RigidTransform gt = random_transform(rng);
  PointCloud y;
  y.points = apply_transform(gt, sample_surface(make_catalog_shape(3), 3000, 2).points);

  PipelineParams params;
  params.m_source = 512;
  params.n_target = 384;
  params.seed = 5;
  RegistrationResult result =
      register_ot(x, y, make_oracle_descriptor(gt, 16, 0.0, 7), params);
  CHECK(is_rigid(result.pose));
  CHECK(rotation_error(result.pose, gt) < 0.05);
  CHECK(translation_distance(result.pose.translation(), gt.translation()) < 0.05);
}

TEST_CASE("icp fixes an identical pair at the identity") {
  Rng rng(67);
  PointCloud x = random_cloud(rng, 120);
  RegistrationResult result = register_icp(x, x);
  CHECK(result.method == "icp");
  CHECK(is_rigid(result.pose));
  CHECK(rotation_error(result.pose, RigidTransform::Identity()) < 1e-9);
  CHECK(result.pose.translation().norm() < 1e-12);
  CHECK(result.diagnostics.at("mean_squared_residual") < 1e-18);
}

TEST_CASE("icp recovers a small perturbation") {
  Rng rng(68);
  PointCloud x = random_cloud(rng, 300);
  RigidTransform gt = RigidTransform::Identity();
  gt.linear() =
      Eigen::AngleAxisd(3.0 * std::numbers::pi / 180.0, Vec3(0.2, 1.0, 0.1).normalized())
          .toRotationMatrix();
  gt.translation() = Vec3(0.01, -0.005, 0.008);
  PointCloud y;
  y.points = apply_transform(gt, x.points);

  RegistrationResult result = register_icp(x, y, RigidTransform::Identity(), 100);
  CHECK(rotation_error(result.pose, gt) < 1e-6);
  CHECK(translation_distance(result.pose.translation(), gt.translation()) < 1e-6);
  CHECK(result.diagnostics.at("iterations") <= 100.0);
}

TEST_CASE("icp stays rigid even when it converges to a wrong basin") {
  Rng rng(69);
  PointCloud x = random_cloud(rng, 200);
  RigidTransform gt = RigidTransform::Identity();
  gt.linear() = Eigen::AngleAxisd(2.0 * std::numbers::pi / 3.0, Vec3::UnitZ())
                    .toRotationMatrix();
  PointCloud y;
  y.points = apply_transform(gt, x.points);

  RegistrationResult result = register_icp(x, y);
  CHECK(is_rigid(result.pose));
  CHECK(std::isfinite(result.diagnostics.at("mean_squared_residual")));
  // 120 degrees is far outside the identity basin; the error is whatever the
  // local optimum gives, only the bookkeeping is asserted here.
  CHECK(result.diagnostics.at("iterations") >= 1.0);
}

TEST_CASE("ransac nails a clean correspondence set") {
  Rng rng(70);
  PointCloud x = random_cloud(rng, 60);
  const RigidTransform gt = random_transform(rng);
  PointCloud y;
  y.points = apply_transform(gt, x.points);

  auto desc = make_oracle_descriptor(gt, 16, 0.0, 12);
  RegistrationResult result = register_ransac(x, y, desc, 500, 0.05, 99);
  CHECK(result.method == "ransac");
  CHECK(is_rigid(result.pose));
  CHECK(rotation_error(result.pose, gt) < 1e-6);
  CHECK(result.diagnostics.at("putative_count") == 60.0);
  CHECK(result.diagnostics.at("inlier_count") == 60.0);

  RegistrationResult again = register_ransac(x, y, desc, 500, 0.05, 99);
  CHECK(again.pose.matrix() == result.pose.matrix());
}

TEST_CASE("ransac survives eighty percent putative corruption") {
  Rng rng(71);
  const int n = 50, good = 10;
  PointCloud x = random_cloud(rng, n);
  const RigidTransform gt = random_transform(rng);
  PointCloud y;
  y.points.resize(n, 3);
  for (int j = 0; j < n; ++j) {
    if (j < good)
      y.points.row(j) = (gt * Vec3(x.points.row(j))).transpose();
    else
      y.points.row(j) << 100.0 + 3.0 * j, 50.0, -20.0;  // never an inlier
  }

  // Descriptors that force the putative pair (j, j) for every j: only the
  // first `good` of them are geometrically right, a 20% inlier rate.
  auto rigged = [](const PointCloud& a, const PointCloud&) {
    MatX f = MatX::Identity(a.size(), a.size());
    return std::pair<MatX, MatX>(f, f);
  };
  RegistrationResult result = register_ransac(x, y, rigged, 2000, 0.05, 5);
  // Success probability is 1 - (1 - 0.2^3)^2000, within 1e-7 of certainty.
  CHECK(rotation_error(result.pose, gt) < 1e-6);
  CHECK(result.diagnostics.at("inlier_count") == static_cast<double>(good));
  CHECK(result.diagnostics.at("putative_count") == static_cast<double>(n));

  PointCloud two = random_cloud(rng, 2);
  CHECK_THROWS_AS(register_ransac(two, two, rigged, 100, 0.05, 1),
                  InsufficientCorrespondences);
}
