#include "occlureg/geometry.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numbers>

namespace occlureg {

bool is_rotation(const Mat3& r, double tol) {
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

bool is_rigid(const RigidTransform& t, double tol) {
  return is_rotation(t.linear(), tol) && t.translation().allFinite();
}

Points apply_transform(const RigidTransform& t, const Points& points) {
  Points out = points * t.linear().transpose();
  out.rowwise() += t.translation().transpose();
  return out;
}

PointCloud apply_transform(const RigidTransform& t, const PointCloud& cloud) {
  PointCloud out;
  out.points = apply_transform(t, cloud.points);
  if (cloud.has_normals()) out.normals = cloud.normals * t.linear().transpose();
  return out;
}

RigidTransform kabsch(const Points& src, const Points& tgt, const VecX& weights) {
  if (src.rows() != tgt.rows() || src.rows() != weights.size())
    throw DimensionMismatch("kabsch: size mismatch between src, tgt, weights");

  double total = 0.0;
  Eigen::Index positive = 0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw DegenerateInput("kabsch: negative weight");
    if (weights[i] > 0.0) ++positive;
    total += weights[i];
  }
  if (positive < 3 || total <= 0.0)
    throw DegenerateInput("kabsch: fewer than 3 positively weighted points");

  const VecX w = weights / total;
  const Vec3 centroid_src = src.transpose() * w;
  const Vec3 centroid_tgt = tgt.transpose() * w;

  Points src_c = src.rowwise() - centroid_src.transpose();
  Points tgt_c = tgt.rowwise() - centroid_tgt.transpose();

  // Collinearity check on the weighted source scatter.
  {
    Points scaled = src_c;
    for (Eigen::Index i = 0; i < scaled.rows(); ++i)
      scaled.row(i) *= std::sqrt(w[i]);
    Eigen::JacobiSVD<MatX> scatter(scaled);
    const VecX& sv = scatter.singularValues();
    if (sv[1] <= sv[0] * 1e-12)
      throw DegenerateInput("kabsch: weighted source points are collinear");
  }

  Mat3 h = Mat3::Zero();
  for (Eigen::Index i = 0; i < src.rows(); ++i)
    h.noalias() += w[i] * src_c.row(i).transpose() * tgt_c.row(i);

  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 v = svd.matrixV();
  const Mat3& u = svd.matrixU();
  if ((v * u.transpose()).determinant() < 0.0) v.col(2) = -v.col(2);

  RigidTransform t = RigidTransform::Identity();
  t.linear() = v * u.transpose();
  t.translation() = centroid_tgt - t.linear() * centroid_src;
  return t;
}

RigidTransform kabsch(const Points& src, const Points& tgt) {
  return kabsch(src, tgt, VecX::Ones(src.rows()));
}

double rotation_error(const Mat3& r_hat, const Mat3& r_gt) {
  const double arg = ((r_hat.transpose() * r_gt).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(arg, -1.0, 1.0));
}

double rotation_error(const RigidTransform& a, const RigidTransform& b) {
  return rotation_error(a.linear(), b.linear());
}

double translation_error(const Vec3& t_hat, const Vec3& t_gt) {
  return (t_hat - t_gt).squaredNorm();
}

double translation_distance(const Vec3& t_hat, const Vec3& t_gt) {
  return (t_hat - t_gt).norm();
}

Eigen::Vector2d project(const CameraIntrinsics& intr, const Vec3& p_cam) {
  return {intr.cx + intr.fx * p_cam.x() / p_cam.z(),
          intr.cy + intr.fy * p_cam.y() / p_cam.z()};
}

Vec3 backproject_pixel(const CameraIntrinsics& intr, double u, double v, double depth) {
  return {(u - intr.cx) * depth / intr.fx, (v - intr.cy) * depth / intr.fy, depth};
}

CameraPose look_at(const Vec3& eye, const Vec3& center, const Vec3& up) {
  const Vec3 view = center - eye;
  if (view.norm() < 1e-15) throw DegenerateInput("look_at: eye equals center");
  const Vec3 forward = view.normalized();
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-12)
    throw DegenerateInput("look_at: up is parallel to the view direction");
  right.normalize();
  const Vec3 down = forward.cross(right).normalized();

  // Rows of the world-to-camera rotation are the camera axes in world
  // coordinates; +z looks at the scene, +y points down in the image.
  Mat3 r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();

  CameraPose pose = CameraPose::Identity();
  pose.linear() = r;
  pose.translation() = -r * eye;
  return pose;
}

Vec3 view_eye(double elevation_deg, double azimuth_deg, double distance) {
  const double deg = std::numbers::pi / 180.0;
  const double el = elevation_deg * deg;
  const double az = azimuth_deg * deg;
  return distance * Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                         std::sin(el));
}

CameraPose sample_view(const ViewRanges& ranges, Rng& rng) {
  const double el = rng.uniform(ranges.elevation_lo_deg, ranges.elevation_hi_deg);
  const double az = rng.uniform(ranges.azimuth_lo_deg, ranges.azimuth_hi_deg);
  return look_at(view_eye(el, az, ranges.distance), Vec3::Zero(), Vec3::UnitZ());
}

CameraPose sample_view(const ViewRanges& ranges, std::uint64_t seed) {
  Rng rng(seed);
  return sample_view(ranges, rng);
}

}  // namespace occlureg
