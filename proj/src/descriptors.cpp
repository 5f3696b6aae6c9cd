#include "occlureg/descriptors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "occlureg/parallel.hpp"
#include "occlureg/random.hpp"

namespace occlureg {
namespace {

constexpr double kPi = std::numbers::pi;

int clamp_bin(double t, int bins) {
  int b = static_cast<int>(std::floor(t * bins));
  return std::clamp(b, 0, bins - 1);
}

// Darboux-frame angle triple between a source point (normal u before the
// swap rule) and a neighbor. Returns false only for coincident points.
bool pair_features(const Vec3& p, const Vec3& np, const Vec3& q, const Vec3& nq,
                   double* alpha, double* phi, double* theta) {
  Vec3 d = q - p;
  double dist = d.norm();
  if (dist < 1e-12) return false;
  d /= dist;

  Vec3 u = np;
  Vec3 nt = nq;
  double a1 = np.dot(d);
  double a2 = nq.dot(d);
  // The frame lives at whichever endpoint has the smaller angle to the line.
  if (std::abs(a1) < std::abs(a2)) {
    u = nq;
    nt = np;
    d = -d;
    *phi = -a2;
  } else {
    *phi = a1;
  }

  Vec3 v = d.cross(u);
  double vn = v.norm();
  if (vn < 1e-12) {
    // Normal parallel to the connecting line: any unit vector orthogonal to
    // u completes the frame. alpha lands at 0, theta at 0, phi is extreme.
    Vec3 t = std::abs(u.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    v = u.cross(t).normalized();
  } else {
    v /= vn;
  }
  Vec3 w = u.cross(v);

  *alpha = v.dot(nt);
  *theta = std::atan2(w.dot(nt), u.dot(nt));
  return true;
}

void normalize_blocks(MatX& hist, int bins) {
  for (Eigen::Index i = 0; i < hist.rows(); ++i) {
    for (int f = 0; f < 3; ++f) {
      auto block = hist.row(i).segment(f * bins, bins);
      double total = block.sum();
      if (total > 0.0) {
        block /= total;
      } else {
        block.setConstant(1.0 / bins);
      }
    }
  }
}

void check_fpfh_input(const PointCloud& cloud, const FpfhParams& params) {
  if (!cloud.has_normals())
    throw DegenerateInput("spfh: cloud must carry normals");
  if (!(params.radius > 0.0))
    throw DegenerateInput("spfh: radius must be positive");
  if (params.bins_per_feature < 2)
    throw DegenerateInput("spfh: need at least 2 bins per feature");
}

}  // namespace

MatX spfh(const PointCloud& cloud, const KdTree& index, const FpfhParams& params,
          std::vector<std::uint8_t>* low_confidence) {
  check_fpfh_input(cloud, params);
  const int bins = params.bins_per_feature;
  const Eigen::Index m = cloud.size();
  MatX hist = MatX::Zero(m, 3 * bins);
  if (low_confidence) low_confidence->assign(static_cast<std::size_t>(m), 0);

  parallel_for(m, [&](Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index i = begin; i < end; ++i) {
      Vec3 p = cloud.points.row(i);
      Vec3 np = cloud.normals.row(i);
      auto neighbors = index.radius_search(p, params.radius);
      int used = 0;
      for (const auto& nb : neighbors) {
        if (nb.index == i) continue;
        double alpha, phi, theta;
        if (!pair_features(p, np, cloud.points.row(nb.index),
                           cloud.normals.row(nb.index), &alpha, &phi, &theta))
          continue;  // coincident; does not count toward the neighbor total
        ++used;
        hist(i, clamp_bin((alpha + 1.0) / 2.0, bins)) += 1.0;
        hist(i, bins + clamp_bin((phi + 1.0) / 2.0, bins)) += 1.0;
        hist(i, 2 * bins + clamp_bin((theta + kPi) / (2.0 * kPi), bins)) += 1.0;
      }
      if (used == 0 && low_confidence)
        (*low_confidence)[static_cast<std::size_t>(i)] = 1;
    }
  });
  normalize_blocks(hist, bins);
  return hist;
}

MatX fpfh(const PointCloud& cloud, const KdTree& index, const FpfhParams& params) {
  check_fpfh_input(cloud, params);
  MatX simple = spfh(cloud, index, params);
  MatX out = simple;
  const Eigen::Index m = cloud.size();

  parallel_for(m, [&](Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index i = begin; i < end; ++i) {
      Vec3 p = cloud.points.row(i);
      auto neighbors = index.radius_search(p, params.radius);
      VecX acc = VecX::Zero(simple.cols());
      int k = 0;
      for (const auto& nb : neighbors) {
        if (nb.index == i) continue;
        double dist = std::sqrt(nb.squared_distance);
        if (dist < 1e-12) continue;
        acc += simple.row(nb.index).transpose() / dist;
        ++k;
      }
      if (k > 0) out.row(i) += acc.transpose() / k;
    }
  });
  normalize_blocks(out, params.bins_per_feature);
  return out;
}

MatX fpfh(const PointCloud& cloud, const FpfhParams& params) {
  check_fpfh_input(cloud, params);
  KdTree index(cloud.points);
  return fpfh(cloud, index, params);
}

std::pair<MatX, MatX> oracle_descriptors(const PointCloud& x, const PointCloud& y,
                                         const RigidTransform& gt, int dim, double sigma,
                                         std::uint64_t seed, double inlier_threshold) {
  if (dim < 4) throw DegenerateInput("oracle_descriptors: dim must be >= 4");
  if (sigma < 0.0) throw DegenerateInput("oracle_descriptors: sigma must be >= 0");
  if (x.empty() || y.empty())
    throw DegenerateInput("oracle_descriptors: empty cloud");

  Rng rng(seed);
  auto random_unit = [&]() {
    VecX v(dim);
    while (true) {
      for (int d = 0; d < dim; ++d) v[d] = rng.normal();
      double n = v.norm();
      if (n > 1e-12) return VecX(v / n);
    }
  };

  MatX fx(x.size(), dim);
  for (Eigen::Index i = 0; i < x.size(); ++i) fx.row(i) = random_unit().transpose();

  Points tx = apply_transform(gt, x.points);
  KdTree tree(tx);
  const double thr2 = inlier_threshold * inlier_threshold;

  // Component scale sigma/sqrt(dim) keeps the expected perturbation norm at
  // sigma regardless of the descriptor width.
  const double comp = sigma / std::sqrt(static_cast<double>(dim));
  MatX fy(y.size(), dim);
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    auto nb = tree.nearest(y.points.row(j));
    if (nb.squared_distance <= thr2) {
      VecX v = fx.row(nb.index).transpose();
      if (sigma > 0.0) {
        for (int d = 0; d < dim; ++d) v[d] += comp * rng.normal();
        double n = v.norm();
        v = n > 1e-12 ? VecX(v / n) : random_unit();
      }
      fy.row(j) = v.transpose();
    } else {
      fy.row(j) = random_unit().transpose();
    }
  }
  return {fx, fy};
}

}  // namespace occlureg
