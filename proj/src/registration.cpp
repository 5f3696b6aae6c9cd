#include "occlureg/registration.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "occlureg/cloud.hpp"
#include "occlureg/random.hpp"

namespace occlureg {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Pairing {
  Points src;
  Points tgt;
  VecX weights;
};

Pairing gather(const PointCloud& x, const PointCloud& y,
               const std::vector<Correspondence>& pairs) {
  Pairing out;
  out.src.resize(pairs.size(), 3);
  out.tgt.resize(pairs.size(), 3);
  out.weights.resize(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    out.src.row(k) = x.points.row(pairs[k].i);
    out.tgt.row(k) = y.points.row(pairs[k].j);
    out.weights[k] = pairs[k].weight;
  }
  return out;
}

double pose_delta(const RigidTransform& a, const RigidTransform& b) {
  return rotation_error(a, b) + translation_distance(a.translation(), b.translation());
}

}  // namespace

void PipelineParams::validate() const {
  if (m_source < 3 || n_target < 3)
    throw ConfigError("pipeline: point budgets must be >= 3");
  if (!(voxel > 0.0) || !(lambda > 0.0) || !(alpha > 0.0) ||
      !(gt_threshold > 0.0) || !(crop_radius > 0.0))
    throw ConfigError("pipeline: scalar parameters must be positive");
  if (sinkhorn_k < 1) throw ConfigError("pipeline: sinkhorn_k must be >= 1");
}

DescriptorPairFn make_fpfh_descriptor(const FpfhParams& params, int normals_k) {
  return [params, normals_k](const PointCloud& x, const PointCloud& y) {
    PointCloud xs = x;
    PointCloud ys = y;
    if (!xs.has_normals())
      xs = estimate_normals(xs, normals_k, Vec3::Zero(), /*toward=*/false);
    if (!ys.has_normals())
      ys = estimate_normals(ys, normals_k, Vec3::Zero(), /*toward=*/true);
    return std::make_pair(fpfh(xs, params), fpfh(ys, params));
  };
}

DescriptorPairFn make_oracle_descriptor(const RigidTransform& gt, int dim, double sigma,
                                        std::uint64_t seed, double inlier_threshold) {
  return [gt, dim, sigma, seed, inlier_threshold](const PointCloud& x,
                                                  const PointCloud& y) {
    return oracle_descriptors(x, y, gt, dim, sigma, seed, inlier_threshold);
  };
}

PointCloud preprocess_cloud(const PointCloud& cloud, double voxel, Eigen::Index n,
                            std::uint64_t seed, bool* with_replacement) {
  return random_sample(voxel_downsample(cloud, voxel), n, seed, with_replacement);
}

RegistrationResult register_ot(const PointCloud& x, const PointCloud& y,
                               const DescriptorPairFn& descriptor,
                               const PipelineParams& params) {
  params.validate();
  if (x.size() < 3 || y.size() < 3)
    throw InsufficientCorrespondences("register_ot: need at least 3 points per cloud");
  const auto start = Clock::now();

  RegistrationResult result;
  result.method = params.matcher == Matcher::ot ? "ot" : "softmax";

  bool repl_x = false, repl_y = false;
  PointCloud xs = preprocess_cloud(x, params.voxel, params.m_source,
                                   mix_seed(params.seed, 1), &repl_x);
  PointCloud ys = preprocess_cloud(y, params.voxel, params.n_target,
                                   mix_seed(params.seed, 2), &repl_y);
  result.diagnostics["with_replacement_x"] = repl_x ? 1.0 : 0.0;
  result.diagnostics["with_replacement_y"] = repl_y ? 1.0 : 0.0;

  auto [fx, fy] = descriptor(xs, ys);
  MatX scores = score_map(fx, fy);
  const double min_prob = 2.0 / static_cast<double>(xs.size() + ys.size());

  if (params.matcher == Matcher::ot) {
    SinkhornOptions<double> opts;
    opts.lambda = params.lambda;
    opts.iterations = params.sinkhorn_k;
    auto sk = sinkhorn_log(augment_scores(scores, params.alpha), opts);
    result.diagnostics["marginal_residual"] = sk.marginal_residual;
    result.diagnostics["iterations"] = static_cast<double>(sk.iterations_run);
    result.correspondences = extract_correspondences(sk.plan, min_prob);
  } else {
    // Each observed point distributes over the source candidates.
    MatX prob = row_softmax(MatX(scores.transpose()));
    result.diagnostics["iterations"] = 0.0;
    for (Eigen::Index j = 0; j < prob.rows(); ++j) {
      Eigen::Index i_star = 0;
      double w = prob.row(j).maxCoeff(&i_star);
      if (w >= min_prob)
        result.correspondences.push_back(
            {static_cast<int>(i_star), static_cast<int>(j), w});
    }
  }

  if (result.correspondences.size() < 3)
    throw InsufficientCorrespondences(
        "register_ot: only " + std::to_string(result.correspondences.size()) +
        " correspondences survived");

  Pairing p = gather(xs, ys, result.correspondences);
  result.pose = kabsch(p.src, p.tgt, p.weights);
  result.diagnostics["inlier_count"] =
      static_cast<double>(result.correspondences.size());

  if (params.refine_icp) {
    RegistrationResult refined = register_icp(xs, ys, result.pose);
    result.pose = refined.pose;
    result.diagnostics["refine_iterations"] = refined.diagnostics.at("iterations");
  }

  result.wall_time = seconds_since(start);
  return result;
}

RegistrationResult register_icp(const PointCloud& x, const PointCloud& y,
                                const RigidTransform& init, int max_iter, double tol) {
  if (x.empty() || y.empty())
    throw DegenerateInput("register_icp: empty cloud");
  const auto start = Clock::now();

  RegistrationResult result;
  result.method = "icp";
  result.pose = init;

  KdTree tree(x.points);
  Points src(y.size(), 3);
  Points tgt = y.points;
  int it = 0;
  for (; it < max_iter; ++it) {
    // Nearest transformed source point for each target point, found by
    // pulling the target back through the current pose.
    const RigidTransform inv = result.pose.inverse();
    for (Eigen::Index j = 0; j < y.size(); ++j) {
      const Vec3 q = inv * Vec3(y.points.row(j));
      src.row(j) = x.points.row(tree.nearest(q).index);
    }
    RigidTransform next;
    try {
      next = kabsch(src, tgt);
    } catch (const DegenerateInput&) {
      break;  // collapsed correspondence set; keep the last valid pose
    }
    const double delta = pose_delta(next, result.pose);
    result.pose = next;
    if (delta < tol) {
      ++it;
      break;
    }
  }

  result.diagnostics["iterations"] = static_cast<double>(it);
  double rms = 0.0;
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    const Vec3 q = result.pose.inverse() * Vec3(y.points.row(j));
    rms += tree.nearest(q).squared_distance;
  }
  result.diagnostics["mean_squared_residual"] = rms / static_cast<double>(y.size());
  result.wall_time = seconds_since(start);
  return result;
}

RegistrationResult register_ransac(const PointCloud& x, const PointCloud& y,
                                   const DescriptorPairFn& descriptor, int iters,
                                   double inlier_threshold, std::uint64_t rng_seed) {
  if (x.size() < 3 || y.size() < 3)
    throw InsufficientCorrespondences("register_ransac: need at least 3 points");
  if (iters < 1) throw DegenerateInput("register_ransac: iters must be >= 1");
  if (!(inlier_threshold > 0.0))
    throw DegenerateInput("register_ransac: inlier_threshold must be positive");
  const auto start = Clock::now();

  auto [fx, fy] = descriptor(x, y);
  MatX gram = score_map(fx, fy);
  VecX nx = fx.rowwise().squaredNorm();
  VecX ny = fy.rowwise().squaredNorm();

  // Mutual nearest neighbors under descriptor L2 distance; the shared Gram
  // matrix makes both directions one pass each.
  std::vector<int> best_j(gram.rows()), best_i(gram.cols());
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    Eigen::Index j = 0;
    (ny.transpose().array() - 2.0 * gram.row(i).array()).minCoeff(&j);
    best_j[i] = static_cast<int>(j);
  }
  for (Eigen::Index j = 0; j < gram.cols(); ++j) {
    Eigen::Index i = 0;
    (nx.array() - 2.0 * gram.col(j).array()).minCoeff(&i);
    best_i[j] = static_cast<int>(i);
  }
  std::vector<Correspondence> putative;
  for (Eigen::Index i = 0; i < gram.rows(); ++i)
    if (best_i[best_j[i]] == i)
      putative.push_back({static_cast<int>(i), best_j[i], 1.0});

  if (putative.size() < 3)
    throw InsufficientCorrespondences("register_ransac: fewer than 3 mutual matches");

  const double thr2 = inlier_threshold * inlier_threshold;
  auto count_inliers = [&](const RigidTransform& t, std::vector<int>* keep) {
    int n = 0;
    for (std::size_t k = 0; k < putative.size(); ++k) {
      const Vec3 moved = t * Vec3(x.points.row(putative[k].i));
      if ((moved - Vec3(y.points.row(putative[k].j))).squaredNorm() <= thr2) {
        ++n;
        if (keep) keep->push_back(static_cast<int>(k));
      }
    }
    return n;
  };

  Rng rng(rng_seed);
  RigidTransform best_pose = RigidTransform::Identity();
  int best_count = -1;
  Points hs(3, 3), ht(3, 3);
  for (int it = 0; it < iters; ++it) {
    int a = static_cast<int>(rng.below(putative.size()));
    int b, c;
    do b = static_cast<int>(rng.below(putative.size())); while (b == a);
    do c = static_cast<int>(rng.below(putative.size())); while (c == a || c == b);
    for (int s = 0; s < 3; ++s) {
      const Correspondence& m = putative[static_cast<std::size_t>(s == 0 ? a : s == 1 ? b : c)];
      hs.row(s) = x.points.row(m.i);
      ht.row(s) = y.points.row(m.j);
    }
    RigidTransform hyp;
    try {
      hyp = kabsch(hs, ht);
    } catch (const DegenerateInput&) {
      continue;  // collinear minimal sample
    }
    const int n = count_inliers(hyp, nullptr);
    if (n > best_count) {
      best_count = n;
      best_pose = hyp;
    }
  }

  RegistrationResult result;
  result.method = "ransac";
  result.diagnostics["putative_count"] = static_cast<double>(putative.size());
  result.diagnostics["iterations"] = static_cast<double>(iters);

  std::vector<int> inliers;
  if (best_count >= 3) {
    count_inliers(best_pose, &inliers);
    Points rs(inliers.size(), 3), rt(inliers.size(), 3);
    for (std::size_t k = 0; k < inliers.size(); ++k) {
      const Correspondence& m = putative[static_cast<std::size_t>(inliers[k])];
      rs.row(k) = x.points.row(m.i);
      rt.row(k) = y.points.row(m.j);
      result.correspondences.push_back(m);
    }
    try {
      result.pose = kabsch(rs, rt);
    } catch (const DegenerateInput&) {
      result.pose = best_pose;
    }
  } else {
    result.pose = best_pose;
  }
  result.diagnostics["inlier_count"] = static_cast<double>(std::max(best_count, 0));
  result.wall_time = seconds_since(start);
  return result;
}

}  // namespace occlureg
