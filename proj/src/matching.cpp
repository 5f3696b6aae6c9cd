#include "occlureg/matching.hpp"

#include <vector>

#include "occlureg/kdtree.hpp"

namespace occlureg {

MatX gt_correspondences(const PointCloud& x, const PointCloud& y,
                        const RigidTransform& gt, double threshold) {
  if (x.empty() || y.empty()) throw DegenerateInput("gt_correspondences: empty cloud");
  if (threshold <= 0.0) throw DegenerateInput("gt_correspondences: threshold must be > 0");

  const Points tx = apply_transform(gt, x.points);
  const KdTree tree_y(y.points);
  const KdTree tree_x(tx);

  const Eigen::Index m = x.size(), n = y.size();
  MatX mat = MatX::Zero(m + 1, n + 1);
  std::vector<int> nearest_x(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j)
    nearest_x[static_cast<std::size_t>(j)] = tree_x.nearest(y.points.row(j)).index;

  std::vector<char> row_matched(static_cast<std::size_t>(m), 0);
  std::vector<char> col_matched(static_cast<std::size_t>(n), 0);
  const double thr2 = threshold * threshold;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto nb = tree_y.nearest(tx.row(i));
    if (nb.squared_distance <= thr2 &&
        nearest_x[static_cast<std::size_t>(nb.index)] == static_cast<int>(i)) {
      mat(i, nb.index) = 1.0;
      row_matched[static_cast<std::size_t>(i)] = 1;
      col_matched[static_cast<std::size_t>(nb.index)] = 1;
    }
  }
  for (Eigen::Index i = 0; i < m; ++i)
    if (!row_matched[static_cast<std::size_t>(i)]) mat(i, n) = 1.0;
  for (Eigen::Index j = 0; j < n; ++j)
    if (!col_matched[static_cast<std::size_t>(j)]) mat(m, j) = 1.0;
  return mat;
}

std::vector<Correspondence> extract_correspondences(const MatX& plan, double min_prob) {
  const Eigen::Index m = plan.rows() - 1, n = plan.cols() - 1;
  if (m < 1 || n < 1) throw DimensionMismatch("extract_correspondences: plan too small");
  if (min_prob < 0.0) min_prob = 2.0 / static_cast<double>(m + n);

  std::vector<Correspondence> out;
  for (Eigen::Index i = 0; i < m; ++i) {
    Eigen::Index j_star = 0;
    const double w = plan.row(i).head(n).maxCoeff(&j_star);
    if (w < min_prob) continue;
    // Forward-backward check: the column must point back at this row, which
    // rejects rows whose best entry is merely the largest of their noise.
    Eigen::Index i_back = 0;
    plan.col(j_star).head(m).maxCoeff(&i_back);
    if (i_back == i) out.push_back({static_cast<int>(i), static_cast<int>(j_star), w});
  }
  return out;
}

}  // namespace occlureg
