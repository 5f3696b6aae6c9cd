#pragma once

#include <cmath>
#include <vector>

#include "occlureg/geometry.hpp"
#include "occlureg/types.hpp"

namespace occlureg {

// Matrix conventions, fixed throughout: descriptor matrices have one point
// per row. The score map S = fx * fy^T is M x N with source points X on the
// rows and target points Y on the columns. Augmented matrices carry the
// outlier bin as the extra last row (for unmatched targets) and last column
// (for unmatched sources).

template <typename S>
VectorX<S> row_logsumexp(const MatrixX<S>& m) {
  VectorX<S> out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const S hi = m.row(i).maxCoeff();
    out[i] = hi + std::log((m.row(i).array() - hi).exp().sum());
  }
  return out;
}

template <typename S>
VectorX<S> col_logsumexp(const MatrixX<S>& m) {
  VectorX<S> out(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const S hi = m.col(j).maxCoeff();
    out[j] = hi + std::log((m.col(j).array() - hi).exp().sum());
  }
  return out;
}

/// Row-stochastic softmax with max subtraction; every output row sums to 1.
template <typename S>
MatrixX<S> row_softmax(const MatrixX<S>& scores) {
  if (!scores.allFinite()) throw NonFiniteScores("row_softmax: non-finite scores");
  MatrixX<S> out(scores.rows(), scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const S hi = scores.row(i).maxCoeff();
    out.row(i) = ((scores.row(i).array() - hi).exp()).matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

/// S_{ij} = <fx_i, fy_j>.
template <typename S>
MatrixX<S> score_map(const MatrixX<S>& fx, const MatrixX<S>& fy) {
  if (fx.cols() != fy.cols())
    throw DimensionMismatch("score_map: descriptor dimensions differ");
  return fx * fy.transpose();
}

/// Pads S with one outlier row and column holding the constant alpha.
template <typename S>
MatrixX<S> augment_scores(const MatrixX<S>& scores, S alpha = S(0.01)) {
  if (!scores.allFinite()) throw NonFiniteScores("augment_scores: non-finite scores");
  MatrixX<S> out(scores.rows() + 1, scores.cols() + 1);
  out.topLeftCorner(scores.rows(), scores.cols()) = scores;
  out.row(scores.rows()).setConstant(alpha);
  out.col(scores.cols()).setConstant(alpha);
  return out;
}

/// Inverse of augment_scores: the inner M x N block.
template <typename S>
MatrixX<S> strip_augmentation(const MatrixX<S>& s_bar) {
  if (s_bar.rows() < 2 || s_bar.cols() < 2)
    throw DimensionMismatch("strip_augmentation: matrix too small");
  return s_bar.topLeftCorner(s_bar.rows() - 1, s_bar.cols() - 1);
}

/// Prescribed marginals for the augmented plan: a = [1_M^T, N]^T and
/// b = [1_N^T, M]^T, so each inner point carries unit mass and each bin can
/// absorb the whole other side.
template <typename S>
struct MarginalVectors {
  VectorX<S> a;
  VectorX<S> b;
};

template <typename S>
MarginalVectors<S> standard_marginals(Eigen::Index m, Eigen::Index n) {
  if (m < 1 || n < 1) throw DimensionMismatch("standard_marginals: need m, n >= 1");
  MarginalVectors<S> mv;
  mv.a = VectorX<S>::Ones(m + 1);
  mv.a[m] = static_cast<S>(n);
  mv.b = VectorX<S>::Ones(n + 1);
  mv.b[n] = static_cast<S>(m);
  return mv;
}

template <typename S>
struct SinkhornOptions {
  S lambda = S(0.5);
  int iterations = 50;
  /// When > 0, stop once the marginal residual falls below it.
  S early_stop_tol = S(0);
  /// When set, primal_trace and dual_trace are filled per full iteration.
  bool record_objective = false;
};

template <typename S>
struct SinkhornResult {
  MatrixX<S> plan;  // (M+1) x (N+1)
  VectorX<S> f, g;  // duals in score units: plan = exp((s_bar + f (+) g) / lambda)
  int iterations_run = 0;
  S marginal_residual = S(0);
  /// Primal entropic objective <S, P> + lambda * E(P) per iteration. Not
  /// monotone: the zero-dual start is the unconstrained maximizer.
  std::vector<S> primal_trace;
  /// Lagrange dual lambda * (sum(P) - <u, a> - <v, b>); an upper bound on the
  /// primal, nonincreasing under the alternating updates and meeting the
  /// primal at convergence.
  std::vector<S> dual_trace;
};

/// <S, P> + lambda * E(P) with E(P) = -sum P (log P - 1).
template <typename S>
S entropic_objective(const MatrixX<S>& s_bar, const MatrixX<S>& plan, S lambda) {
  S entropy = S(0);
  for (Eigen::Index j = 0; j < plan.cols(); ++j)
    for (Eigen::Index i = 0; i < plan.rows(); ++i) {
      const S p = plan(i, j);
      if (p > S(0)) entropy -= p * (std::log(p) - S(1));
    }
  return (s_bar.array() * plan.array()).sum() + lambda * entropy;
}

template <typename S>
S marginal_residual_of(const MatrixX<S>& plan, const MarginalVectors<S>& mv) {
  const S row_err = (plan.rowwise().sum() - mv.a).cwiseAbs().maxCoeff();
  const S col_err = (plan.colwise().sum().transpose() - mv.b).cwiseAbs().maxCoeff();
  return row_err + col_err;
}

/// Log-domain Sinkhorn for the entropic assignment problem: maximize
/// <s_bar, P> + lambda * E(P) over plans with the standard marginals. Scaled
/// duals u, v alternate; u = log a - rowLSE(T + v), v = log b - colLSE(T + u)
/// with T = s_bar / lambda, and the plan is recovered as exp(T + u (+) v).
template <typename S>
SinkhornResult<S> sinkhorn_log(const MatrixX<S>& s_bar,
                               const SinkhornOptions<S>& opt = {}) {
  if (s_bar.rows() < 2 || s_bar.cols() < 2)
    throw DimensionMismatch("sinkhorn_log: augmented matrix must be at least 2x2");
  if (!s_bar.allFinite()) throw NonFiniteScores("sinkhorn_log: non-finite scores");
  if (!(opt.lambda > S(0))) throw DegenerateInput("sinkhorn_log: lambda must be > 0");
  if (opt.iterations < 1) throw DegenerateInput("sinkhorn_log: need >= 1 iteration");

  const Eigen::Index rows = s_bar.rows(), cols = s_bar.cols();
  const auto mv = standard_marginals<S>(rows - 1, cols - 1);
  VectorX<S> log_a = VectorX<S>::Zero(rows);
  log_a[rows - 1] = std::log(static_cast<S>(cols - 1));
  VectorX<S> log_b = VectorX<S>::Zero(cols);
  log_b[cols - 1] = std::log(static_cast<S>(rows - 1));

  const MatrixX<S> t = s_bar / opt.lambda;
  VectorX<S> u = VectorX<S>::Zero(rows);
  VectorX<S> v = VectorX<S>::Zero(cols);

  SinkhornResult<S> result;
  const auto materialize = [&]() -> MatrixX<S> {
    return (((t.colwise() + u).rowwise() + v.transpose()).array().exp()).matrix();
  };

  for (int l = 1; l <= opt.iterations; ++l) {
    u = log_a - row_logsumexp<S>(t.rowwise() + v.transpose());
    v = log_b - col_logsumexp<S>(t.colwise() + u);
    result.iterations_run = l;
    if (opt.record_objective) {
      const MatrixX<S> plan = materialize();
      result.primal_trace.push_back(entropic_objective<S>(s_bar, plan, opt.lambda));
      result.dual_trace.push_back(opt.lambda * (plan.sum() - u.dot(mv.a) - v.dot(mv.b)));
    }
    if (opt.early_stop_tol > S(0) && marginal_residual_of<S>(materialize(), mv) < opt.early_stop_tol)
      break;
  }

  result.plan = materialize();
  result.f = opt.lambda * u;
  result.g = opt.lambda * v;
  result.marginal_residual = marginal_residual_of<S>(result.plan, mv);
  return result;
}

/// Eq.-style negative log-likelihood: -sum log(P_ij) M_ij / sum M_ij with P
/// clamped below by 1e-30. P may be the full augmented plan or the inner
/// softmax block; M must match its shape.
template <typename S>
S nll_loss(const MatrixX<S>& p, const MatrixX<S>& m) {
  if (p.rows() != m.rows() || p.cols() != m.cols())
    throw DimensionMismatch("nll_loss: shape mismatch");
  S mass = S(0), loss = S(0);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (m(i, j) == S(0)) continue;
      mass += m(i, j);
      loss -= m(i, j) * std::log(std::max(p(i, j), S(1e-30)));
    }
  if (mass == S(0)) throw EmptyGroundTruth("nll_loss: ground truth has no entries");
  return loss / mass;
}

/// Exact reverse-mode gradient of nll_loss(sinkhorn_log(s_bar).plan, m_bar)
/// with respect to every entry of s_bar, obtained by unrolling the fixed
/// iteration count. The early-stop option is ignored here on purpose: the
/// forward pass being differentiated is the fixed-k loop.
template <typename S>
MatrixX<S> sinkhorn_grad(const MatrixX<S>& s_bar, const MatrixX<S>& m_bar,
                         const SinkhornOptions<S>& opt = {}) {
  if (s_bar.rows() != m_bar.rows() || s_bar.cols() != m_bar.cols())
    throw DimensionMismatch("sinkhorn_grad: shape mismatch");
  if (s_bar.rows() < 2 || s_bar.cols() < 2)
    throw DimensionMismatch("sinkhorn_grad: augmented matrix must be at least 2x2");
  if (!s_bar.allFinite()) throw NonFiniteScores("sinkhorn_grad: non-finite scores");
  if (!(opt.lambda > S(0))) throw DegenerateInput("sinkhorn_grad: lambda must be > 0");
  if (opt.iterations < 1) throw DegenerateInput("sinkhorn_grad: need >= 1 iteration");

  const Eigen::Index rows = s_bar.rows(), cols = s_bar.cols();
  const int k = opt.iterations;
  VectorX<S> log_a = VectorX<S>::Zero(rows);
  log_a[rows - 1] = std::log(static_cast<S>(cols - 1));
  VectorX<S> log_b = VectorX<S>::Zero(cols);
  log_b[cols - 1] = std::log(static_cast<S>(rows - 1));

  const MatrixX<S> t = s_bar / opt.lambda;

  // Forward pass, keeping every dual iterate: us[l] = u^(l) for l = 1..k,
  // vs[l] = v^(l) for l = 0..k (v^(0) = 0).
  std::vector<VectorX<S>> us(static_cast<std::size_t>(k) + 1);
  std::vector<VectorX<S>> vs(static_cast<std::size_t>(k) + 1);
  vs[0] = VectorX<S>::Zero(cols);
  for (int l = 1; l <= k; ++l) {
    us[static_cast<std::size_t>(l)] =
        log_a - row_logsumexp<S>(t.rowwise() + vs[static_cast<std::size_t>(l - 1)].transpose());
    vs[static_cast<std::size_t>(l)] =
        log_b - col_logsumexp<S>(t.colwise() + us[static_cast<std::size_t>(l)]);
  }

  // Loss in terms of the final duals: L = -sum M (T + u (+) v) / sum M.
  const S mass = m_bar.sum();
  if (mass == S(0)) throw EmptyGroundTruth("sinkhorn_grad: ground truth has no entries");
  MatrixX<S> t_bar = -m_bar / mass;
  VectorX<S> u_bar = -m_bar.rowwise().sum() / mass;
  VectorX<S> v_bar = -m_bar.colwise().sum().transpose() / mass;

  for (int l = k; l >= 1; --l) {
    const VectorX<S>& u_l = us[static_cast<std::size_t>(l)];
    const VectorX<S>& v_l = vs[static_cast<std::size_t>(l)];
    const VectorX<S>& v_prev = vs[static_cast<std::size_t>(l - 1)];

    // v^(l)_j = log_b_j - LSE_i(T_ij + u^(l)_i). The LSE's softmax weights
    // are W_ij = exp(T_ij + u_i - (log_b_j - v_j)).
    const MatrixX<S> w =
        (((t.colwise() + u_l).rowwise() + (v_l - log_b).transpose()).array().exp()).matrix();
    t_bar.noalias() -= w * v_bar.asDiagonal();
    u_bar.noalias() -= w * v_bar;

    // u^(l)_i = log_a_i - LSE_j(T_ij + v^(l-1)_j), softmax weights
    // V_ij = exp(T_ij + v^(l-1)_j - (log_a_i - u_i)).
    const MatrixX<S> q =
        (((t.rowwise() + v_prev.transpose()).colwise() + (u_l - log_a)).array().exp()).matrix();
    t_bar.noalias() -= u_bar.asDiagonal() * q;
    v_bar = -(q.transpose() * u_bar);
    u_bar.setZero();
  }

  return t_bar / opt.lambda;
}

/// Ground-truth correspondence matrix per the 0.05-threshold construction
/// with the forward-backward (mutual nearest neighbor) check: the inner
/// M x N block is a partial permutation; unmatched source rows point at the
/// outlier column, unmatched target columns at the outlier row.
MatX gt_correspondences(const PointCloud& x, const PointCloud& y,
                        const RigidTransform& gt, double threshold = 0.05);

struct Correspondence {
  int i = 0;  // source row
  int j = 0;  // target column
  double weight = 0.0;
};

/// Per inner source row i: j* = argmax over inner columns, kept iff the entry
/// is at least min_prob and survives a forward-backward check (row i is also
/// column j*'s argmax). min_prob < 0 selects the default 2 / (M + N), twice
/// the uniform-plan level. The bin entry itself is never a useful cut: its
/// roomy marginal hands it roughly half of every row at equilibrium, so even
/// confident matches sit far below it; the floor plus the mutual test is what
/// separates matched rows from ones the transport routed to the bin.
std::vector<Correspondence> extract_correspondences(const MatX& plan,
                                                    double min_prob = -1.0);

}  // namespace occlureg
