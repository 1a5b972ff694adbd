#include "d3gd/weight_design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace d3gd {

namespace {

// (I - 1 pi^T) diag(Ydiag)^{-1} GradStack, the demeaned rescaled gradients
Eigen::MatrixXd demeaned_rescaled_grads(const DesignContext& ctx) {
  Eigen::MatrixXd V = ctx.Ydiag.cwiseInverse().asDiagonal() * ctx.GradStack;
  const Eigen::RowVectorXd mean = ctx.pi.transpose() * V;
  V.rowwise() -= mean;
  return V;
}

void check_ctx(const DesignContext& ctx) {
  if (ctx.Ydiag.size() != ctx.Theta.rows() || ctx.pi.size() != ctx.Theta.rows() ||
      ctx.GradStack.rows() != ctx.Theta.rows() || ctx.GradStack.cols() != ctx.Theta.cols())
    throw std::invalid_argument("DesignContext: inconsistent dimensions");
  if (ctx.Ydiag.minCoeff() <= 0.0)
    throw std::invalid_argument("DesignContext: Y diagonal must be strictly positive");
}

}  // namespace

double design_value(const Eigen::MatrixXd& A, const DesignContext& ctx) {
  check_ctx(ctx);
  const Eigen::Index n = ctx.Theta.rows();
  if (A.rows() != n || A.cols() != n)
    throw std::invalid_argument("design_value: weight matrix has wrong shape");
  const Eigen::MatrixXd deviation =
      (A - Eigen::VectorXd::Ones(n) * ctx.pi.transpose()) * ctx.Theta;
  const Eigen::MatrixXd W = demeaned_rescaled_grads(ctx);
  return deviation.squaredNorm() -
         (2.0 * ctx.gamma / static_cast<double>(n)) * deviation.cwiseProduct(W).sum();
}

double conservative_design_value(const Eigen::MatrixXd& Abar, const DesignContext& ctx) {
  return design_value((1.0 - ctx.delta) * Abar + ctx.delta * ctx.A0.weights(), ctx);
}

Eigen::VectorXd row_gradient_exact(int i, const Eigen::MatrixXd& Abar, const DesignContext& ctx,
                                   RowGradientVariant variant) {
  check_ctx(ctx);
  const Eigen::Index n = ctx.Theta.rows();
  const double mix_factor = 1.0 - ctx.delta;

  // row i of the mixed matrix minus pi, mapped through Theta
  const Eigen::VectorXd mixed_row =
      mix_factor * Abar.row(i).transpose() + ctx.delta * ctx.A0.weights().row(i).transpose();
  const Eigen::VectorXd residual = ctx.Theta.transpose() * (mixed_row - ctx.pi);

  // row i of (I - 1 pi^T) diag(Ydiag)^{-1} GradStack
  const Eigen::MatrixXd V = ctx.Ydiag.cwiseInverse().asDiagonal() * ctx.GradStack;
  const Eigen::VectorXd w_i = V.row(i).transpose() - V.transpose() * ctx.pi;

  const double quad_factor = (variant == RowGradientVariant::chain_rule) ? mix_factor : 1.0;
  const Eigen::VectorXd combined =
      2.0 * quad_factor * residual -
      (2.0 * ctx.gamma * mix_factor / static_cast<double>(n)) * w_i;

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
  for (int j : ctx.A0.graph().in_neighbors(i)) grad(j) = ctx.Theta.row(j).dot(combined);
  return grad;
}

Eigen::VectorXd row_gradient_central(int i, const Eigen::MatrixXd& Abar,
                                     const DesignContext& ctx) {
  check_ctx(ctx);
  const Eigen::Index n = ctx.Theta.rows();
  const double mix_factor = 1.0 - ctx.delta;

  const Eigen::VectorXd z_star = ctx.Theta.transpose() * ctx.pi;
  const Eigen::VectorXd q_star = ctx.GradStack.transpose() * ctx.pi;
  const Eigen::VectorXd mixed_row =
      mix_factor * Abar.row(i).transpose() + ctx.delta * ctx.A0.weights().row(i).transpose();
  const Eigen::VectorXd mixed = ctx.Theta.transpose() * mixed_row;
  const double scale = ctx.gamma * mix_factor / (static_cast<double>(n) * ctx.Ydiag(i));
  const Eigen::VectorXd combined =
      2.0 * (mixed - z_star) - 2.0 * scale * (ctx.GradStack.row(i).transpose() - q_star);

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
  for (int j : ctx.A0.graph().in_neighbors(i)) grad(j) = ctx.Theta.row(j).dot(combined);
  return grad;
}

AgentView make_agent_view(int i, const DirectedGraph& g, const Eigen::MatrixXd& Theta,
                          const Eigen::MatrixXd& GradStack, const Eigen::MatrixXd& Y,
                          const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Q,
                          const Eigen::MatrixXd& Abar, const MixingMatrix& A0, double gamma,
                          double eta, double delta) {
  AgentView view;
  view.agent = i;
  view.n = g.size();
  view.gamma = gamma;
  view.eta = eta;
  view.delta = delta;
  view.y_ii = Y(i, i);
  view.neighbors = g.in_neighbors(i);
  view.theta_neighbors.resize(static_cast<Eigen::Index>(view.neighbors.size()), Theta.cols());
  for (std::size_t t = 0; t < view.neighbors.size(); ++t)
    view.theta_neighbors.row(static_cast<Eigen::Index>(t)) = Theta.row(view.neighbors[t]);
  view.abar_row = Abar.row(i).transpose();
  view.a0_row = A0.weights().row(i).transpose();
  view.z = Z.row(i).transpose();
  view.q = Q.row(i).transpose();
  view.grad_own = GradStack.row(i).transpose();
  return view;
}

Eigen::VectorXd row_gradient_surrogate(const AgentView& view) {
  if (view.y_ii <= 0.0)
    throw std::runtime_error("row_gradient_surrogate: nonpositive Y diagonal at agent " +
                             std::to_string(view.agent));
  const double mix_factor = 1.0 - view.delta;

  // sum over in-neighbors of the mixed row applied to their parameters
  Eigen::VectorXd mixed = Eigen::VectorXd::Zero(view.theta_neighbors.cols());
  for (std::size_t t = 0; t < view.neighbors.size(); ++t) {
    const int j = view.neighbors[t];
    const double a = mix_factor * view.abar_row(j) + view.delta * view.a0_row(j);
    mixed += a * view.theta_neighbors.row(static_cast<Eigen::Index>(t)).transpose();
  }
  const double scale = view.gamma * mix_factor / (static_cast<double>(view.n) * view.y_ii);
  const Eigen::VectorXd combined =
      2.0 * (mixed - view.z) - 2.0 * scale * (view.grad_own - view.q);

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(view.n);
  for (std::size_t t = 0; t < view.neighbors.size(); ++t)
    grad(view.neighbors[t]) =
        view.theta_neighbors.row(static_cast<Eigen::Index>(t)) * combined;
  return grad;
}

Eigen::VectorXd project_row_simplex(const Eigen::VectorXd& v, const std::vector<int>& support) {
  if (support.empty()) throw std::invalid_argument("project_row_simplex: empty support");
  const std::size_t m = support.size();
  std::vector<std::pair<double, int>> vals;
  vals.reserve(m);
  for (int idx : support) {
    if (idx < 0 || idx >= v.size())
      throw std::invalid_argument("project_row_simplex: support index out of range");
    vals.emplace_back(v(idx), idx);
  }
  std::sort(vals.begin(), vals.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });

  // t = 0 always qualifies (v_max - (v_max - 1) = 1 > 0), so tau is well defined
  double running = 0.0;
  double tau = vals.front().first - 1.0;
  for (std::size_t t = 0; t < m; ++t) {
    running += vals[t].first;
    const double candidate = (running - 1.0) / static_cast<double>(t + 1);
    if (vals[t].first - candidate > 0.0) tau = candidate;
  }

  Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
  for (int idx : support) out(idx) = std::max(v(idx) - tau, 0.0);
  return out;
}

RowUpdateResult row_update(int i, const Eigen::MatrixXd& Abar, const DesignContext& ctx,
                           double eta, RowGradientVariant variant, bool backtracking) {
  RowUpdateResult result;
  result.row = Abar.row(i).transpose();
  if (eta == 0.0) {
    result.eta_used = 0.0;
    return result;
  }
  const Eigen::VectorXd grad = row_gradient_exact(i, Abar, ctx, variant);
  if (grad.isZero(0.0)) {
    result.eta_used = eta;
    return result;
  }
  const std::vector<int>& support = ctx.A0.graph().in_neighbors(i);

  if (!backtracking) {
    result.row = project_row_simplex(result.row - eta * grad, support);
    result.eta_used = eta;
    return result;
  }

  const double before = conservative_design_value(Abar, ctx);
  Eigen::MatrixXd candidate = Abar;
  double step = eta;
  for (int attempt = 0; attempt < 20; ++attempt) {
    candidate.row(i) = project_row_simplex(Abar.row(i).transpose() - step * grad, support);
    if (conservative_design_value(candidate, ctx) <= before) {
      result.row = candidate.row(i).transpose();
      result.eta_used = step;
      result.backtracks = attempt;
      return result;
    }
    step *= 0.5;
  }
  // no decrease found; keep the row
  result.eta_used = 0.0;
  result.backtracks = 20;
  return result;
}

MixingMatrix mix_conservative(const Eigen::MatrixXd& Abar, const MixingMatrix& A0, double delta) {
  const int n = A0.size();
  if (Abar.rows() != n || Abar.cols() != n)
    throw std::invalid_argument("mix_conservative: shape mismatch");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (Abar(i, j) != 0.0 && !A0.graph().has_edge(j, i))
        throw std::invalid_argument("mix_conservative: Abar leaves the support of A0");
  if (!(delta > 0.0) || delta > 1.0)
    throw std::invalid_argument("mix_conservative: delta must be in (0, 1]");
  if (delta == 1.0 || Abar == A0.weights()) return MixingMatrix(A0.graph_ptr(), A0.weights());
  return MixingMatrix(A0.graph_ptr(), (1.0 - delta) * Abar + delta * A0.weights());
}

}  // namespace d3gd
