#pragma once

#include <Eigen/Dense>
#include <vector>

#include "d3gd/mixing.hpp"

namespace d3gd {

// Frozen snapshot of everything the per-iteration weight design reads.
// Theta and GradStack are the iteration-k values; pi is the Perron vector of
// the mixing matrix currently in use and stays fixed while this context
// lives. delta is the conservative mixing weight pulling designs toward A0.
struct DesignContext {
  const Eigen::MatrixXd& Theta;      // n x D
  const Eigen::MatrixXd& GradStack;  // n x D
  Eigen::VectorXd Ydiag;             // length n, strictly positive
  Eigen::VectorXd pi;                // length n
  double gamma = 0.0;
  double delta = 0.0;
  const MixingMatrix& A0;
};

// Design objective for a candidate weight matrix A at the current iterate:
//   || (A - 1 pi^T) Theta ||_F^2
//   - (2 gamma / n) < (A - 1 pi^T) Theta, (I - 1 pi^T) diag(Ydiag)^{-1} GradStack >
// Evaluation is permitted on infeasible A (handy for tests).
double design_value(const Eigen::MatrixXd& A, const DesignContext& ctx);

// Conservative variant: the objective evaluated at (1-delta) Abar + delta A0.
double conservative_design_value(const Eigen::MatrixXd& Abar, const DesignContext& ctx);

// `chain_rule` is the analytic derivative of the conservative objective
// (global (1-delta) factor on both terms). `as_printed` drops the (1-delta)
// factor from the quadratic term; kept selectable for comparison runs.
enum class RowGradientVariant { chain_rule, as_printed };

// Gradient of the conservative objective with respect to row i of Abar,
// supported on in_neighbors(i); zero elsewhere.
Eigen::VectorXd row_gradient_exact(int i, const Eigen::MatrixXd& Abar, const DesignContext& ctx,
                                   RowGradientVariant variant = RowGradientVariant::chain_rule);

// Same functional form as the decentralized surrogate, but fed with the
// globally computed aggregates z* = Theta^T pi and q* = GradStack^T pi.
Eigen::VectorXd row_gradient_central(int i, const Eigen::MatrixXd& Abar,
                                     const DesignContext& ctx);

// Everything agent i may read when refining its own row without global
// information: its in-neighbors' parameter rows plus its own tracker rows,
// design row, initial row, gradient and Y diagonal entry. Holds copies.
struct AgentView {
  int agent = -1;
  int n = 0;
  double gamma = 0.0;
  double eta = 0.0;
  double delta = 0.0;
  double y_ii = 0.0;
  std::vector<int> neighbors;       // in-neighbors, includes the agent itself
  Eigen::MatrixXd theta_neighbors;  // |neighbors| x D, rows follow `neighbors`
  Eigen::VectorXd abar_row;         // length n, supported on neighbors
  Eigen::VectorXd a0_row;           // length n, supported on neighbors
  Eigen::VectorXd z;                // length D
  Eigen::VectorXd q;                // length D
  Eigen::VectorXd grad_own;         // length D
};

AgentView make_agent_view(int i, const DirectedGraph& g, const Eigen::MatrixXd& Theta,
                          const Eigen::MatrixXd& GradStack, const Eigen::MatrixXd& Y,
                          const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Q,
                          const Eigen::MatrixXd& Abar, const MixingMatrix& A0, double gamma,
                          double eta, double delta);

// Tracker-based row gradient, computable from 1-hop information only.
Eigen::VectorXd row_gradient_surrogate(const AgentView& view);

// Euclidean projection onto {a >= 0, sum over support = 1, zero off support}
// via the sort-based simplex algorithm on the support coordinates. Ties are
// broken by (value, index) for determinism.
Eigen::VectorXd project_row_simplex(const Eigen::VectorXd& v, const std::vector<int>& support);

struct RowUpdateResult {
  Eigen::VectorXd row;
  double eta_used = 0.0;
  int backtracks = 0;
};

// One projected gradient step on row i of Abar using the exact gradient.
// With backtracking enabled, eta is halved (at most 20 times) until the
// conservative objective does not increase.
RowUpdateResult row_update(int i, const Eigen::MatrixXd& Abar, const DesignContext& ctx,
                           double eta, RowGradientVariant variant = RowGradientVariant::chain_rule,
                           bool backtracking = false);

// A = (1-delta) Abar + delta A0. Abar must be row-stochastic on A0's support;
// the result inherits A0's support with strictly positive weights. When Abar
// equals A0's weights the combination short-circuits to A0 exactly.
MixingMatrix mix_conservative(const Eigen::MatrixXd& Abar, const MixingMatrix& A0, double delta);

}  // namespace d3gd
