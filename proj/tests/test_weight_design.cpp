#include <doctest.h>

#include <cmath>
#include <vector>

#include "d3gd/didgd.hpp"
#include "d3gd/rng.hpp"
#include "d3gd/weight_design.hpp"

using namespace d3gd;

namespace {

// exhaustive active-set oracle: try every support subset, solve the
// equality-constrained projection in closed form, keep the best feasible one
Eigen::VectorXd qp_projection_oracle(const Eigen::VectorXd& v, const std::vector<int>& support) {
  const std::size_t m = support.size();
  Eigen::VectorXd best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 1; mask < (1u << m); ++mask) {
    std::vector<int> active;
    for (std::size_t t = 0; t < m; ++t)
      if (mask & (1u << t)) active.push_back(support[t]);
    double sum = 0.0;
    for (int idx : active) sum += v(idx);
    const double shift = (1.0 - sum) / static_cast<double>(active.size());
    Eigen::VectorXd candidate = Eigen::VectorXd::Zero(v.size());
    bool feasible = true;
    for (int idx : active) {
      candidate(idx) = v(idx) + shift;
      if (candidate(idx) < -1e-12) feasible = false;
    }
    if (!feasible) continue;
    for (int idx : active) candidate(idx) = std::max(candidate(idx), 0.0);
    const double dist = (candidate - v).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best = candidate;
    }
  }
  return best;
}

struct RandomContext {
  Eigen::MatrixXd Theta, Grads;
  Eigen::VectorXd Ydiag, pi;
  MixingMatrix A0;
  Eigen::MatrixXd Abar;
  double gamma, delta;

  DesignContext ctx() const { return {Theta, Grads, Ydiag, pi, gamma, delta, A0}; }
};

RandomContext random_context(int n, int D, std::uint64_t seed, bool unit_ydiag = false) {
  const auto g = generate_er_digraph(n, 0.6, seed);
  MixingMatrix A0 = metropolis_weights(g);
  Rng rng(seed, StreamPurpose::misc, 1234);
  Eigen::MatrixXd Theta(n, D), Grads(n, D);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < D; ++c) {
      Theta(i, c) = rng.normal();
      Grads(i, c) = rng.normal();
    }
  Eigen::VectorXd Ydiag(n);
  for (int i = 0; i < n; ++i) Ydiag(i) = unit_ydiag ? 1.0 : 0.2 + rng.uniform();
  Eigen::VectorXd pi = perron_vector(A0);

  // a random feasible design matrix on the same support
  Eigen::MatrixXd Abar = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j : g.in_neighbors(i)) {
      Abar(i, j) = 0.1 + rng.uniform();
      sum += Abar(i, j);
    }
    for (int j : g.in_neighbors(i)) Abar(i, j) /= sum;
  }
  return {std::move(Theta), std::move(Grads), std::move(Ydiag), std::move(pi),
          std::move(A0),    std::move(Abar),  0.1,              0.2};
}

// finite differences of the conservative objective over row i's support
Eigen::VectorXd fd_row_gradient(const RandomContext& rc, int i, double h = 1e-6) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(rc.Abar.cols());
  Eigen::MatrixXd probe = rc.Abar;
  for (int j : rc.A0.graph().in_neighbors(i)) {
    probe(i, j) = rc.Abar(i, j) + h;
    const double up = conservative_design_value(probe, rc.ctx());
    probe(i, j) = rc.Abar(i, j) - h;
    const double down = conservative_design_value(probe, rc.ctx());
    probe(i, j) = rc.Abar(i, j);
    grad(j) = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace

TEST_CASE("design value on special matrices") {
  RandomContext rc = random_context(3, 4, 2);

  // consensus parameters: rows all equal; the quadratic term vanishes for any
  // row-stochastic A
  RandomContext consensus = rc;
  for (int i = 0; i < 3; ++i) consensus.Theta.row(i) = rc.Theta.row(0);
  const Eigen::MatrixXd limit = Eigen::VectorXd::Ones(3) * rc.pi.transpose();
  const double at_limit = design_value(limit, consensus.ctx());
  CHECK(at_limit == 0.0);  // both factors vanish at A = 1 pi^T

  // quadratic part zero: value reduces to the linear term alone
  const Eigen::MatrixXd uniform_rows = consensus.A0.weights();
  const Eigen::MatrixXd dev = (uniform_rows - limit) * consensus.Theta;
  CHECK(dev.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("design value matches a term-by-term scalar oracle") {
  for (std::uint64_t seed = 3; seed < 8; ++seed) {
    RandomContext rc = random_context(3, 4, seed);
    const int n = 3, D = 4;
    const double J = design_value(rc.Abar, rc.ctx());

    // naive evaluation with index loops only
    double quad = 0.0, cross = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < D; ++c) {
        double dev = 0.0;
        for (int j = 0; j < n; ++j) dev += (rc.Abar(i, j) - rc.pi(j)) * rc.Theta(j, c);
        double w = rc.Grads(i, c) / rc.Ydiag(i);
        for (int j = 0; j < n; ++j) w -= rc.pi(j) * rc.Grads(j, c) / rc.Ydiag(j);
        quad += dev * dev;
        cross += dev * w;
      }
    }
    const double expect = quad - 2.0 * rc.gamma / n * cross;
    CHECK(J == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("conservative value limits in delta") {
  RandomContext rc = random_context(4, 3, 5);
  DesignContext ctx = rc.ctx();

  // delta = 1 collapses to A0 regardless of the design matrix
  RandomContext rc1 = rc;
  rc1.delta = 1.0;
  const double j_a0 = design_value(rc.A0.weights(), rc.ctx());
  CHECK(conservative_design_value(rc.Abar, rc1.ctx()) == doctest::Approx(j_a0).epsilon(1e-14));
  RandomContext rc1b = rc1;
  rc1b.Abar = rc.A0.weights();
  CHECK(conservative_design_value(rc1b.Abar, rc1b.ctx()) == doctest::Approx(j_a0).epsilon(1e-14));

  // delta = 0 evaluates the design matrix itself
  RandomContext rc0 = rc;
  rc0.delta = 0.0;
  CHECK(conservative_design_value(rc.Abar, rc0.ctx()) ==
        doctest::Approx(design_value(rc.Abar, ctx)).epsilon(1e-14));
}

TEST_CASE("exact row gradient matches finite differences") {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int n = 3 + static_cast<int>(seed % 6);  // up to n = 8
    const int D = 2 + static_cast<int>(seed % 5) * 4;
    RandomContext rc = random_context(n, D, seed + 40);
    for (int i = 0; i < n; i += 2) {
      const Eigen::VectorXd analytic = row_gradient_exact(i, rc.Abar, rc.ctx());
      const Eigen::VectorXd numeric = fd_row_gradient(rc, i);
      const double rel =
          (analytic - numeric).norm() / std::max(1e-12, numeric.norm());
      CHECK(rel < 1e-6);
      ++checked;
    }
  }
  CHECK(checked >= 20);
}

TEST_CASE("the printed variant differs from the chain rule by delta times the quadratic term") {
  RandomContext rc = random_context(5, 3, 77);
  for (int i = 0; i < 5; ++i) {
    const Eigen::VectorXd chain = row_gradient_exact(i, rc.Abar, rc.ctx(),
                                                     RowGradientVariant::chain_rule);
    const Eigen::VectorXd printed = row_gradient_exact(i, rc.Abar, rc.ctx(),
                                                       RowGradientVariant::as_printed);
    // quadratic term of the gradient, computed with plain loops
    Eigen::VectorXd quad = Eigen::VectorXd::Zero(5);
    for (int j : rc.A0.graph().in_neighbors(i)) {
      double acc = 0.0;
      for (int c = 0; c < 3; ++c) {
        double residual = 0.0;
        for (int l = 0; l < 5; ++l)
          residual += ((1.0 - rc.delta) * rc.Abar(i, l) +
                       rc.delta * rc.A0.weights()(i, l) - rc.pi(l)) *
                      rc.Theta(l, c);
        acc += rc.Theta(j, c) * residual;
      }
      quad(j) = 2.0 * acc;
    }
    CHECK((printed - chain - rc.delta * quad).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("gradient vanishes at consensus with zero gradients") {
  RandomContext rc = random_context(4, 3, 6);
  for (int i = 0; i < 4; ++i) rc.Theta.row(i) = rc.Theta.row(0);
  rc.Grads.setZero();
  for (int i = 0; i < 4; ++i) {
    // theta_j^T (Theta^T (m_i - pi)) = theta_j^T theta_0 * sum(m_i - pi) = 0
    CHECK(row_gradient_exact(i, rc.Abar, rc.ctx()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("surrogate gradient equals the central form when fed exact targets") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    RandomContext rc = random_context(5, 4, seed + 60);
    for (int i = 0; i < 5; ++i) {
      AgentView view = make_agent_view(i, rc.A0.graph(), rc.Theta, rc.Grads,
                                       rc.Ydiag.asDiagonal(), rc.Theta /*Z placeholder*/,
                                       rc.Grads /*Q placeholder*/, rc.Abar, rc.A0, rc.gamma,
                                       1.0, rc.delta);
      view.z = rc.Theta.transpose() * rc.pi;
      view.q = rc.Grads.transpose() * rc.pi;
      const Eigen::VectorXd surrogate = row_gradient_surrogate(view);
      const Eigen::VectorXd central = row_gradient_central(i, rc.Abar, rc.ctx());
      CHECK((surrogate - central).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("with a constant Y diagonal the substituted surrogate is the printed gradient") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    RandomContext rc = random_context(5, 4, seed + 70, /*unit_ydiag=*/true);
    for (int i = 0; i < 5; ++i) {
      AgentView view = make_agent_view(i, rc.A0.graph(), rc.Theta, rc.Grads,
                                       rc.Ydiag.asDiagonal(), rc.Theta, rc.Grads, rc.Abar,
                                       rc.A0, rc.gamma, 1.0, rc.delta);
      view.z = rc.Theta.transpose() * rc.pi;
      view.q = rc.Grads.transpose() * rc.pi;
      const Eigen::VectorXd surrogate = row_gradient_surrogate(view);
      const Eigen::VectorXd printed =
          row_gradient_exact(i, rc.Abar, rc.ctx(), RowGradientVariant::as_printed);
      CHECK((surrogate - printed).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("simplex projection") {
  // hand-solved instance: tau = 0.1
  Eigen::VectorXd v(3);
  v << 0.5, 0.7, -0.2;
  const Eigen::VectorXd p = project_row_simplex(v, {0, 1, 2});
  CHECK(p(0) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(p(1) == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(p(2) == 0.0);

  // idempotence on a feasible point
  Eigen::VectorXd feasible(3);
  feasible << 0.3, 0.2, 0.5;
  CHECK((project_row_simplex(feasible, {0, 1, 2}) - feasible).cwiseAbs().maxCoeff() < 1e-15);

  // all-zero input spreads uniformly over the support
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(5);
  const Eigen::VectorXd u = project_row_simplex(zero, {1, 3, 4});
  CHECK(u(0) == 0.0);
  CHECK(u(1) == doctest::Approx(1.0 / 3.0));
  CHECK(u(3) == doctest::Approx(1.0 / 3.0));
  CHECK(u(4) == doctest::Approx(1.0 / 3.0));

  CHECK_THROWS_AS(project_row_simplex(v, {}), std::invalid_argument);
}

TEST_CASE("projection matches the exhaustive QP oracle and is optimal") {
  Rng rng(15, StreamPurpose::misc);
  for (int rep = 0; rep < 100; ++rep) {
    const int dim = 2 + static_cast<int>(rng.next_u64() % 5);  // 2..6
    Eigen::VectorXd v(dim);
    for (int c = 0; c < dim; ++c) v(c) = 3.0 * rng.normal();
    std::vector<int> support;
    for (int c = 0; c < dim; ++c) support.push_back(c);
    const Eigen::VectorXd p = project_row_simplex(v, support);
    const Eigen::VectorXd oracle = qp_projection_oracle(v, support);
    CHECK((p - oracle).cwiseAbs().maxCoeff() < 1e-8);

    // no feasible point is closer
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::VectorXd q = Eigen::VectorXd::Zero(dim);
      double sum = 0.0;
      for (int c = 0; c < dim; ++c) {
        q(c) = rng.uniform() + 1e-3;
        sum += q(c);
      }
      q /= sum;
      CHECK((v - p).norm() <= (v - q).norm() + 1e-10);
    }
  }
}

TEST_CASE("row update") {
  RandomContext rc = random_context(5, 6, 91);
  const DesignContext ctx = rc.ctx();

  // eta = 0 leaves the row untouched, bitwise
  const RowUpdateResult still = row_update(0, rc.Abar, ctx, 0.0);
  CHECK((still.row - rc.Abar.row(0).transpose()).cwiseAbs().maxCoeff() == 0.0);

  // a backtracked step never increases the conservative objective
  const double before = conservative_design_value(rc.Abar, ctx);
  Eigen::MatrixXd work = rc.Abar;
  for (int i = 0; i < 5; ++i) {
    const RowUpdateResult step =
        row_update(i, work, ctx, 1.0, RowGradientVariant::chain_rule, true);
    work.row(i) = step.row.transpose();
  }
  CHECK(conservative_design_value(work, ctx) <= before + 1e-12);

  // zero gradient at a feasible point: exact fixed point
  RandomContext flat = random_context(4, 3, 92);
  for (int i = 0; i < 4; ++i) flat.Theta.row(i) = flat.Theta.row(0);
  flat.Grads.setZero();
  const RowUpdateResult fixed = row_update(1, flat.Abar, flat.ctx(), 1.0);
  CHECK((fixed.row - flat.Abar.row(1).transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("repeated descent beats the initial design value") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    RandomContext rc = random_context(5, 4, 200 + seed);
    const DesignContext ctx = rc.ctx();
    Eigen::MatrixXd work = rc.A0.weights();
    const double start = conservative_design_value(work, ctx);
    for (int sweep = 0; sweep < 50; ++sweep)
      for (int i = 0; i < 5; ++i)
        work.row(i) =
            row_update(i, work, ctx, 1.0, RowGradientVariant::chain_rule, true).row.transpose();
    CHECK(conservative_design_value(work, ctx) <= start + 1e-12);
  }
}

TEST_CASE("conservative objective is convex in the design matrix") {
  Rng rng(33, StreamPurpose::misc);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RandomContext rc = random_context(4, 3, 300 + seed);
    RandomContext rc2 = random_context(4, 3, 300 + seed);  // same support, fresh weights
    // rebuild second design matrix with different random weights
    Rng wrng(seed, StreamPurpose::misc, 777);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(4, 4);
    for (int i = 0; i < 4; ++i) {
      double sum = 0.0;
      for (int j : rc.A0.graph().in_neighbors(i)) {
        B(i, j) = 0.05 + wrng.uniform();
        sum += B(i, j);
      }
      for (int j : rc.A0.graph().in_neighbors(i)) B(i, j) /= sum;
    }
    const DesignContext ctx = rc.ctx();
    for (int rep = 0; rep < 10; ++rep) {
      const double t = rng.uniform();
      const double lhs = conservative_design_value(t * rc.Abar + (1.0 - t) * B, ctx);
      const double rhs = t * conservative_design_value(rc.Abar, ctx) +
                         (1.0 - t) * conservative_design_value(B, ctx);
      CHECK(lhs <= rhs + 1e-10);
    }
    (void)rc2;
  }
}

TEST_CASE("conservative mixing") {
  RandomContext rc = random_context(3, 2, 400);

  // delta = 1 returns A0 bitwise
  const MixingMatrix m1 = mix_conservative(rc.Abar, rc.A0, 1.0);
  CHECK((m1.weights() - rc.A0.weights()).cwiseAbs().maxCoeff() == 0.0);

  // Abar = A0 short-circuits for any delta
  const MixingMatrix m2 = mix_conservative(rc.A0.weights(), rc.A0, 0.3);
  CHECK((m2.weights() - rc.A0.weights()).cwiseAbs().maxCoeff() == 0.0);

  // entrywise spot check
  const MixingMatrix m3 = mix_conservative(rc.Abar, rc.A0, 0.2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(m3.weights()(i, j) ==
            doctest::Approx(0.8 * rc.Abar(i, j) + 0.2 * rc.A0.weights()(i, j)).epsilon(1e-15));

  // support mismatch rejected
  Eigen::MatrixXd off = rc.Abar;
  bool found = false;
  for (int i = 0; i < 3 && !found; ++i)
    for (int j = 0; j < 3 && !found; ++j)
      if (!rc.A0.graph().has_edge(j, i)) {
        off(i, j) = 0.1;
        found = true;
      }
  if (found) CHECK_THROWS_AS(mix_conservative(off, rc.A0, 0.2), std::invalid_argument);
}

TEST_CASE("feasibility is preserved along update-mix sequences") {
  RandomContext rc = random_context(5, 3, 500);
  const DesignContext ctx = rc.ctx();
  Eigen::MatrixXd work = rc.A0.weights();
  for (int sweep = 0; sweep < 10; ++sweep) {
    for (int i = 0; i < 5; ++i)
      work.row(i) = row_update(i, work, ctx, 0.5).row.transpose();
    // constructor enforces the full invariant set
    const MixingMatrix mixed = mix_conservative(work, rc.A0, 0.2);
    for (int i = 0; i < 5; ++i)
      CHECK(std::abs(mixed.weights().row(i).sum() - 1.0) <= MixingMatrix::kRowSumTol);
  }
}
