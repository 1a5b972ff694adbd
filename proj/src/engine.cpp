#include "d3gd/engine.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <stdexcept>

#include "d3gd/rng.hpp"

namespace d3gd {

std::string to_string(Mode m) {
  switch (m) {
    case Mode::didgd: return "didgd";
    case Mode::d3gd_central: return "d3gd_central";
    case Mode::d3gd_decentralized: return "d3gd_decentralized";
  }
  return "unknown";
}

Mode mode_from_string(const std::string& s) {
  if (s == "didgd") return Mode::didgd;
  if (s == "d3gd_central") return Mode::d3gd_central;
  if (s == "d3gd_decentralized") return Mode::d3gd_decentralized;
  throw std::invalid_argument("unknown mode: " + s);
}

std::vector<int> ActiveSetPolicy::rows(int k, int n) const {
  switch (kind) {
    case Kind::all: {
      std::vector<int> all(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
      return all;
    }
    case Kind::round_robin: {
      std::vector<int> rows;
      rows.reserve(static_cast<std::size_t>(m));
      for (int t = 0; t < std::min(m, n); ++t)
        rows.push_back(((static_cast<long long>(k) * m + t) % n + n) % n);
      std::sort(rows.begin(), rows.end());
      rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
      return rows;
    }
    case Kind::random: {
      Rng rng(seed, StreamPurpose::misc, 0x5e7 + static_cast<std::uint64_t>(k));
      std::set<int> chosen;
      while (static_cast<int>(chosen.size()) < std::min(m, n))
        chosen.insert(static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n)));
      return {chosen.begin(), chosen.end()};
    }
  }
  return {};
}

void RunConfig::validate() const {
  if (T < 0) throw std::invalid_argument("RunConfig: T must be nonnegative");
  if (mode != Mode::didgd && (!(delta > 0.0) || !(delta < 1.0)))
    throw std::invalid_argument("RunConfig: delta must be in (0, 1)");
  if (mode != Mode::didgd && active_set.kind != ActiveSetPolicy::Kind::all && active_set.m < 1)
    throw std::invalid_argument("RunConfig: active set must select at least one row");
  if (pi_refresh_steps < 1) throw std::invalid_argument("RunConfig: pi_refresh_steps must be >= 1");
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> tracker_step(
    const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Q, const MixingMatrix& A,
    const Eigen::MatrixXd& Theta, const Eigen::MatrixXd& Theta_next, const Eigen::MatrixXd& Grad,
    const Eigen::MatrixXd& Grad_next) {
  if (Z.rows() != A.size() || Q.rows() != A.size() || Z.cols() != Q.cols() ||
      Theta.rows() != Z.rows() || Theta_next.rows() != Z.rows() || Theta.cols() != Z.cols() ||
      Grad.rows() != Z.rows() || Grad_next.rows() != Z.rows() || Grad.cols() != Z.cols())
    throw std::invalid_argument("tracker_step: dimension mismatch");
  return {A.weights() * Z + (Theta_next - Theta), A.weights() * Q + (Grad_next - Grad)};
}

namespace {

Eigen::VectorXd refresh_pi(const MixingMatrix& A, Eigen::VectorXd pi, int steps) {
  for (int t = 0; t < steps; ++t) {
    pi = A.weights().transpose() * pi;
    pi /= pi.sum();
  }
  return pi;
}

}  // namespace

EngineResult run_d3gd(const Problem& problem, const MixingMatrix& A0, const RunConfig& config) {
  config.validate();
  const int n = A0.size();
  if (problem.num_agents() != n)
    throw std::invalid_argument("run_d3gd: problem and graph disagree on the agent count");
  const bool dynamic = config.mode != Mode::didgd;

  EngineResult out;
  out.pi0 = perron_vector(A0);
  out.rho0 = spectral_gap(A0, out.pi0);

  LyapunovConfig lyap = config.lyapunov;
  if (lyap.rho <= 0.0) lyap.rho = out.rho0;

  std::set<int> snapshot_at{0, config.T};
  for (int s : config.snapshot_iters)
    if (s >= 0 && s <= config.T) snapshot_at.insert(s);

  NetworkState state = didgd_init(problem, config.theta0);
  if (dynamic) {
    state.Z = state.Theta;
    state.Q = state.GradK;
    state.Abar = A0.weights();
  }

  Eigen::VectorXd pi = out.pi0;
  const int stride = std::max(config.record_stride, 1);

  for (int k = 0; k <= config.T; ++k) {
    std::optional<MixingMatrix> mixed;
    if (dynamic) mixed = mix_conservative(state.Abar, A0, config.delta);
    const MixingMatrix& A_k = dynamic ? *mixed : A0;
    if (dynamic && k > 0) pi = refresh_pi(A_k, pi, config.pi_refresh_steps);
    const double gamma_k = config.gamma.at(k);

    const bool snapshot_due = snapshot_at.count(k) > 0;
    if (snapshot_due) {
      // full-precision Perron refresh so the recorded gap is trustworthy
      if (dynamic && k > 0) pi = perron_vector(A_k, 1e-12, 0, &pi);
      out.snapshots[k] = A_k.weights();
      if (dynamic) lyap.rho = spectral_gap(A_k, pi);
    }
    if (k % stride == 0 || k == config.T || snapshot_due) {
      const DesignInputs design{dynamic ? state.Abar : A0.weights(), A0,
                                dynamic ? config.delta : 0.0};
      IterationRecord rec = compute_record(state, problem, pi, gamma_k, lyap, &design);
      if (snapshot_due) rec.spectral_gap_k = dynamic ? lyap.rho : out.rho0;
      out.records.push_back(std::move(rec));
    }
    if (k == config.T) break;

    NetworkState next = didgd_step(state, A_k, gamma_k, problem);
    if (!next.Theta.allFinite() || next.Theta.norm() > config.divergence_guard) {
      out.diverged = true;
      out.diverged_at = k + 1;
      break;
    }

    if (dynamic) {
      const double eta_k = config.eta.at(k);
      Eigen::MatrixXd new_abar = state.Abar;
      bool rows_ok = true;
      if (eta_k != 0.0) {
        const DesignContext ctx{state.Theta, state.GradK, state.Y.diagonal(),
                                pi,          gamma_k,     config.delta,
                                A0};
        const std::vector<int> active = config.active_set.rows(k, n);
        for (int i : active) {
          Eigen::VectorXd g;
          if (config.mode == Mode::d3gd_central) {
            if (config.central_gradient == CentralGradient::exact_chain_rule) {
              const RowUpdateResult step =
                  row_update(i, state.Abar, ctx, eta_k, config.exact_variant, config.backtracking);
              new_abar.row(i) = step.row.transpose();
              continue;
            }
            g = row_gradient_central(i, state.Abar, ctx);
          } else {
            AgentView view = make_agent_view(i, A0.graph(), state.Theta, state.GradK, state.Y,
                                             state.Z, state.Q, state.Abar, A0, gamma_k, eta_k,
                                             config.delta);
            if (config.force_exact_trackers) {
              view.z = state.Theta.transpose() * pi;
              view.q = state.GradK.transpose() * pi;
            }
            g = row_gradient_surrogate(view);
          }
          if (!g.isZero(0.0)) {
            const Eigen::VectorXd row = project_row_simplex(
                state.Abar.row(i).transpose() - eta_k * g, A0.graph().in_neighbors(i));
            // at extreme magnitudes the projection loses the row sum; treat
            // that as divergence rather than emitting an invalid matrix
            if (!row.allFinite() || std::abs(row.sum() - 1.0) > 1e-9) {
              rows_ok = false;
              break;
            }
            new_abar.row(i) = row.transpose();
          }
        }
      }
      if (!rows_ok) {
        out.diverged = true;
        out.diverged_at = k + 1;
        break;
      }
      auto [Z_next, Q_next] =
          tracker_step(state.Z, state.Q, A_k, state.Theta, next.Theta, state.GradK, next.GradK);
      next.Z = std::move(Z_next);
      next.Q = std::move(Q_next);
      next.Abar = std::move(new_abar);
    }
    state = std::move(next);
  }

  out.final_state = std::move(state);
  return out;
}

AccessReport information_audit(Mode mode) {
  AccessReport report;
  report.mode = mode;
  switch (mode) {
    case Mode::didgd:
      report.one_hop_only = true;
      report.agent_inputs = {"theta_j for j in in_neighbors(i)", "y_j for j in in_neighbors(i)",
                             "own gradient", "gamma_k", "n"};
      break;
    case Mode::d3gd_central:
      report.one_hop_only = false;
      report.agent_inputs = {"Theta (all rows)", "GradStack (all rows)", "pi of A^k",
                             "own Y diagonal entry", "abar_i, a0_i", "gamma_k, eta_k, delta", "n"};
      break;
    case Mode::d3gd_decentralized:
      report.one_hop_only = true;
      report.agent_inputs = {"theta_j for j in in_neighbors(i)",
                             "own rows z_i, q_i, abar_i, a0_i",
                             "own gradient",
                             "own Y diagonal entry",
                             "gamma_k, eta_k, delta",
                             "n"};
      break;
  }
  return report;
}

}  // namespace d3gd
