#include "d3gd/didgd.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "d3gd/rng.hpp"

namespace d3gd {

Eigen::MatrixXd gradient_stack(const Problem& problem, const Eigen::MatrixXd& Theta) {
  Eigen::MatrixXd grads(Theta.rows(), Theta.cols());
  for (int i = 0; i < Theta.rows(); ++i)
    grads.row(i) = problem.local_gradient(i, Theta.row(i).transpose()).transpose();
  return grads;
}

NetworkState didgd_init(const Problem& problem, const InitRule& rule) {
  const int n = problem.num_agents();
  const int D = problem.dim();
  NetworkState state;
  state.k = 0;
  state.Y = Eigen::MatrixXd::Identity(n, n);
  state.Theta = Eigen::MatrixXd::Zero(n, D);
  if (rule.kind == ThetaInit::gaussian) {
    for (int i = 0; i < n; ++i) {
      Rng rng(rule.seed, StreamPurpose::theta_init, 1 + static_cast<std::uint64_t>(i));
      for (int c = 0; c < D; ++c) state.Theta(i, c) = rule.scale * rng.normal();
    }
  }
  state.GradK = gradient_stack(problem, state.Theta);
  return state;
}

NetworkState didgd_step(const NetworkState& state, const MixingMatrix& A, double gamma,
                        const Problem& problem) {
  const int n = state.num_agents();
  if (A.size() != n) throw std::invalid_argument("didgd_step: mixing matrix size mismatch");
  for (int i = 0; i < n; ++i)
    if (!(state.Y(i, i) > 0.0))
      throw std::runtime_error("didgd_step: nonpositive y_ii at agent " + std::to_string(i) +
                               ", iteration " + std::to_string(state.k));

  const Eigen::MatrixXd& grads =
      (state.GradK.rows() == n) ? state.GradK : gradient_stack(problem, state.Theta);

  NetworkState next;
  next.k = state.k + 1;
  next.Theta = A.weights() * state.Theta;
  for (int i = 0; i < n; ++i)
    next.Theta.row(i) -= (gamma / (n * state.Y(i, i))) * grads.row(i);
  next.Y = A.weights() * state.Y;
  next.GradK = gradient_stack(problem, next.Theta);
  next.Z = state.Z;
  next.Q = state.Q;
  next.Abar = state.Abar;
  return next;
}

Trajectory run_didgd(const Problem& problem, const MixingMatrix& A, const StepSchedule& gamma,
                     int T, const RecordingConfig& recording, const InitRule& init) {
  if (T < 0) throw std::invalid_argument("run_didgd: T must be nonnegative");
  const int stride = std::max(recording.stride, 1);

  Trajectory out;
  out.pi = perron_vector(A);
  LyapunovConfig lyap = recording.lyapunov;
  if (lyap.rho <= 0.0) lyap.rho = spectral_gap(A, out.pi);
  out.rho = lyap.rho;

  const DesignInputs design{A.weights(), A, 0.0};
  NetworkState state = didgd_init(problem, init);
  for (int k = 0; k <= T; ++k) {
    if (k % stride == 0 || k == T)
      out.records.push_back(compute_record(state, problem, out.pi, gamma.at(k), lyap, &design));
    if (k == T) break;
    NetworkState next = didgd_step(state, A, gamma.at(k), problem);
    if (!next.Theta.allFinite() || next.Theta.norm() > recording.divergence_guard) {
      out.diverged = true;
      out.diverged_at = k + 1;
      state = std::move(next);
      break;
    }
    state = std::move(next);
  }
  out.final_state = std::move(state);
  return out;
}

}  // namespace d3gd
