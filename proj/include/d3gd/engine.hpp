#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "d3gd/didgd.hpp"
#include "d3gd/metrics.hpp"
#include "d3gd/mixing.hpp"
#include "d3gd/problems.hpp"
#include "d3gd/state.hpp"
#include "d3gd/weight_design.hpp"

namespace d3gd {

enum class Mode { didgd, d3gd_central, d3gd_decentralized };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

// Gradient the central mode feeds into the row updates. algorithm1_targets
// uses the tracker-form gradient with the exact global aggregates
// (Theta^T pi, GradStack^T pi) substituted, so the decentralized scheme
// differs from it only through tracker error. exact_chain_rule uses the
// analytic derivative of the conservative design objective.
enum class CentralGradient { algorithm1_targets, exact_chain_rule };

struct ActiveSetPolicy {
  enum class Kind { all, round_robin, random };
  Kind kind = Kind::all;
  int m = 1;  // rows per iteration for round_robin / random
  std::uint64_t seed = 0;

  std::vector<int> rows(int k, int n) const;
};

struct RunConfig {
  Mode mode = Mode::didgd;
  int T = 1000;
  double delta = 0.2;
  StepSchedule gamma = StepSchedule::constant(0.1);
  StepSchedule eta = StepSchedule::constant(1.0);
  ActiveSetPolicy active_set;
  InitRule theta0;
  int record_stride = 1;
  std::vector<int> snapshot_iters;  // recorded in addition to {0, T}
  CentralGradient central_gradient = CentralGradient::algorithm1_targets;
  RowGradientVariant exact_variant = RowGradientVariant::chain_rule;
  bool backtracking = false;          // exact central gradient only
  bool force_exact_trackers = false;  // test hook: substitute tracker targets
  int pi_refresh_steps = 5;
  double divergence_guard = 1e12;
  LyapunovConfig lyapunov;  // rho <= 0: use the gap of A0, refreshed at snapshots

  void validate() const;
};

struct EngineResult {
  std::vector<IterationRecord> records;
  NetworkState final_state;
  std::map<int, Eigen::MatrixXd> snapshots;  // iteration -> mixing matrix used
  Eigen::VectorXd pi0;
  double rho0 = 0.0;
  bool diverged = false;
  int diverged_at = -1;
};

// Per-iteration order: (1) mix the design rows with A0, (2) one synchronous
// parameter/Y round, (3) row gradients from iteration-k values, (4) projected
// row updates for the active set, (5) tracker update. The static mode skips
// (1) and (3)-(5) and runs with A0 throughout.
EngineResult run_d3gd(const Problem& problem, const MixingMatrix& A0, const RunConfig& config);

// Z' = A Z + (Theta_next - Theta), Q' = A Q + (Grad_next - Grad); synchronous.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> tracker_step(
    const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Q, const MixingMatrix& A,
    const Eigen::MatrixXd& Theta, const Eigen::MatrixXd& Theta_next, const Eigen::MatrixXd& Grad,
    const Eigen::MatrixXd& Grad_next);

// What the per-agent weight update may read in each mode.
struct AccessReport {
  Mode mode;
  bool one_hop_only = false;
  std::vector<std::string> agent_inputs;
};

AccessReport information_audit(Mode mode);

}  // namespace d3gd
