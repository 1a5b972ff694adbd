#pragma once

#include <Eigen/Dense>
#include <vector>

#include "d3gd/metrics.hpp"
#include "d3gd/mixing.hpp"
#include "d3gd/problems.hpp"
#include "d3gd/state.hpp"

namespace d3gd {

// Rows of local gradients at the given parameters.
Eigen::MatrixXd gradient_stack(const Problem& problem, const Eigen::MatrixXd& Theta);

// Fresh state: Y^0 = I (so y_{i,i} tracks the Perron weight of agent i),
// Theta^0 by the init rule, gradients cached.
NetworkState didgd_init(const Problem& problem, const InitRule& rule);

// One synchronous round:
//   Theta' = A Theta - gamma * diag(1/(n y_ii)) * GradK
//   Y'     = A Y
// All reads come from the input state; the returned state carries gradients
// at Theta'. Throws if any y_ii is nonpositive (broken invariant, carries
// the iteration index).
NetworkState didgd_step(const NetworkState& state, const MixingMatrix& A, double gamma,
                        const Problem& problem);

struct RecordingConfig {
  int stride = 1;
  LyapunovConfig lyapunov;        // rho <= 0 means: compute from A
  double divergence_guard = 1e12; // abort when ||Theta||_F exceeds this
};

struct Trajectory {
  std::vector<IterationRecord> records;
  NetworkState final_state;
  Eigen::VectorXd pi;
  double rho = 0.0;
  bool diverged = false;
  int diverged_at = -1;
};

// T rounds with a fixed mixing matrix, metrics recorded every `stride`
// iterations plus the endpoints.
Trajectory run_didgd(const Problem& problem, const MixingMatrix& A, const StepSchedule& gamma,
                     int T, const RecordingConfig& recording = {},
                     const InitRule& init = {});

}  // namespace d3gd
