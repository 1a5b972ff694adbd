#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>

namespace d3gd {

// Full per-iteration algorithm state. Rows index agents: row i of Theta is
// theta_i, row i of Y is y_i. Steps are synchronous maps state -> state
// (double buffered); nothing here is updated in place across agents.
//
// Invariants while stepping: diag(Y) > 0 and each row of Y sums to 1
// (preserved from Y^0 = I by row-stochastic mixing). GradK always holds the
// local gradients at the current Theta. The tracker blocks Z, Q and the
// design rows Abar are empty unless the dynamic modes enabled them.
struct NetworkState {
  Eigen::MatrixXd Theta;  // n x D
  Eigen::MatrixXd Y;      // n x n
  Eigen::MatrixXd GradK;  // n x D: row i = grad f_i(theta_i)
  int k = 0;

  Eigen::MatrixXd Z;     // n x D tracker (weighted-average of parameters)
  Eigen::MatrixXd Q;     // n x D tracker (weighted-average of gradients)
  Eigen::MatrixXd Abar;  // n x n design rows

  int num_agents() const { return static_cast<int>(Theta.rows()); }
  int dim() const { return static_cast<int>(Theta.cols()); }
};

struct StepSchedule {
  enum class Kind { constant, polynomial };
  Kind kind = Kind::constant;
  double base = 0.1;
  double exponent = 0.0;  // gamma_k = base / (k+1)^exponent

  static StepSchedule constant(double value) {
    if (!(value >= 0.0)) throw std::invalid_argument("StepSchedule: negative step size");
    return {Kind::constant, value, 0.0};
  }
  static StepSchedule polynomial(double base, double exponent) {
    if (!(base > 0.0) || exponent < 0.0)
      throw std::invalid_argument("StepSchedule: need base > 0 and exponent >= 0");
    return {Kind::polynomial, base, exponent};
  }

  double at(int k) const {
    return kind == Kind::constant ? base : base / std::pow(static_cast<double>(k) + 1.0, exponent);
  }
};

enum class ThetaInit { zeros, gaussian };

struct InitRule {
  ThetaInit kind = ThetaInit::zeros;
  double scale = 0.1;
  std::uint64_t seed = 0;
};

}  // namespace d3gd
