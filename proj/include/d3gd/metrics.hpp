#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "d3gd/problems.hpp"
#include "d3gd/state.hpp"
#include "d3gd/weight_design.hpp"

namespace d3gd {

// One metrics row. spectral_gap_k is only filled on snapshot iterations.
struct IterationRecord {
  int k = 0;
  double stationarity = 0.0;             // (1/n) sum_i ||grad F(theta_i)||^2
  double disagreement = 0.0;             // (1/n^2) sum_ij ||theta_i - theta_j||^2
  double weighted_consensus_error = 0.0; // ||Theta - 1 pi^T Theta||_F^2
  double lyapunov = 0.0;
  double j_value = 0.0;
  double grad_f_at_avg = 0.0;            // ||grad F(theta_hat)||^2
  double y_deviation = 0.0;              // ||Y - 1 pi^T||_2
  std::optional<double> spectral_gap_k;

  static const char* csv_header();
  std::string csv_row() const;
};

std::vector<IterationRecord> read_records_csv(std::istream& in);
std::vector<IterationRecord> read_records_csv_file(const std::string& path);
void write_records_csv(std::ostream& out, std::span<const IterationRecord> records);
void write_records_csv_file(const std::string& path, std::span<const IterationRecord> records);

// L_k = F(theta_hat) + coefficient * gamma_k * L_hat^2 / (n rho) * sum_i
// ||theta_i - theta_hat||^2. coefficient 3 is the design form; 10/3 matches
// the rate-analysis variant.
struct LyapunovConfig {
  double L_hat = 1.0;
  double rho = 1.0;
  double coefficient = 3.0;
};

// Inputs needed for the j_value column; pass Abar = A0.weights() (any delta)
// for static-topology runs.
struct DesignInputs {
  const Eigen::MatrixXd& Abar;
  const MixingMatrix& A0;
  double delta = 0.0;
};

Eigen::VectorXd weighted_average(const NetworkState& state, const Eigen::VectorXd& pi);

IterationRecord compute_record(const NetworkState& state, const Problem& problem,
                               const Eigen::VectorXd& pi, double gamma_k,
                               const LyapunovConfig& lyap, const DesignInputs* design = nullptr);

// Constants from the finite-time rate bound plus fitted decay constants of
// the Y recursion. C_hat, lambda_hat come from a least-squares fit of
// log ||Y^k - 1 pi^T||_2; C0_hat is the smallest constant making
// ||diag(Y^k)^{-1}||_F^2 <= sum_i 1/pi_i^2 + C0 lambda^k hold on the
// trajectory. gamma_cap = n rho / (2 L_hat sqrt(C_pi1 (C_pi2 + C0_hat))).
struct RateBoundConstants {
  double C_pi1 = 0.0;
  double C_pi2 = 0.0;
  double rho = 0.0;
  double gamma_cap = 0.0;
  double C0_hat = 0.0;
  double lambda_hat = 0.0;
  double C_hat = 0.0;
  double fit_r2 = 0.0;
  bool reliable = false;  // false when the decay fit has R^2 < 0.9
};

RateBoundConstants rate_bound_constants(const Eigen::VectorXd& pi, double rho, double L_hat,
                                   const std::vector<Eigen::MatrixXd>& Y_trajectory);

// Y^k for k = 0..T with Y^0 = I (i.e. the powers of A).
std::vector<Eigen::MatrixXd> y_trajectory(const MixingMatrix& A, int T);

// Least-squares line fit helper (returns slope, intercept, r2).
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_stderr = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

struct RateCheckPoint {
  int T = 0;
  double gamma = 0.0;
  double min_stationarity = 0.0;
};

struct RateCheckResult {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;
  std::vector<RateCheckPoint> points;
  std::vector<int> excluded_T;  // grid entries whose runs diverged
};

// Runs the static-topology baseline for each T in the grid with the constant
// step gamma = c / T^(1/3), collects the minimum stationarity per run and
// fits the log-log slope against T.
RateCheckResult rate_check(const Problem& problem, const MixingMatrix& A, double c,
                           std::span<const int> T_grid, const InitRule& init,
                           const LyapunovConfig& lyap);

struct DescentCheckResult {
  double fraction_satisfied = 0.0;
  double fitted_c = 0.0;
  int checked = 0;
};

// Verifies the computable part of the one-step decrease of the cost-to-go
// value: residual_k = L_{k+1} - L_k + (gamma_k/4) ||grad F(theta_hat_k)||^2
// + 3 gamma_k L^2 (2-rho)/(n rho) * wce_k - 3 gamma_k L^2/(n rho) * wce_{k+1}
// must stay below c * gamma_k^3. c is fitted on the first half of the
// trajectory (95th percentile of the positive residual ratios) and the
// satisfaction fraction is evaluated over the whole trajectory. Records must
// be at consecutive iterations.
DescentCheckResult descent_check(std::span<const IterationRecord> records,
                                 const StepSchedule& gamma, const LyapunovConfig& lyap, int n);

}  // namespace d3gd
