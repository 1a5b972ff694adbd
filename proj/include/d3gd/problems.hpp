#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace d3gd {

struct ProblemDims {
  int n = 0;  // agents
  int d = 0;  // feature dimension
  int K = 1;  // classes
  int flat_dim() const { return d * K; }
};

// A family of local objectives {f_i}. Values and gradients must be exact and
// reentrant; instances are immutable after construction.
class Problem {
 public:
  virtual ~Problem() = default;
  virtual int num_agents() const = 0;
  virtual int dim() const = 0;
  virtual double local_value(int agent, const Eigen::VectorXd& theta) const = 0;
  virtual Eigen::VectorXd local_gradient(int agent, const Eigen::VectorXd& theta) const = 0;
  // Known smoothness constant, when the family admits one in closed form.
  virtual std::optional<double> exact_smoothness() const { return std::nullopt; }

  // F(theta) = (1/n) sum_i f_i(theta) and its gradient.
  double average_value(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd average_gradient(const Eigen::VectorXd& theta) const;
};

struct AgentSamples {
  Eigen::MatrixXd features;  // one sample per row
  std::vector<int> labels;   // 0-based class ids
};

struct SyntheticDataset {
  int d = 0;
  int K = 0;
  int M = 0;  // samples per agent
  double alpha = 0.0;
  std::uint64_t seed = 0;
  Eigen::MatrixXd class_means;  // K x d, shared across agents
  std::vector<AgentSamples> agents;

  int num_agents() const { return static_cast<int>(agents.size()); }
};

// Per-agent class counts: p_i ~ Dirichlet(alpha * 1_K) via normalized gamma
// draws, then m_i ~ Multinomial(M, p_i) as M sequential categorical draws.
// Agent i draws from its own stream, so earlier agents are unaffected by n.
std::vector<std::vector<int>> dirichlet_partition(int n, int K, int M, double alpha,
                                                  std::uint64_t seed);
std::vector<std::vector<int>> dirichlet_partition(const std::vector<double>& alpha_per_agent,
                                                  int K, int M, std::uint64_t seed);

// Features for given class counts. Draw order: class means first (stream 0 of
// the seed, class-major), then per agent in index order, classes in index
// order, one Gaussian vector per sample centered at the class mean.
// `alpha_meta` is recorded in the dataset metadata only.
SyntheticDataset generate_features(const std::vector<std::vector<int>>& counts, int d,
                                   std::uint64_t seed, double alpha_meta = 0.0);

SyntheticDataset make_synthetic_dataset(int n, int K, int M, int d, double alpha,
                                        std::uint64_t seed);
SyntheticDataset make_synthetic_dataset(const std::vector<double>& alpha_per_agent, int K, int M,
                                        int d, std::uint64_t seed);

// `verbatim` keeps the loss exactly as displayed in its source formulation
// (the sigmoid is applied to +label * score); `corrected` flips the margin
// sign so that the loss penalizes negative margins.
enum class SignMode { verbatim, corrected };

std::string to_string(SignMode m);
SignMode sign_mode_from_string(const std::string& s);

// K-class sigmoid classifier with ridge term. Flat parameters stack the K
// per-class blocks: theta = (theta^(1), ..., theta^(K)), each of length d.
class SigmoidClassifierProblem final : public Problem {
 public:
  explicit SigmoidClassifierProblem(SyntheticDataset data, double lambda = 1e-4,
                                    SignMode mode = SignMode::verbatim);

  int num_agents() const override { return data_.num_agents(); }
  int dim() const override { return data_.d * data_.K; }
  double local_value(int agent, const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd local_gradient(int agent, const Eigen::VectorXd& theta) const override;

  const SyntheticDataset& dataset() const { return data_; }
  double lambda() const { return lambda_; }
  SignMode sign_mode() const { return mode_; }

 private:
  SyntheticDataset data_;
  double lambda_;
  SignMode mode_;
};

// f_i(theta) = 1/2 (theta - b_i)^T Q_i (theta - b_i), Q_i symmetric positive
// definite. The global minimizer (sum Q_i)^{-1} (sum Q_i b_i) is available in
// closed form.
class QuadraticProblem final : public Problem {
 public:
  QuadraticProblem(std::vector<Eigen::MatrixXd> Q, std::vector<Eigen::VectorXd> b);

  // Random SPD Q_i with eigenvalues spanning [1, condition]; centers b_i are
  // Gaussian with the given spread (spread 0 gives homogeneous agents).
  static QuadraticProblem random(int n, int d, std::uint64_t seed, double condition = 10.0,
                                 double center_spread = 1.0);

  int num_agents() const override { return static_cast<int>(Q_.size()); }
  int dim() const override { return static_cast<int>(Q_.front().rows()); }
  double local_value(int agent, const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd local_gradient(int agent, const Eigen::VectorXd& theta) const override;
  std::optional<double> exact_smoothness() const override { return smoothness_; }

  Eigen::VectorXd minimizer() const;
  const Eigen::MatrixXd& Q(int agent) const { return Q_[static_cast<std::size_t>(agent)]; }
  const Eigen::VectorXd& b(int agent) const { return b_[static_cast<std::size_t>(agent)]; }

 private:
  std::vector<Eigen::MatrixXd> Q_;
  std::vector<Eigen::VectorXd> b_;
  double smoothness_ = 0.0;
};

struct ConstantsConfig {
  int num_thetas = 32;
  double radius = 1.0;
  std::uint64_t seed = 0;
};

// Monte-Carlo lower bounds for the smoothness, gradient-norm and
// heterogeneity constants, sampled over parameter points in a ball.
struct ProblemConstants {
  double L_hat = 0.0;
  double G_hat = 0.0;
  double varsigma_hat = 0.0;
  int sample_count = 0;
  double radius = 0.0;
};

ProblemConstants estimate_constants(const Problem& problem, const ConstantsConfig& cfg = {});

// Dataset exchange: one CSV per agent ("label,x_1,...,x_d") plus a JSON
// sidecar with alpha, seed, M and the class means.
void export_dataset(const std::string& dir, const SyntheticDataset& data);
SyntheticDataset import_dataset(const std::string& dir);

}  // namespace d3gd
