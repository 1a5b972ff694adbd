#include "d3gd/problems.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "d3gd/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace d3gd {

double Problem::average_value(const Eigen::VectorXd& theta) const {
  double acc = 0.0;
  for (int i = 0; i < num_agents(); ++i) acc += local_value(i, theta);
  return acc / num_agents();
}

Eigen::VectorXd Problem::average_gradient(const Eigen::VectorXd& theta) const {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim());
  for (int i = 0; i < num_agents(); ++i) acc += local_gradient(i, theta);
  return acc / num_agents();
}

std::vector<std::vector<int>> dirichlet_partition(const std::vector<double>& alpha_per_agent,
                                                  int K, int M, std::uint64_t seed) {
  if (K <= 0) throw std::invalid_argument("dirichlet_partition: K must be positive");
  if (M < 0) throw std::invalid_argument("dirichlet_partition: M must be nonnegative");
  std::vector<std::vector<int>> counts;
  counts.reserve(alpha_per_agent.size());
  for (std::size_t i = 0; i < alpha_per_agent.size(); ++i) {
    const double alpha = alpha_per_agent[i];
    if (!(alpha > 0.0)) throw std::invalid_argument("dirichlet_partition: alpha must be > 0");
    Rng rng(seed, StreamPurpose::agent_labels, 1 + static_cast<std::uint64_t>(i));
    const std::vector<double> p = rng.dirichlet(alpha, K);
    counts.push_back(rng.multinomial(M, p));
  }
  return counts;
}

std::vector<std::vector<int>> dirichlet_partition(int n, int K, int M, double alpha,
                                                  std::uint64_t seed) {
  return dirichlet_partition(std::vector<double>(static_cast<std::size_t>(n), alpha), K, M, seed);
}

SyntheticDataset generate_features(const std::vector<std::vector<int>>& counts, int d,
                                   std::uint64_t seed, double alpha_meta) {
  if (counts.empty()) throw std::invalid_argument("generate_features: no agents");
  const int K = static_cast<int>(counts.front().size());
  SyntheticDataset data;
  data.d = d;
  data.K = K;
  data.alpha = alpha_meta;
  data.seed = seed;

  Rng means_rng(seed, StreamPurpose::class_means, 0);
  data.class_means.resize(K, d);
  for (int k = 0; k < K; ++k)
    for (int c = 0; c < d; ++c) data.class_means(k, c) = means_rng.normal();

  data.agents.reserve(counts.size());
  int common_M = -1;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (static_cast<int>(counts[i].size()) != K)
      throw std::invalid_argument("generate_features: ragged count vectors");
    Rng rng(seed, StreamPurpose::agent_features, 1 + static_cast<std::uint64_t>(i));
    int total = 0;
    for (int c : counts[i]) total += c;
    AgentSamples samples;
    samples.features.resize(total, d);
    samples.labels.reserve(static_cast<std::size_t>(total));
    int row = 0;
    for (int k = 0; k < K; ++k) {
      for (int m = 0; m < counts[i][static_cast<std::size_t>(k)]; ++m) {
        for (int c = 0; c < d; ++c)
          samples.features(row, c) = data.class_means(k, c) + rng.normal();
        samples.labels.push_back(k);
        ++row;
      }
    }
    if (common_M < 0) common_M = total;
    data.agents.push_back(std::move(samples));
  }
  data.M = std::max(common_M, 0);
  return data;
}

SyntheticDataset make_synthetic_dataset(const std::vector<double>& alpha_per_agent, int K, int M,
                                        int d, std::uint64_t seed) {
  const auto counts = dirichlet_partition(alpha_per_agent, K, M, seed);
  const double meta =
      alpha_per_agent.empty() ? 0.0 : alpha_per_agent.front();  // scalar metadata slot
  return generate_features(counts, d, seed, meta);
}

SyntheticDataset make_synthetic_dataset(int n, int K, int M, int d, double alpha,
                                        std::uint64_t seed) {
  const auto counts = dirichlet_partition(n, K, M, alpha, seed);
  return generate_features(counts, d, seed, alpha);
}

std::string to_string(SignMode m) { return m == SignMode::verbatim ? "verbatim" : "corrected"; }

SignMode sign_mode_from_string(const std::string& s) {
  if (s == "verbatim") return SignMode::verbatim;
  if (s == "corrected") return SignMode::corrected;
  throw std::invalid_argument("unknown sign mode: " + s);
}

SigmoidClassifierProblem::SigmoidClassifierProblem(SyntheticDataset data, double lambda,
                                                   SignMode mode)
    : data_(std::move(data)), lambda_(lambda), mode_(mode) {
  if (lambda_ < 0.0) throw std::invalid_argument("SigmoidClassifierProblem: lambda must be >= 0");
  if (data_.num_agents() == 0) throw std::invalid_argument("SigmoidClassifierProblem: no agents");
}

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

double SigmoidClassifierProblem::local_value(int agent, const Eigen::VectorXd& theta) const {
  if (theta.size() != dim())
    throw std::invalid_argument("sigmoid loss: parameter length mismatch");
  const auto& samples = data_.agents[static_cast<std::size_t>(agent)];
  const int M = static_cast<int>(samples.labels.size());
  const int d = data_.d;
  const int K = data_.K;

  // Labels enter as indicators y_mk in {0,1}; the K-1 zero-label terms of a
  // sample contribute the constant 1/2 each and the labeled term contributes
  // sigmoid(+-score).
  double acc = 0.0;
  for (int m = 0; m < M; ++m) {
    const int k = samples.labels[static_cast<std::size_t>(m)];
    const double score =
        samples.features.row(m).dot(theta.segment(static_cast<Eigen::Index>(k) * d, d));
    const double z = (mode_ == SignMode::verbatim) ? score : -score;
    acc += sigmoid(z) + 0.5 * (K - 1);
  }
  double value = (M > 0) ? acc / M : 0.0;
  value += 0.5 * lambda_ * theta.squaredNorm();
  return value;
}

Eigen::VectorXd SigmoidClassifierProblem::local_gradient(int agent,
                                                         const Eigen::VectorXd& theta) const {
  if (theta.size() != dim())
    throw std::invalid_argument("sigmoid loss: parameter length mismatch");
  const auto& samples = data_.agents[static_cast<std::size_t>(agent)];
  const int M = static_cast<int>(samples.labels.size());
  const int d = data_.d;

  Eigen::VectorXd grad = lambda_ * theta;
  if (M == 0) return grad;
  const double sign = (mode_ == SignMode::verbatim) ? 1.0 : -1.0;
  for (int m = 0; m < M; ++m) {
    const int k = samples.labels[static_cast<std::size_t>(m)];
    auto block = grad.segment(static_cast<Eigen::Index>(k) * d, d);
    const double score =
        samples.features.row(m).dot(theta.segment(static_cast<Eigen::Index>(k) * d, d));
    const double s = sigmoid(score);
    block += (sign * s * (1.0 - s) / M) * samples.features.row(m).transpose();
  }
  return grad;
}

QuadraticProblem::QuadraticProblem(std::vector<Eigen::MatrixXd> Q, std::vector<Eigen::VectorXd> b)
    : Q_(std::move(Q)), b_(std::move(b)) {
  if (Q_.empty() || Q_.size() != b_.size())
    throw std::invalid_argument("QuadraticProblem: Q and b must be nonempty and match");
  const Eigen::Index d = Q_.front().rows();
  for (std::size_t i = 0; i < Q_.size(); ++i) {
    if (Q_[i].rows() != d || Q_[i].cols() != d || b_[i].size() != d)
      throw std::invalid_argument("QuadraticProblem: inconsistent dimensions");
    smoothness_ = std::max(
        smoothness_, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Q_[i]).eigenvalues().maxCoeff());
  }
}

QuadraticProblem QuadraticProblem::random(int n, int d, std::uint64_t seed, double condition,
                                          double center_spread) {
  if (condition < 1.0) throw std::invalid_argument("QuadraticProblem: condition must be >= 1");
  std::vector<Eigen::MatrixXd> Q;
  std::vector<Eigen::VectorXd> b;
  Q.reserve(static_cast<std::size_t>(n));
  b.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rng rng(seed, StreamPurpose::misc, 100 + static_cast<std::uint64_t>(i));
    Eigen::MatrixXd G(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) G(r, c) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    Eigen::MatrixXd U = qr.householderQ();
    // fix the sign ambiguity of QR for determinism
    const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int c = 0; c < d; ++c)
      if (R(c, c) < 0.0) U.col(c) = -U.col(c);

    Eigen::VectorXd evals(d);
    for (int c = 0; c < d; ++c)
      evals(c) = (d == 1) ? condition : 1.0 + (condition - 1.0) * c / (d - 1);
    Q.push_back(U * evals.asDiagonal() * U.transpose());

    Eigen::VectorXd bi(d);
    for (int c = 0; c < d; ++c) bi(c) = center_spread * rng.normal();
    b.push_back(std::move(bi));
  }
  return QuadraticProblem(std::move(Q), std::move(b));
}

double QuadraticProblem::local_value(int agent, const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd r = theta - b_[static_cast<std::size_t>(agent)];
  return 0.5 * r.dot(Q_[static_cast<std::size_t>(agent)] * r);
}

Eigen::VectorXd QuadraticProblem::local_gradient(int agent, const Eigen::VectorXd& theta) const {
  return Q_[static_cast<std::size_t>(agent)] * (theta - b_[static_cast<std::size_t>(agent)]);
}

Eigen::VectorXd QuadraticProblem::minimizer() const {
  const Eigen::Index d = Q_.front().rows();
  Eigen::MatrixXd Qsum = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
  for (std::size_t i = 0; i < Q_.size(); ++i) {
    Qsum += Q_[i];
    rhs += Q_[i] * b_[i];
  }
  return Qsum.ldlt().solve(rhs);
}

ProblemConstants estimate_constants(const Problem& problem, const ConstantsConfig& cfg) {
  if (cfg.num_thetas < 2)
    throw std::invalid_argument("estimate_constants: need at least two sample points");
  const int D = problem.dim();
  const int n = problem.num_agents();

  Rng rng(cfg.seed, StreamPurpose::misc, 7);
  std::vector<Eigen::VectorXd> thetas;
  thetas.reserve(static_cast<std::size_t>(cfg.num_thetas));
  for (int t = 0; t < cfg.num_thetas; ++t) {
    Eigen::VectorXd v(D);
    for (int c = 0; c < D; ++c) v(c) = rng.normal();
    const double norm = v.norm();
    if (norm > 0.0) v *= cfg.radius * std::pow(rng.uniform_pos(), 1.0 / D) / norm;
    thetas.push_back(std::move(v));
  }

  // cache gradients: grads[t][i]
  std::vector<std::vector<Eigen::VectorXd>> grads(thetas.size());
  std::vector<Eigen::VectorXd> avg(thetas.size());
  for (std::size_t t = 0; t < thetas.size(); ++t) {
    grads[t].reserve(static_cast<std::size_t>(n));
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(D);
    for (int i = 0; i < n; ++i) {
      grads[t].push_back(problem.local_gradient(i, thetas[t]));
      sum += grads[t].back();
    }
    avg[t] = sum / n;
  }

  ProblemConstants out;
  out.sample_count = cfg.num_thetas;
  out.radius = cfg.radius;
  for (std::size_t t = 0; t < thetas.size(); ++t) {
    for (int i = 0; i < n; ++i) {
      out.G_hat = std::max(out.G_hat, grads[t][static_cast<std::size_t>(i)].norm());
      out.varsigma_hat =
          std::max(out.varsigma_hat, (avg[t] - grads[t][static_cast<std::size_t>(i)]).norm());
    }
    for (std::size_t u = t + 1; u < thetas.size(); ++u) {
      const double dist = (thetas[t] - thetas[u]).norm();
      if (dist < 1e-12) continue;
      for (int i = 0; i < n; ++i) {
        const double diff = (grads[t][static_cast<std::size_t>(i)] -
                             grads[u][static_cast<std::size_t>(i)])
                                .norm();
        out.L_hat = std::max(out.L_hat, diff / dist);
      }
    }
  }
  return out;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void export_dataset(const std::string& dir, const SyntheticDataset& data) {
  fs::create_directories(dir);
  for (int i = 0; i < data.num_agents(); ++i) {
    std::ofstream out(fs::path(dir) / ("agent_" + std::to_string(i) + ".csv"));
    if (!out) throw std::runtime_error("export_dataset: cannot write agent csv");
    const auto& agent = data.agents[static_cast<std::size_t>(i)];
    for (Eigen::Index m = 0; m < agent.features.rows(); ++m) {
      out << agent.labels[static_cast<std::size_t>(m)];
      for (int c = 0; c < data.d; ++c) out << ',' << format_double(agent.features(m, c));
      out << '\n';
    }
  }
  json meta;
  meta["alpha"] = data.alpha;
  meta["seed"] = data.seed;
  meta["M"] = data.M;
  meta["d"] = data.d;
  meta["K"] = data.K;
  meta["n"] = data.num_agents();
  json means = json::array();
  for (int k = 0; k < data.K; ++k) {
    json row = json::array();
    for (int c = 0; c < data.d; ++c) row.push_back(data.class_means(k, c));
    means.push_back(std::move(row));
  }
  meta["class_means"] = std::move(means);
  std::ofstream out(fs::path(dir) / "dataset.json");
  if (!out) throw std::runtime_error("export_dataset: cannot write sidecar");
  out << meta.dump(2) << '\n';
}

SyntheticDataset import_dataset(const std::string& dir) {
  std::ifstream meta_in(fs::path(dir) / "dataset.json");
  if (!meta_in) throw std::runtime_error("import_dataset: missing dataset.json");
  json meta = json::parse(meta_in);

  SyntheticDataset data;
  data.alpha = meta.at("alpha").get<double>();
  data.seed = meta.at("seed").get<std::uint64_t>();
  data.M = meta.at("M").get<int>();
  data.d = meta.at("d").get<int>();
  data.K = meta.at("K").get<int>();
  const int n = meta.at("n").get<int>();
  data.class_means.resize(data.K, data.d);
  for (int k = 0; k < data.K; ++k)
    for (int c = 0; c < data.d; ++c)
      data.class_means(k, c) = meta.at("class_means")[static_cast<std::size_t>(k)]
                                                     [static_cast<std::size_t>(c)]
                                                         .get<double>();

  data.agents.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::ifstream in(fs::path(dir) / ("agent_" + std::to_string(i) + ".csv"));
    if (!in) throw std::runtime_error("import_dataset: missing agent csv " + std::to_string(i));
    std::vector<int> labels;
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string cell;
      std::getline(ls, cell, ',');
      labels.push_back(std::stoi(cell));
      for (int c = 0; c < data.d; ++c) {
        std::getline(ls, cell, ',');
        values.push_back(std::stod(cell));
      }
    }
    AgentSamples agent;
    agent.labels = std::move(labels);
    agent.features.resize(static_cast<Eigen::Index>(agent.labels.size()), data.d);
    for (Eigen::Index m = 0; m < agent.features.rows(); ++m)
      for (int c = 0; c < data.d; ++c)
        agent.features(m, c) = values[static_cast<std::size_t>(m) * data.d +
                                      static_cast<std::size_t>(c)];
    data.agents.push_back(std::move(agent));
  }
  return data;
}

}  // namespace d3gd
