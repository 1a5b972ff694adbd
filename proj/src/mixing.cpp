#include "d3gd/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "d3gd/rng.hpp"

namespace d3gd {

MixingMatrix::MixingMatrix(const DirectedGraph& graph, Eigen::MatrixXd weights)
    : MixingMatrix(std::make_shared<const DirectedGraph>(graph), std::move(weights)) {}

MixingMatrix::MixingMatrix(std::shared_ptr<const DirectedGraph> graph, Eigen::MatrixXd weights)
    : graph_(std::move(graph)), weights_(std::move(weights)) {
  validate();
}

void MixingMatrix::validate() const {
  const int n = graph_->size();
  if (weights_.rows() != n || weights_.cols() != n)
    throw std::invalid_argument("MixingMatrix: weight shape does not match graph");
  for (int i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < n; ++j) {
      const double a = weights_(i, j);
      if (!(a >= 0.0) || a > 1.0 + kRowSumTol)
        throw std::invalid_argument("MixingMatrix: entries must lie in [0, 1]");
      const bool on_support = graph_->has_edge(j, i);
      if (!on_support && a != 0.0)
        throw std::invalid_argument("MixingMatrix: nonzero weight off the edge support");
      if (on_support && a == 0.0)
        throw std::invalid_argument("MixingMatrix: zero weight on a supported edge");
      row_sum += a;
    }
    if (std::abs(row_sum - 1.0) > kRowSumTol)
      throw std::invalid_argument("MixingMatrix: row " + std::to_string(i) +
                                  " does not sum to 1");
  }
}

namespace {

void require_strongly_connected(const DirectedGraph& g, const char* who) {
  if (!check_strong_connectivity(g).strongly_connected)
    throw std::invalid_argument(std::string(who) + ": graph must be strongly connected");
}

}  // namespace

MixingMatrix uniform_in_weights(const DirectedGraph& g) {
  require_strongly_connected(g, "uniform_in_weights");
  const int n = g.size();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double a = 1.0 / (g.in_degree_excluding_self(i) + 1);
    for (int j : g.in_neighbors(i)) w(i, j) = a;
  }
  return MixingMatrix(g, std::move(w));
}

MixingMatrix metropolis_weights(const DirectedGraph& g) {
  require_strongly_connected(g, "metropolis_weights");
  const int n = g.size();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j : g.in_neighbors(i)) {
      if (j == i) continue;
      const double a =
          1.0 / (1.0 + std::max(g.in_degree_excluding_self(i), g.in_degree_excluding_self(j)));
      w(i, j) = a;
      off += a;
    }
    // off <= deg/(1+deg) < 1, but guard the invariant anyway
    if (off >= 1.0)
      throw std::runtime_error("metropolis_weights: nonpositive self weight at row " +
                               std::to_string(i));
    w(i, i) = 1.0 - off;
  }
  return MixingMatrix(g, std::move(w));
}

Eigen::VectorXd perron_vector(const MixingMatrix& A, double tol, int max_iter,
                              const Eigen::VectorXd* warm_start, double* residual_out) {
  const int n = A.size();
  const Eigen::MatrixXd At = A.weights().transpose();
  if (max_iter <= 0)
    max_iter = static_cast<int>(100.0 * n * std::log(std::max(n, 2)) + 1000.0);

  Eigen::VectorXd x;
  if (warm_start != nullptr && warm_start->size() == n && warm_start->minCoeff() > 0.0) {
    x = *warm_start / warm_start->sum();
  } else {
    x = Eigen::VectorXd::Constant(n, 1.0 / n);
  }

  double diff = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd next = At * x;
    next /= next.sum();
    diff = (next - x).lpNorm<Eigen::Infinity>();
    x = std::move(next);
    if (diff < tol) {
      const double residual = (At * x - x).lpNorm<Eigen::Infinity>();
      if (x.minCoeff() <= 0.0)
        throw std::runtime_error(
            "perron_vector: nonpositive entry; support is likely not irreducible");
      if (residual_out != nullptr) *residual_out = residual;
      return x;
    }
  }
  const double residual = (At * x - x).lpNorm<Eigen::Infinity>();
  throw ConvergenceError("perron_vector: no convergence within " + std::to_string(max_iter) +
                             " iterations (last residual " + std::to_string(residual) + ")",
                         residual);
}

double spectral_gap(const MixingMatrix& A, const Eigen::VectorXd& pi, int half_window,
                    int num_starts, std::uint64_t seed) {
  const int n = A.size();
  if (n == 1) return 1.0;
  if (pi.size() != n) throw std::invalid_argument("spectral_gap: pi has wrong length");
  half_window = std::max(half_window, 50);

  const Eigen::MatrixXd B =
      A.weights() - Eigen::VectorXd::Ones(n) * pi.transpose();

  Rng rng(seed, StreamPurpose::misc);
  double rate = 0.0;
  for (int s = 0; s < std::max(num_starts, 4); ++s) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.normal();
    const double nv = v.norm();
    if (nv == 0.0) continue;
    v /= nv;

    double log_m = 0.0, log_2m = 0.0;
    bool dead = false;
    double acc = 0.0;
    for (int k = 1; k <= 2 * half_window; ++k) {
      v = B * v;
      const double norm = v.norm();
      if (norm == 0.0 || !std::isfinite(norm)) {
        dead = true;
        break;
      }
      acc += std::log(norm);
      v /= norm;
      if (k == half_window) log_m = acc;
    }
    if (dead) continue;  // B annihilated this start; growth rate 0
    log_2m = acc;
    const double r = std::exp((log_2m - log_m) / half_window);
    rate = std::max(rate, r);
  }
  double rho = 1.0 - rate;
  rho = std::min(rho, 1.0);
  rho = std::max(rho, 1e-12);
  return rho;
}

SpectralReport spectral_report(const MixingMatrix& A, double tol, int max_iter) {
  SpectralReport report;
  report.perron = perron_vector(A, tol, max_iter, nullptr, &report.residual);
  report.spectral_gap = spectral_gap(A, report.perron);
  report.gap_method = "norm-growth rate of (A - 1 pi^T)^k over random starts";
  return report;
}

namespace {

void append_double(std::string& out, double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  out += buf;
}

}  // namespace

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
  std::string line;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    line.clear();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) line += ',';
      append_double(line, m(i, j), "%.17g");
    }
    line += '\n';
    out << line;
  }
}

void write_matrix_csv_file(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_matrix_csv(out, m);
}

Eigen::MatrixXd read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error("matrix csv: ragged rows");
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

Eigen::MatrixXd read_matrix_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix csv: " + path);
  return read_matrix_csv(in);
}

void write_dot(std::ostream& out, const MixingMatrix& A) {
  out << "digraph mixing {\n";
  const int n = A.size();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      // entry (i, j) weights the edge j -> i
      if (A.weights()(i, j) != 0.0) {
        char label[32];
        std::snprintf(label, sizeof(label), "%.4f", A.weights()(i, j));
        out << "  " << j << " -> " << i << " [label=\"" << label << "\"];\n";
      }
    }
  }
  out << "}\n";
}

void write_dot_file(const std::string& path, const MixingMatrix& A) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_dot(out, A);
}

}  // namespace d3gd
