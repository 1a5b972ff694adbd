#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>

#include "d3gd/graph.hpp"

namespace d3gd {

// Thrown when an iterative solver runs out of iterations; carries the last
// residual it saw.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Row-stochastic weight matrix confined to a graph's support: entry (i, j) is
// the weight agent i places on sender j, positive exactly when the edge
// j -> i exists. Each row sums to 1 within kRowSumTol. Immutable once built.
class MixingMatrix {
 public:
  static constexpr double kRowSumTol = 1e-12;

  MixingMatrix(const DirectedGraph& graph, Eigen::MatrixXd weights);
  MixingMatrix(std::shared_ptr<const DirectedGraph> graph, Eigen::MatrixXd weights);

  const DirectedGraph& graph() const { return *graph_; }
  std::shared_ptr<const DirectedGraph> graph_ptr() const { return graph_; }
  const Eigen::MatrixXd& weights() const { return weights_; }
  int size() const { return static_cast<int>(weights_.rows()); }

 private:
  void validate() const;

  std::shared_ptr<const DirectedGraph> graph_;
  Eigen::MatrixXd weights_;
};

// A(i, j) = 1 / (|in-neighbors of i excluding i| + 1) on the support.
MixingMatrix uniform_in_weights(const DirectedGraph& g);

// In-degree Metropolis rule: A(i, j) = 1 / (1 + max(deg_in(i), deg_in(j)))
// for senders j != i, remainder on the diagonal. Degrees exclude self loops.
// Coincides with the classical Metropolis weights on symmetric graphs.
MixingMatrix metropolis_weights(const DirectedGraph& g);

struct SpectralReport {
  Eigen::VectorXd perron;    // positive, sums to 1
  double spectral_gap = 0.0; // in (0, 1]
  double residual = 0.0;     // ||pi^T A - pi^T||_inf
  std::string gap_method;
};

// Left Perron vector of A by power iteration on A^T with sum normalization.
// Stops when successive iterates are within `tol` in the inf norm; throws
// ConvergenceError (carrying the last residual) when `max_iter` runs out.
// max_iter <= 0 selects the default 100 * n * log(n) + 1000.
Eigen::VectorXd perron_vector(const MixingMatrix& A, double tol = 1e-12, int max_iter = 0,
                              const Eigen::VectorXd* warm_start = nullptr,
                              double* residual_out = nullptr);

// Estimates the spectral radius r of B = A - 1 pi^T from the geometric growth
// rate of ||B^k v|| between steps m and 2m, maximized over several random unit
// starts (robust when the dominant eigenvalues form a complex pair), and
// returns 1 - r clamped to (0, 1].
double spectral_gap(const MixingMatrix& A, const Eigen::VectorXd& pi, int half_window = 64,
                    int num_starts = 6, std::uint64_t seed = 0xd36d);

SpectralReport spectral_report(const MixingMatrix& A, double tol = 1e-12, int max_iter = 0);

// CSV: one row per line, comma separated, 17 significant digits.
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);
void write_matrix_csv_file(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(std::istream& in);
Eigen::MatrixXd read_matrix_csv_file(const std::string& path);

// DOT export of the weighted digraph; edge labels carry 4 decimals.
void write_dot(std::ostream& out, const MixingMatrix& A);
void write_dot_file(const std::string& path, const MixingMatrix& A);

}  // namespace d3gd
