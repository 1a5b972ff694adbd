#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace d3gd {

// Directed graph on nodes 0..n-1. An edge (i, j) points from i to j.
// Every node carries a self loop; construction inserts them unconditionally.
// `in_neighbors(i)` is the set {j : (j, i) is an edge} and always contains i.
class DirectedGraph {
 public:
  DirectedGraph() = default;

  static DirectedGraph from_edges(int n, const std::vector<std::pair<int, int>>& edges);
  static DirectedGraph complete(int n);
  // order[t] -> order[t+1], wrapping around
  static DirectedGraph directed_ring(const std::vector<int>& order);
  static DirectedGraph directed_ring(int n);
  // i -> i+1 and i+1 -> i for all i (mod n)
  static DirectedGraph symmetric_ring(int n);

  int size() const { return n_; }
  bool has_edge(int from, int to) const;
  const std::vector<int>& in_neighbors(int i) const { return in_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& out_neighbors(int i) const { return out_[static_cast<std::size_t>(i)]; }
  int in_degree_excluding_self(int i) const {
    return static_cast<int>(in_[static_cast<std::size_t>(i)].size()) - 1;
  }

  // Sorted (from, to) pairs, self loops included.
  std::vector<std::pair<int, int>> edge_list() const;
  std::size_t edge_count() const;

  bool operator==(const DirectedGraph& other) const { return n_ == other.n_ && in_ == other.in_; }

 private:
  int n_ = 0;
  std::vector<std::vector<int>> in_;   // in_[i]: sorted senders into i, contains i
  std::vector<std::vector<int>> out_;  // out_[i]: sorted receivers from i, contains i
};

struct ConnectivityReport {
  bool strongly_connected = false;
  std::vector<char> reachable_from_root;  // node 0 reaches these
  std::vector<char> reaching_root;        // these reach node 0
};

// Two-pass reachability from node 0 (forward and on the transpose).
// Aperiodicity needs no separate check: the unconditional self loops make
// every strongly connected graph here aperiodic.
ConnectivityReport check_strong_connectivity(const DirectedGraph& g);

// Each ordered pair (i, j), i != j, is kept with probability p; self loops
// always present. Regenerates with an incremented sub-seed until strongly
// connected; throws after `max_retries` attempts.
DirectedGraph generate_er_digraph(int n, double p, std::uint64_t seed, int max_retries = 64);

// Edge-list text format: one "i j" pair per line, 0-based, '#' starts a
// comment. Node count is max index + 1 (well-defined since every node has a
// self loop).
DirectedGraph read_edge_list(std::istream& in);
DirectedGraph read_edge_list_file(const std::string& path);
void write_edge_list(std::ostream& out, const DirectedGraph& g);
void write_edge_list_file(const std::string& path, const DirectedGraph& g);

}  // namespace d3gd
