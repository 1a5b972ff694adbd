#include "d3gd/graph.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "d3gd/rng.hpp"

namespace d3gd {

DirectedGraph DirectedGraph::from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
  if (n <= 0) throw std::invalid_argument("DirectedGraph: n must be positive");
  std::vector<std::set<int>> in(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    in[static_cast<std::size_t>(i)].insert(i);
    out[static_cast<std::size_t>(i)].insert(i);
  }
  for (const auto& [from, to] : edges) {
    if (from < 0 || from >= n || to < 0 || to >= n)
      throw std::invalid_argument("DirectedGraph: edge index out of range");
    out[static_cast<std::size_t>(from)].insert(to);
    in[static_cast<std::size_t>(to)].insert(from);
  }
  DirectedGraph g;
  g.n_ = n;
  g.in_.reserve(in.size());
  g.out_.reserve(out.size());
  for (auto& s : in) g.in_.emplace_back(s.begin(), s.end());
  for (auto& s : out) g.out_.emplace_back(s.begin(), s.end());
  return g;
}

DirectedGraph DirectedGraph::complete(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) edges.emplace_back(i, j);
  return from_edges(n, edges);
}

DirectedGraph DirectedGraph::directed_ring(const std::vector<int>& order) {
  const int n = static_cast<int>(order.size());
  if (n < 2) throw std::invalid_argument("directed_ring: need at least 2 nodes");
  std::vector<std::pair<int, int>> edges;
  for (int t = 0; t < n; ++t) edges.emplace_back(order[static_cast<std::size_t>(t)],
                                                 order[static_cast<std::size_t>((t + 1) % n)]);
  return from_edges(n, edges);
}

DirectedGraph DirectedGraph::directed_ring(int n) {
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  return directed_ring(order);
}

DirectedGraph DirectedGraph::symmetric_ring(int n) {
  if (n < 2) throw std::invalid_argument("symmetric_ring: need at least 2 nodes");
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    edges.emplace_back(i, (i + 1) % n);
    edges.emplace_back((i + 1) % n, i);
  }
  return from_edges(n, edges);
}

bool DirectedGraph::has_edge(int from, int to) const {
  if (from < 0 || from >= n_ || to < 0 || to >= n_) return false;
  const auto& senders = in_[static_cast<std::size_t>(to)];
  return std::binary_search(senders.begin(), senders.end(), from);
}

std::vector<std::pair<int, int>> DirectedGraph::edge_list() const {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n_; ++i)
    for (int j : out_[static_cast<std::size_t>(i)]) edges.emplace_back(i, j);
  std::sort(edges.begin(), edges.end());
  return edges;
}

std::size_t DirectedGraph::edge_count() const {
  std::size_t c = 0;
  for (const auto& v : out_) c += v.size();
  return c;
}

namespace {

std::vector<char> reachable(const DirectedGraph& g, bool forward) {
  std::vector<char> seen(static_cast<std::size_t>(g.size()), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    const auto& next = forward ? g.out_neighbors(u) : g.in_neighbors(u);
    for (int v : next) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

}  // namespace

ConnectivityReport check_strong_connectivity(const DirectedGraph& g) {
  ConnectivityReport report;
  report.reachable_from_root = reachable(g, /*forward=*/true);
  report.reaching_root = reachable(g, /*forward=*/false);
  report.strongly_connected =
      std::all_of(report.reachable_from_root.begin(), report.reachable_from_root.end(),
                  [](char c) { return c != 0; }) &&
      std::all_of(report.reaching_root.begin(), report.reaching_root.end(),
                  [](char c) { return c != 0; });
  return report;
}

DirectedGraph generate_er_digraph(int n, double p, std::uint64_t seed, int max_retries) {
  if (n < 2) throw std::invalid_argument("generate_er_digraph: n must be >= 2");
  if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("generate_er_digraph: p must be in (0,1]");
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    Rng rng(seed, StreamPurpose::graph, static_cast<std::uint64_t>(attempt));
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && rng.uniform() < p) edges.emplace_back(i, j);
    DirectedGraph g = DirectedGraph::from_edges(n, edges);
    if (check_strong_connectivity(g).strongly_connected) return g;
  }
  std::ostringstream msg;
  msg << "generate_er_digraph: no strongly connected graph after " << max_retries
      << " attempts (n=" << n << ", p=" << p << ", seed=" << seed << ")";
  throw std::runtime_error(msg.str());
}

DirectedGraph read_edge_list(std::istream& in) {
  std::vector<std::pair<int, int>> edges;
  int max_index = -1;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    int from, to;
    if (!(ls >> from)) continue;  // blank or comment-only line
    if (!(ls >> to))
      throw std::runtime_error("edge list: malformed line " + std::to_string(lineno));
    if (from < 0 || to < 0)
      throw std::runtime_error("edge list: negative index on line " + std::to_string(lineno));
    edges.emplace_back(from, to);
    max_index = std::max({max_index, from, to});
  }
  if (max_index < 0) throw std::runtime_error("edge list: no edges found");
  return DirectedGraph::from_edges(max_index + 1, edges);
}

DirectedGraph read_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge list file: " + path);
  return read_edge_list(in);
}

void write_edge_list(std::ostream& out, const DirectedGraph& g) {
  out << "# directed edge list, one \"from to\" pair per line, 0-based\n";
  out << "# n = " << g.size() << "\n";
  for (const auto& [from, to] : g.edge_list()) out << from << " " << to << "\n";
}

void write_edge_list_file(const std::string& path, const DirectedGraph& g) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_edge_list(out, g);
}

}  // namespace d3gd
