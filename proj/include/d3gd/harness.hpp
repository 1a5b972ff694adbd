#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "d3gd/engine.hpp"
#include "d3gd/metrics.hpp"

namespace d3gd {

struct ValidationError {
  std::string field;
  std::string message;
};

class SpecError : public std::runtime_error {
 public:
  explicit SpecError(std::vector<ValidationError> errors);
  const std::vector<ValidationError>& errors() const { return errors_; }

 private:
  std::vector<ValidationError> errors_;
};

struct GraphSpec {
  std::string kind = "er";  // er | ring | edge_list
  int n = 20;
  double p = 0.6;
  std::vector<int> ring_order;
  std::string edge_list_path;
  std::string initial_weights = "metropolis";  // metropolis | uniform
};

struct DataSpec {
  std::vector<double> alpha_per_agent;  // resolved to one alpha per agent
  int M = 100;
  int d = 10;
  int K = 10;
  double lambda = 1e-4;
  SignMode sign_mode = SignMode::verbatim;
};

struct ThresholdSpec {
  std::string rule = "baseline_fraction";  // baseline_fraction | absolute
  double fraction = 0.6;
  double value = 0.0;
};

struct AlgorithmSpec {
  std::string name;
  RunConfig config;
};

struct ExperimentSpec {
  std::string scenario;
  std::filesystem::path output_dir = "out";
  std::vector<std::uint64_t> seeds;
  int workers = 1;
  bool export_dataset = false;
  std::string baseline = "didgd";
  GraphSpec graph;
  DataSpec data;
  ThresholdSpec threshold;
  InitRule theta0{ThetaInit::gaussian, 0.1, 0};
  std::vector<int> snapshot_iters;
  int record_stride = 1;
  ConstantsConfig constants_estimation{24, 2.0, 0};
  nlohmann::json resolved;  // the fully resolved spec, as recorded in the manifest
};

// Applies scenario defaults and type checks; throws SpecError on problems.
ExperimentSpec resolve_spec(const nlohmann::json& user_spec);
// Non-throwing variant collecting every problem found.
std::vector<ValidationError> validate_spec(const nlohmann::json& user_spec);
// Merges scenario defaults into a user spec without validating it (idempotent);
// lets overrides address defaulted fields such as algorithms.0.T.
nlohmann::json merge_spec_defaults(const nlohmann::json& user_spec);

// Dotted-path override, e.g. apply_override(spec, "graph.n", "10") or
// "algorithms.0.T=250". Values are parsed as JSON scalars, falling back to
// strings.
void apply_override(nlohmann::json& spec, const std::string& key, const std::string& value);

struct CellResult {
  std::string algorithm;
  std::uint64_t seed = 0;
  bool ok = false;
  bool diverged = false;
  std::string error;
  std::filesystem::path dir;
};

struct ExperimentResult {
  std::filesystem::path scenario_dir;
  std::vector<CellResult> cells;
  bool any_failed = false;
};

// Runs every (algorithm, seed) cell, writing
//   <out>/<scenario>/<algo>/<seed>/metrics.csv, A_snapshot_<k>.csv|.dot,
//   summary.json
// plus a scenario manifest.json and aggregate summary.json. Cells run
// concurrently up to `workers`; a diverged or failed cell is recorded and
// the rest continue.
ExperimentResult run_experiment(const ExperimentSpec& spec);

// iterations-to-threshold ratio (baseline / candidate), first crossing, no
// interpolation; nullopt when either trajectory never reaches tau.
std::optional<double> summarize_speedup(std::span<const IterationRecord> baseline,
                                        std::span<const IterationRecord> candidate, double tau);

// Recomputes the aggregate summary for a scenario directory from its
// manifest and metrics CSVs; writes summary.json there and returns it.
nlohmann::json summarize_output_dir(const std::filesystem::path& scenario_dir);

}  // namespace d3gd
