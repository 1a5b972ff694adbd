#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "d3gd/harness.hpp"

using nlohmann::json;

namespace {

json load_spec(const std::string& path, const std::vector<std::string>& overrides,
               const std::string& seeds_csv) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open spec file: " + path);
  json spec = json::parse(in);
  if (spec.contains("spec") && spec["spec"].is_object()) spec = spec["spec"];
  spec = d3gd::merge_spec_defaults(spec);  // so overrides reach defaulted fields
  if (!seeds_csv.empty()) {
    json seeds = json::array();
    std::istringstream ss(seeds_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) seeds.push_back(std::stoull(tok));
    spec["seeds"] = std::move(seeds);
  }
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("override must look like key=value: " + kv);
    d3gd::apply_override(spec, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return spec;
}

int print_validation_errors(const std::vector<d3gd::ValidationError>& errors) {
  std::cerr << "spec validation failed:\n";
  for (const auto& e : errors) std::cerr << "  " << e.field << ": " << e.message << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decentralized optimization experiment runner"};
  app.require_subcommand(1);

  std::string spec_path;
  std::string seeds_csv;
  std::vector<std::string> overrides;
  int workers = 0;

  auto add_spec_options = [&](CLI::App* cmd) {
    cmd->add_option("spec", spec_path, "experiment spec JSON (or a manifest.json)")->required();
    cmd->add_option("--seeds", seeds_csv, "comma-separated seed list override");
    cmd->add_option("--override", overrides, "dotted-path override, e.g. graph.n=10")
        ->take_all();
  };

  CLI::App* run_cmd = app.add_subcommand("run", "run an experiment spec");
  add_spec_options(run_cmd);
  run_cmd->add_option("--workers", workers, "concurrent (algorithm, seed) cells");

  CLI::App* validate_cmd = app.add_subcommand("validate", "validate a spec and print it resolved");
  add_spec_options(validate_cmd);

  std::string out_dir;
  CLI::App* summarize_cmd =
      app.add_subcommand("summarize", "recompute the summary for a scenario output directory");
  summarize_cmd->add_option("dir", out_dir, "scenario directory (contains manifest.json)")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed() || validate_cmd->parsed()) {
      json user_spec;
      try {
        user_spec = load_spec(spec_path, overrides, seeds_csv);
      } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
      }
      const auto errors = d3gd::validate_spec(user_spec);
      if (!errors.empty()) return print_validation_errors(errors);
      d3gd::ExperimentSpec spec = d3gd::resolve_spec(user_spec);
      if (validate_cmd->parsed()) {
        std::cout << spec.resolved.dump(2) << "\n";
        return 0;
      }
      if (workers > 0) spec.workers = workers;
      const d3gd::ExperimentResult result = d3gd::run_experiment(spec);
      for (const auto& cell : result.cells) {
        std::cout << (cell.ok ? "ok      " : "failed  ") << cell.algorithm << " seed "
                  << cell.seed;
        if (!cell.error.empty()) std::cout << " (" << cell.error << ")";
        std::cout << "\n";
      }
      std::cout << "outputs: " << result.scenario_dir.string() << "\n";
      return result.any_failed ? 2 : 0;
    }
    if (summarize_cmd->parsed()) {
      const json summary = d3gd::summarize_output_dir(out_dir);
      std::cout << summary.dump(2) << "\n";
      return 0;
    }
  } catch (const d3gd::SpecError& e) {
    return print_validation_errors(e.errors());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
