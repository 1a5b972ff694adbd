#include "d3gd/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#ifndef D3GD_VERSION
#define D3GD_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace d3gd {

SpecError::SpecError(std::vector<ValidationError> errors)
    : std::runtime_error([&errors] {
        std::string msg = "invalid experiment spec:";
        for (const auto& e : errors) msg += "\n  " + e.field + ": " + e.message;
        return msg;
      }()),
      errors_(std::move(errors)) {}

namespace {

json algorithm_defaults(const std::string& mode, int default_T) {
  json a;
  a["name"] = mode;
  a["mode"] = mode;
  a["T"] = default_T;
  a["gamma"] = {{"kind", "constant"}, {"value", 0.1}};
  a["eta"] = {{"kind", "constant"}, {"value", 1.0}};
  a["delta"] = 0.2;
  a["active_set"] = {{"policy", "all"}, {"m", 1}, {"seed", 0}};
  a["central_gradient"] = "algorithm1_targets";
  a["exact_variant"] = "chain_rule";
  a["backtracking"] = false;
  a["pi_refresh_steps"] = 5;
  a["divergence_guard"] = 1e12;
  a["lyapunov_coefficient"] = 3.0;
  return a;
}

json scenario_defaults(const std::string& scenario) {
  const bool ring = scenario == "ring_outlier";
  const int default_T = ring ? 1000 : 2000;
  json s;
  s["scenario"] = scenario;
  s["output_dir"] = "out";
  s["seeds"] = {0, 1, 2, 3, 4};
  s["workers"] = 1;
  s["export_dataset"] = false;
  s["baseline"] = "didgd";
  s["record_stride"] = 1;
  s["snapshot_iters"] = json::array();
  s["threshold"] = {{"rule", "baseline_fraction"}, {"fraction", 0.6}};
  if (ring) {
    s["graph"] = {{"kind", "ring"},
                  {"ring_order", {0, 2, 3, 1}},
                  {"initial_weights", "metropolis"}};
    s["data"] = {{"alpha_per_agent", {0.1, 100.0, 100.0, 100.0}},
                 {"M", 100},
                 {"d", 10},
                 {"K", 10},
                 {"lambda", 1e-4},
                 {"sign_mode", "verbatim"}};
  } else {
    s["graph"] = {{"kind", "er"}, {"n", 20}, {"p", 0.6}, {"initial_weights", "metropolis"}};
    s["data"] = {{"alpha", 0.1}, {"M", 100},      {"d", 10},
                 {"K", 10},      {"lambda", 1e-4}, {"sign_mode", "verbatim"}};
  }
  s["theta0"] = {{"rule", "gaussian"}, {"scale", 0.1}};
  s["constants_estimation"] = {{"num_thetas", 24}, {"radius", 2.0}};
  s["algorithms"] = json::array({algorithm_defaults("didgd", default_T),
                                 algorithm_defaults("d3gd_central", default_T),
                                 algorithm_defaults("d3gd_decentralized", default_T)});
  return s;
}

void deep_merge(json& base, const json& overlay) {
  if (!overlay.is_object() || !base.is_object()) {
    base = overlay;
    return;
  }
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    if (base.contains(it.key()))
      deep_merge(base[it.key()], it.value());
    else
      base[it.key()] = it.value();
  }
}

StepSchedule parse_schedule(const json& j, const std::string& field,
                            std::vector<ValidationError>& errors) {
  try {
    if (j.is_number()) return StepSchedule::constant(j.get<double>());
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant") return StepSchedule::constant(j.at("value").get<double>());
    if (kind == "polynomial")
      return StepSchedule::polynomial(j.at("base").get<double>(), j.at("exponent").get<double>());
    errors.push_back({field, "unknown schedule kind: " + kind});
  } catch (const std::exception& e) {
    errors.push_back({field, e.what()});
  }
  return StepSchedule::constant(0.0);
}

struct ParsedSpec {
  ExperimentSpec spec;
  std::vector<AlgorithmSpec> algorithms;
  std::vector<double> lyapunov_coefficients;
};

ParsedSpec parse_resolved(const json& resolved, std::vector<ValidationError>& errors) {
  ParsedSpec parsed;
  ExperimentSpec& spec = parsed.spec;
  spec.resolved = resolved;

  auto field_error = [&errors](const std::string& field, const std::string& message) {
    errors.push_back({field, message});
  };

  try {
    spec.scenario = resolved.at("scenario").get<std::string>();
    if (spec.scenario != "er_convergence" && spec.scenario != "ring_outlier" &&
        spec.scenario != "custom")
      field_error("scenario", "must be er_convergence, ring_outlier or custom");
    spec.output_dir = resolved.at("output_dir").get<std::string>();
    for (const auto& s : resolved.at("seeds")) {
      if (!s.is_number_integer() || s.get<long long>() < 0) {
        field_error("seeds", "entries must be nonnegative integers");
        break;
      }
      spec.seeds.push_back(s.get<std::uint64_t>());
    }
    if (spec.seeds.empty()) field_error("seeds", "must be nonempty");
    spec.workers = resolved.at("workers").get<int>();
    if (spec.workers < 1) field_error("workers", "must be >= 1");
    spec.export_dataset = resolved.at("export_dataset").get<bool>();
    spec.baseline = resolved.at("baseline").get<std::string>();
    spec.record_stride = resolved.at("record_stride").get<int>();
    if (spec.record_stride < 1) field_error("record_stride", "must be >= 1");
    for (const auto& s : resolved.at("snapshot_iters")) spec.snapshot_iters.push_back(s.get<int>());

    const json& th = resolved.at("threshold");
    spec.threshold.rule = th.at("rule").get<std::string>();
    if (spec.threshold.rule == "baseline_fraction") {
      spec.threshold.fraction = th.at("fraction").get<double>();
      if (!(spec.threshold.fraction > 0.0) || spec.threshold.fraction > 1.0)
        field_error("threshold.fraction", "must be in (0, 1]");
    } else if (spec.threshold.rule == "absolute") {
      spec.threshold.value = th.at("value").get<double>();
      if (!(spec.threshold.value > 0.0)) field_error("threshold.value", "must be positive");
    } else {
      field_error("threshold.rule", "must be baseline_fraction or absolute");
    }

    const json& g = resolved.at("graph");
    spec.graph.kind = g.at("kind").get<std::string>();
    spec.graph.initial_weights = g.at("initial_weights").get<std::string>();
    if (spec.graph.initial_weights != "metropolis" && spec.graph.initial_weights != "uniform")
      field_error("graph.initial_weights", "must be metropolis or uniform");
    int n_agents = -1;
    if (spec.graph.kind == "er") {
      spec.graph.n = g.at("n").get<int>();
      spec.graph.p = g.at("p").get<double>();
      if (spec.graph.n < 2) field_error("graph.n", "must be >= 2");
      if (!(spec.graph.p > 0.0) || spec.graph.p > 1.0) field_error("graph.p", "must be in (0, 1]");
      n_agents = spec.graph.n;
    } else if (spec.graph.kind == "ring") {
      for (const auto& v : g.at("ring_order")) spec.graph.ring_order.push_back(v.get<int>());
      const int n = static_cast<int>(spec.graph.ring_order.size());
      if (n < 2) field_error("graph.ring_order", "need at least 2 nodes");
      std::vector<int> sorted = spec.graph.ring_order;
      std::sort(sorted.begin(), sorted.end());
      for (int i = 0; i < n; ++i)
        if (sorted[static_cast<std::size_t>(i)] != i) {
          field_error("graph.ring_order", "must be a permutation of 0..n-1");
          break;
        }
      n_agents = n;
    } else if (spec.graph.kind == "edge_list") {
      spec.graph.edge_list_path = g.at("edge_list").get<std::string>();
    } else {
      field_error("graph.kind", "must be er, ring or edge_list");
    }

    const json& data = resolved.at("data");
    spec.data.M = data.at("M").get<int>();
    spec.data.d = data.at("d").get<int>();
    spec.data.K = data.at("K").get<int>();
    spec.data.lambda = data.at("lambda").get<double>();
    if (spec.data.M < 0) field_error("data.M", "must be >= 0");
    if (spec.data.d < 1) field_error("data.d", "must be >= 1");
    if (spec.data.K < 1) field_error("data.K", "must be >= 1");
    if (spec.data.lambda < 0.0) field_error("data.lambda", "must be >= 0");
    try {
      spec.data.sign_mode = sign_mode_from_string(data.at("sign_mode").get<std::string>());
    } catch (const std::exception& e) {
      field_error("data.sign_mode", e.what());
    }
    if (data.contains("alpha_per_agent")) {
      for (const auto& a : data.at("alpha_per_agent"))
        spec.data.alpha_per_agent.push_back(a.get<double>());
      if (n_agents > 0 && static_cast<int>(spec.data.alpha_per_agent.size()) != n_agents)
        field_error("data.alpha_per_agent", "length must equal the agent count");
    } else {
      const double alpha = data.at("alpha").get<double>();
      if (n_agents > 0)
        spec.data.alpha_per_agent.assign(static_cast<std::size_t>(n_agents), alpha);
      else
        spec.data.alpha_per_agent.assign(1, alpha);  // resized once n is known
    }
    for (double a : spec.data.alpha_per_agent)
      if (!(a > 0.0)) {
        field_error("data.alpha", "alpha values must be positive");
        break;
      }

    const json& t0 = resolved.at("theta0");
    const std::string rule = t0.at("rule").get<std::string>();
    if (rule == "zeros")
      spec.theta0.kind = ThetaInit::zeros;
    else if (rule == "gaussian")
      spec.theta0.kind = ThetaInit::gaussian;
    else
      field_error("theta0.rule", "must be zeros or gaussian");
    spec.theta0.scale = t0.at("scale").get<double>();

    const json& ce = resolved.at("constants_estimation");
    spec.constants_estimation.num_thetas = ce.at("num_thetas").get<int>();
    spec.constants_estimation.radius = ce.at("radius").get<double>();
    if (spec.constants_estimation.num_thetas < 2)
      field_error("constants_estimation.num_thetas", "must be >= 2");

    const json& algos = resolved.at("algorithms");
    if (!algos.is_array() || algos.empty()) field_error("algorithms", "must be nonempty");
    std::vector<std::string> names;
    for (std::size_t a = 0; a < algos.size(); ++a) {
      const json& aj = algos[a];
      const std::string where = "algorithms." + std::to_string(a);
      AlgorithmSpec algo;
      try {
        algo.name = aj.at("name").get<std::string>();
        algo.config.mode = mode_from_string(aj.at("mode").get<std::string>());
        algo.config.T = aj.at("T").get<int>();
        if (algo.config.T < 0) field_error(where + ".T", "must be >= 0");
        algo.config.gamma = parse_schedule(aj.at("gamma"), where + ".gamma", errors);
        algo.config.eta = parse_schedule(aj.at("eta"), where + ".eta", errors);
        algo.config.delta = aj.at("delta").get<double>();
        if (algo.config.mode != Mode::didgd &&
            (!(algo.config.delta > 0.0) || !(algo.config.delta < 1.0)))
          field_error(where + ".delta", "must be in (0, 1)");
        const json& as = aj.at("active_set");
        const std::string policy = as.at("policy").get<std::string>();
        if (policy == "all")
          algo.config.active_set.kind = ActiveSetPolicy::Kind::all;
        else if (policy == "round_robin")
          algo.config.active_set.kind = ActiveSetPolicy::Kind::round_robin;
        else if (policy == "random")
          algo.config.active_set.kind = ActiveSetPolicy::Kind::random;
        else
          field_error(where + ".active_set.policy", "must be all, round_robin or random");
        algo.config.active_set.m = as.at("m").get<int>();
        algo.config.active_set.seed = as.at("seed").get<std::uint64_t>();
        if (algo.config.active_set.kind != ActiveSetPolicy::Kind::all &&
            algo.config.active_set.m < 1)
          field_error(where + ".active_set.m", "must be >= 1");
        const std::string cg = aj.at("central_gradient").get<std::string>();
        if (cg == "algorithm1_targets")
          algo.config.central_gradient = CentralGradient::algorithm1_targets;
        else if (cg == "exact_chain_rule")
          algo.config.central_gradient = CentralGradient::exact_chain_rule;
        else
          field_error(where + ".central_gradient",
                      "must be algorithm1_targets or exact_chain_rule");
        const std::string ev = aj.at("exact_variant").get<std::string>();
        if (ev == "chain_rule")
          algo.config.exact_variant = RowGradientVariant::chain_rule;
        else if (ev == "as_printed")
          algo.config.exact_variant = RowGradientVariant::as_printed;
        else
          field_error(where + ".exact_variant", "must be chain_rule or as_printed");
        algo.config.backtracking = aj.at("backtracking").get<bool>();
        algo.config.pi_refresh_steps = aj.at("pi_refresh_steps").get<int>();
        algo.config.divergence_guard = aj.at("divergence_guard").get<double>();
        parsed.lyapunov_coefficients.push_back(aj.at("lyapunov_coefficient").get<double>());
        names.push_back(algo.name);
        parsed.algorithms.push_back(std::move(algo));
      } catch (const std::exception& e) {
        field_error(where, e.what());
      }
    }
    for (std::size_t a = 0; a < names.size(); ++a)
      for (std::size_t b = a + 1; b < names.size(); ++b)
        if (names[a] == names[b]) field_error("algorithms", "duplicate name: " + names[a]);
    if (!names.empty() && std::find(names.begin(), names.end(), spec.baseline) == names.end())
      field_error("baseline", "not among algorithm names: " + spec.baseline);
  } catch (const std::exception& e) {
    field_error("spec", e.what());
  }
  return parsed;
}

json resolve_to_json(const json& user_spec, std::vector<ValidationError>& errors) {
  json user = user_spec;
  if (user.contains("spec") && user["spec"].is_object()) user = user["spec"];  // manifest input
  std::string scenario = "er_convergence";
  if (user.contains("scenario")) {
    if (user["scenario"].is_string())
      scenario = user["scenario"].get<std::string>();
    else
      errors.push_back({"scenario", "must be a string"});
  } else {
    errors.push_back({"scenario", "missing"});
  }
  json resolved = scenario_defaults(scenario);
  const int default_T = scenario == "ring_outlier" ? 1000 : 2000;

  // merge algorithms entry-by-entry against the per-mode defaults
  if (user.contains("algorithms")) {
    if (!user["algorithms"].is_array()) {
      errors.push_back({"algorithms", "must be an array"});
      user.erase("algorithms");
    } else {
      json merged = json::array();
      for (const auto& entry : user["algorithms"]) {
        std::string mode = "didgd";
        if (entry.is_object() && entry.contains("mode") && entry["mode"].is_string())
          mode = entry["mode"].get<std::string>();
        json base = algorithm_defaults(mode, default_T);
        deep_merge(base, entry);
        merged.push_back(std::move(base));
      }
      resolved["algorithms"] = std::move(merged);
      user.erase("algorithms");
    }
  }
  deep_merge(resolved, user);
  return resolved;
}

}  // namespace

json merge_spec_defaults(const json& user_spec) {
  std::vector<ValidationError> ignored;
  return resolve_to_json(user_spec, ignored);
}

std::vector<ValidationError> validate_spec(const json& user_spec) {
  std::vector<ValidationError> errors;
  const json resolved = resolve_to_json(user_spec, errors);
  parse_resolved(resolved, errors);
  return errors;
}

ExperimentSpec resolve_spec(const json& user_spec) {
  std::vector<ValidationError> errors;
  const json resolved = resolve_to_json(user_spec, errors);
  ParsedSpec parsed = parse_resolved(resolved, errors);
  if (!errors.empty()) throw SpecError(std::move(errors));
  return std::move(parsed.spec);
}

void apply_override(json& spec, const std::string& key, const std::string& value) {
  json parsed_value;
  try {
    parsed_value = json::parse(value);
  } catch (const json::parse_error&) {
    parsed_value = value;  // plain string
  }
  json* node = &spec;
  std::istringstream path(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(path, part, '.')) parts.push_back(part);
  if (parts.empty()) throw std::invalid_argument("override: empty key");
  for (std::size_t t = 0; t + 1 < parts.size(); ++t) {
    const std::string& p = parts[t];
    if (!p.empty() && std::all_of(p.begin(), p.end(), [](char c) { return std::isdigit(c); })) {
      const std::size_t idx = std::stoul(p);
      if (!node->is_array() || idx >= node->size())
        throw std::invalid_argument("override: bad array index in " + key);
      node = &(*node)[idx];
    } else {
      node = &(*node)[p];
    }
  }
  const std::string& leaf = parts.back();
  if (!leaf.empty() && std::all_of(leaf.begin(), leaf.end(), [](char c) { return std::isdigit(c); })) {
    const std::size_t idx = std::stoul(leaf);
    if (!node->is_array() || idx >= node->size())
      throw std::invalid_argument("override: bad array index in " + key);
    (*node)[idx] = parsed_value;
  } else {
    (*node)[leaf] = parsed_value;
  }
}

namespace {

struct CellPlan {
  AlgorithmSpec algorithm;
  double lyapunov_coefficient = 3.0;
  std::uint64_t seed = 0;
};

json record_to_json(const IterationRecord& r) {
  json j;
  j["k"] = r.k;
  j["stationarity"] = r.stationarity;
  j["disagreement"] = r.disagreement;
  j["weighted_consensus_error"] = r.weighted_consensus_error;
  j["lyapunov"] = r.lyapunov;
  j["j_value"] = r.j_value;
  j["grad_f_at_avg"] = r.grad_f_at_avg;
  j["y_deviation"] = r.y_deviation;
  if (r.spectral_gap_k) j["spectral_gap"] = *r.spectral_gap_k;
  return j;
}

DirectedGraph build_graph(const GraphSpec& g, std::uint64_t seed) {
  if (g.kind == "er") return generate_er_digraph(g.n, g.p, seed);
  if (g.kind == "ring") return DirectedGraph::directed_ring(g.ring_order);
  return read_edge_list_file(g.edge_list_path);
}

CellResult run_cell(const ExperimentSpec& spec, const CellPlan& plan,
                    const fs::path& scenario_dir) {
  CellResult cell;
  cell.algorithm = plan.algorithm.name;
  cell.seed = plan.seed;
  cell.dir = scenario_dir / plan.algorithm.name / std::to_string(plan.seed);
  try {
    fs::create_directories(cell.dir);
    const DirectedGraph graph = build_graph(spec.graph, plan.seed);
    const int n = graph.size();
    std::vector<double> alphas = spec.data.alpha_per_agent;
    if (static_cast<int>(alphas.size()) == 1 && n > 1)
      alphas.assign(static_cast<std::size_t>(n), alphas.front());
    if (static_cast<int>(alphas.size()) != n)
      throw std::invalid_argument("alpha_per_agent length does not match the graph");

    const MixingMatrix A0 = spec.graph.initial_weights == "uniform"
                                ? uniform_in_weights(graph)
                                : metropolis_weights(graph);
    const SyntheticDataset dataset =
        make_synthetic_dataset(alphas, spec.data.K, spec.data.M, spec.data.d, plan.seed);
    const SigmoidClassifierProblem problem(dataset, spec.data.lambda, spec.data.sign_mode);

    ConstantsConfig ccfg = spec.constants_estimation;
    ccfg.seed = plan.seed;
    const ProblemConstants constants = estimate_constants(problem, ccfg);

    RunConfig config = plan.algorithm.config;
    config.theta0 = spec.theta0;
    config.theta0.seed = plan.seed;
    config.record_stride = spec.record_stride;
    config.snapshot_iters = spec.snapshot_iters;
    config.lyapunov.L_hat = std::max(constants.L_hat, 1e-12);
    config.lyapunov.coefficient = plan.lyapunov_coefficient;
    config.lyapunov.rho = 0.0;  // filled from A0 by the engine

    const EngineResult result = run_d3gd(problem, A0, config);
    cell.diverged = result.diverged;

    write_records_csv_file((cell.dir / "metrics.csv").string(), result.records);
    for (const auto& [k, W] : result.snapshots) {
      write_matrix_csv_file((cell.dir / ("A_snapshot_" + std::to_string(k) + ".csv")).string(), W);
      write_dot_file((cell.dir / ("A_snapshot_" + std::to_string(k) + ".dot")).string(),
                     MixingMatrix(A0.graph_ptr(), W));
    }
    if (spec.export_dataset && plan.algorithm.name == spec.baseline)
      export_dataset((scenario_dir / "datasets" / std::to_string(plan.seed)).string(), dataset);

    const auto Y_traj = y_trajectory(A0, 300);
    const RateBoundConstants tc =
        rate_bound_constants(result.pi0, result.rho0, config.lyapunov.L_hat, Y_traj);

    json summary;
    summary["algorithm"] = plan.algorithm.name;
    summary["mode"] = to_string(plan.algorithm.config.mode);
    summary["seed"] = plan.seed;
    summary["n"] = n;
    summary["diverged"] = result.diverged;
    if (result.diverged) summary["diverged_at"] = result.diverged_at;
    summary["records"] = static_cast<int>(result.records.size());
    if (!result.records.empty()) summary["final"] = record_to_json(result.records.back());
    summary["constants"] = {{"L_hat", constants.L_hat},
                            {"G_hat", constants.G_hat},
                            {"varsigma_hat", constants.varsigma_hat},
                            {"num_thetas", constants.sample_count},
                            {"radius", constants.radius}};
    const double gamma0 = plan.algorithm.config.gamma.at(0);
    summary["rate_bound"] = {{"C_pi1", tc.C_pi1},
                          {"C_pi2", tc.C_pi2},
                          {"rho", tc.rho},
                          {"gamma_cap", tc.gamma_cap},
                          {"C0_hat", tc.C0_hat},
                          {"lambda_hat", tc.lambda_hat},
                          {"C_hat", tc.C_hat},
                          {"fit_r2", tc.fit_r2},
                          {"reliable", tc.reliable},
                          {"gamma_used", gamma0},
                          {"gamma_within_cap", gamma0 <= tc.gamma_cap}};
    std::ofstream out(cell.dir / "summary.json");
    out << summary.dump(2) << '\n';

    cell.ok = !result.diverged;
    if (result.diverged) cell.error = "diverged at iteration " + std::to_string(result.diverged_at);
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
    json failure;
    failure["algorithm"] = plan.algorithm.name;
    failure["seed"] = plan.seed;
    failure["error"] = cell.error;
    std::ofstream out(cell.dir / "summary.json");
    out << failure.dump(2) << '\n';
  }
  return cell;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  std::vector<ValidationError> errors;
  ParsedSpec parsed = parse_resolved(spec.resolved, errors);
  if (!errors.empty()) throw SpecError(std::move(errors));

  ExperimentResult result;
  result.scenario_dir = spec.output_dir / spec.scenario;
  fs::create_directories(result.scenario_dir);

  {
    json manifest;
    manifest["software_version"] = D3GD_VERSION;
    manifest["created_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count();
    manifest["spec"] = spec.resolved;
    std::ofstream out(result.scenario_dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest");
    out << manifest.dump(2) << '\n';
  }

  std::vector<CellPlan> plans;
  for (std::size_t a = 0; a < parsed.algorithms.size(); ++a)
    for (std::uint64_t seed : spec.seeds)
      plans.push_back({parsed.algorithms[a], parsed.lyapunov_coefficients[a], seed});

  result.cells.resize(plans.size());
  std::atomic<std::size_t> next{0};
  const int workers =
      std::max(1, std::min<int>(spec.workers, static_cast<int>(plans.size())));
  auto worker = [&] {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= plans.size()) break;
      result.cells[idx] = run_cell(spec, plans[idx], result.scenario_dir);
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  for (const auto& cell : result.cells)
    if (!cell.ok) result.any_failed = true;

  summarize_output_dir(result.scenario_dir);
  return result;
}

std::optional<double> summarize_speedup(std::span<const IterationRecord> baseline,
                                        std::span<const IterationRecord> candidate, double tau) {
  auto first_crossing = [tau](std::span<const IterationRecord> records) -> std::optional<int> {
    for (const auto& r : records)
      if (r.stationarity <= tau) return r.k;
    return std::nullopt;
  };
  const auto kb = first_crossing(baseline);
  const auto kc = first_crossing(candidate);
  if (!kb || !kc) return std::nullopt;
  if (*kc == 0) return *kb == 0 ? std::optional<double>(1.0) : std::nullopt;
  return static_cast<double>(*kb) / static_cast<double>(*kc);
}

json summarize_output_dir(const fs::path& scenario_dir) {
  std::ifstream manifest_in(scenario_dir / "manifest.json");
  if (!manifest_in) throw std::runtime_error("summarize: missing manifest.json");
  const json manifest = json::parse(manifest_in);
  const json& resolved = manifest.at("spec");

  std::vector<ValidationError> errors;
  ParsedSpec parsed = parse_resolved(resolved, errors);
  if (!errors.empty()) throw SpecError(std::move(errors));
  const ExperimentSpec& spec = parsed.spec;

  json per_seed = json::object();
  std::map<std::string, std::vector<double>> speedups;
  for (std::uint64_t seed : spec.seeds) {
    json seed_summary = json::object();
    const fs::path base_csv =
        scenario_dir / spec.baseline / std::to_string(seed) / "metrics.csv";
    if (!fs::exists(base_csv)) {
      seed_summary["error"] = "baseline metrics missing";
      per_seed[std::to_string(seed)] = std::move(seed_summary);
      continue;
    }
    const auto baseline_records = read_records_csv_file(base_csv.string());
    if (baseline_records.empty()) {
      seed_summary["error"] = "baseline metrics empty";
      per_seed[std::to_string(seed)] = std::move(seed_summary);
      continue;
    }
    double tau = spec.threshold.value;
    if (spec.threshold.rule == "baseline_fraction") {
      int baseline_T = 0;
      for (const auto& algo : parsed.algorithms)
        if (algo.name == spec.baseline) baseline_T = algo.config.T;
      const int target = static_cast<int>(spec.threshold.fraction * baseline_T);
      tau = baseline_records.back().stationarity;
      for (const auto& r : baseline_records)
        if (r.k <= target) tau = r.stationarity;
    }
    seed_summary["tau"] = tau;

    for (const auto& algo : parsed.algorithms) {
      json algo_summary = json::object();
      const fs::path csv = scenario_dir / algo.name / std::to_string(seed) / "metrics.csv";
      if (!fs::exists(csv)) {
        algo_summary["error"] = "metrics missing";
        seed_summary[algo.name] = std::move(algo_summary);
        continue;
      }
      const auto records = read_records_csv_file(csv.string());
      if (records.empty()) {
        algo_summary["error"] = "metrics empty";
        seed_summary[algo.name] = std::move(algo_summary);
        continue;
      }
      std::optional<int> crossing;
      for (const auto& r : records)
        if (r.stationarity <= tau) {
          crossing = r.k;
          break;
        }
      algo_summary["iterations_to_threshold"] = crossing ? json(*crossing) : json(nullptr);
      algo_summary["final_stationarity"] = records.back().stationarity;
      algo_summary["final_disagreement"] = records.back().disagreement;
      const auto ratio = summarize_speedup(baseline_records, records, tau);
      algo_summary["speedup_vs_baseline"] = ratio ? json(*ratio) : json(nullptr);
      algo_summary["speedup_defined"] = ratio.has_value();
      if (ratio) speedups[algo.name].push_back(*ratio);
      seed_summary[algo.name] = std::move(algo_summary);
    }
    per_seed[std::to_string(seed)] = std::move(seed_summary);
  }

  json aggregate = json::object();
  for (const auto& algo : parsed.algorithms) {
    json entry = json::object();
    auto it = speedups.find(algo.name);
    if (it != speedups.end() && !it->second.empty()) {
      std::vector<double> v = it->second;
      std::sort(v.begin(), v.end());
      const std::size_t m = v.size();
      const double median = (m % 2 == 1) ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
      entry["median_speedup"] = median;
      entry["defined_ratios"] = static_cast<int>(m);
    } else {
      entry["median_speedup"] = nullptr;
      entry["defined_ratios"] = 0;
    }
    entry["undefined_ratios"] =
        static_cast<int>(spec.seeds.size()) - entry["defined_ratios"].get<int>();
    aggregate[algo.name] = std::move(entry);
  }

  json summary;
  summary["scenario"] = spec.scenario;
  summary["baseline"] = spec.baseline;
  summary["threshold_rule"] = spec.threshold.rule;
  summary["per_seed"] = std::move(per_seed);
  summary["aggregate"] = std::move(aggregate);

  std::ofstream out(scenario_dir / "summary.json");
  if (!out) throw std::runtime_error("summarize: cannot write summary.json");
  out << summary.dump(2) << '\n';
  return summary;
}

}  // namespace d3gd
