#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "d3gd/didgd.hpp"
#include "d3gd/engine.hpp"
#include "d3gd/graph.hpp"
#include "d3gd/harness.hpp"
#include "d3gd/metrics.hpp"
#include "d3gd/mixing.hpp"
#include "d3gd/problems.hpp"
#include "d3gd/weight_design.hpp"

namespace py = pybind11;
using namespace d3gd;

namespace {

py::dict record_to_dict(const IterationRecord& r) {
  py::dict d;
  d["k"] = r.k;
  d["stationarity"] = r.stationarity;
  d["disagreement"] = r.disagreement;
  d["weighted_consensus_error"] = r.weighted_consensus_error;
  d["lyapunov"] = r.lyapunov;
  d["j_value"] = r.j_value;
  d["grad_f_at_avg"] = r.grad_f_at_avg;
  d["y_deviation"] = r.y_deviation;
  if (r.spectral_gap_k) d["spectral_gap"] = *r.spectral_gap_k;
  return d;
}

StepSchedule schedule_from_object(const py::object& obj) {
  if (py::isinstance<py::float_>(obj) || py::isinstance<py::int_>(obj))
    return StepSchedule::constant(obj.cast<double>());
  return obj.cast<StepSchedule>();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "decentralized gradient descent over directed graphs with dynamic edge weights";

  py::class_<DirectedGraph>(m, "DirectedGraph")
      .def_static("from_edges", &DirectedGraph::from_edges, py::arg("n"), py::arg("edges"))
      .def_static("complete", &DirectedGraph::complete, py::arg("n"))
      .def_static("directed_ring",
                  py::overload_cast<const std::vector<int>&>(&DirectedGraph::directed_ring),
                  py::arg("order"))
      .def_static("directed_ring", py::overload_cast<int>(&DirectedGraph::directed_ring),
                  py::arg("n"))
      .def_static("symmetric_ring", &DirectedGraph::symmetric_ring, py::arg("n"))
      .def_property_readonly("n", &DirectedGraph::size)
      .def("has_edge", &DirectedGraph::has_edge)
      .def("in_neighbors", &DirectedGraph::in_neighbors, py::return_value_policy::copy)
      .def("edge_list", &DirectedGraph::edge_list);

  m.def("generate_er_digraph", &generate_er_digraph, py::arg("n"), py::arg("p"), py::arg("seed"),
        py::arg("max_retries") = 64);
  m.def("check_strong_connectivity", [](const DirectedGraph& g) {
    const auto report = check_strong_connectivity(g);
    py::dict d;
    d["strongly_connected"] = report.strongly_connected;
    d["reachable_from_root"] = report.reachable_from_root;
    d["reaching_root"] = report.reaching_root;
    return d;
  });
  m.def("read_edge_list_file", &read_edge_list_file, py::arg("path"));
  m.def("write_edge_list_file", &write_edge_list_file, py::arg("path"), py::arg("graph"));

  py::class_<MixingMatrix>(m, "MixingMatrix")
      .def(py::init<const DirectedGraph&, Eigen::MatrixXd>(), py::arg("graph"),
           py::arg("weights"))
      .def_property_readonly("weights",
                             [](const MixingMatrix& a) { return a.weights(); })
      .def_property_readonly("graph",
                             [](const MixingMatrix& a) { return a.graph(); })
      .def_property_readonly("n", &MixingMatrix::size);

  m.def("uniform_in_weights", &uniform_in_weights, py::arg("graph"));
  m.def("metropolis_weights", &metropolis_weights, py::arg("graph"));
  m.def(
      "perron_vector",
      [](const MixingMatrix& A, double tol, int max_iter) {
        double residual = 0.0;
        Eigen::VectorXd pi = perron_vector(A, tol, max_iter, nullptr, &residual);
        return py::make_tuple(pi, residual);
      },
      py::arg("A"), py::arg("tol") = 1e-12, py::arg("max_iter") = 0,
      "returns (pi, residual)");
  m.def("spectral_gap", &spectral_gap, py::arg("A"), py::arg("pi"), py::arg("half_window") = 64,
        py::arg("num_starts") = 6, py::arg("seed") = 0xd36d);
  m.def("write_matrix_csv_file", &write_matrix_csv_file, py::arg("path"), py::arg("matrix"));
  m.def("read_matrix_csv_file", &read_matrix_csv_file, py::arg("path"));
  m.def("write_dot_file", &write_dot_file, py::arg("path"), py::arg("A"));

  py::enum_<SignMode>(m, "SignMode")
      .value("verbatim", SignMode::verbatim)
      .value("corrected", SignMode::corrected);

  py::class_<SyntheticDataset>(m, "SyntheticDataset")
      .def_readonly("d", &SyntheticDataset::d)
      .def_readonly("K", &SyntheticDataset::K)
      .def_readonly("M", &SyntheticDataset::M)
      .def_readonly("alpha", &SyntheticDataset::alpha)
      .def_readonly("seed", &SyntheticDataset::seed)
      .def_readonly("class_means", &SyntheticDataset::class_means)
      .def_property_readonly("n", &SyntheticDataset::num_agents)
      .def("features", [](const SyntheticDataset& d, int agent) {
        return d.agents.at(static_cast<std::size_t>(agent)).features;
      })
      .def("labels", [](const SyntheticDataset& d, int agent) {
        return d.agents.at(static_cast<std::size_t>(agent)).labels;
      });

  m.def("dirichlet_partition",
        py::overload_cast<int, int, int, double, std::uint64_t>(&dirichlet_partition),
        py::arg("n"), py::arg("K"), py::arg("M"), py::arg("alpha"), py::arg("seed"));
  m.def("generate_features", &generate_features, py::arg("counts"), py::arg("d"), py::arg("seed"),
        py::arg("alpha_meta") = 0.0);
  m.def("make_synthetic_dataset",
        py::overload_cast<int, int, int, int, double, std::uint64_t>(&make_synthetic_dataset),
        py::arg("n"), py::arg("K"), py::arg("M"), py::arg("d"), py::arg("alpha"), py::arg("seed"));
  m.def("make_synthetic_dataset",
        py::overload_cast<const std::vector<double>&, int, int, int, std::uint64_t>(
            &make_synthetic_dataset),
        py::arg("alpha_per_agent"), py::arg("K"), py::arg("M"), py::arg("d"), py::arg("seed"));
  m.def("export_dataset", &export_dataset, py::arg("dir"), py::arg("dataset"));
  m.def("import_dataset", &import_dataset, py::arg("dir"));

  py::class_<Problem, std::shared_ptr<Problem>>(m, "Problem")
      .def_property_readonly("n", &Problem::num_agents)
      .def_property_readonly("dim", &Problem::dim)
      .def("local_value", &Problem::local_value)
      .def("local_gradient", &Problem::local_gradient)
      .def("average_value", &Problem::average_value)
      .def("average_gradient", &Problem::average_gradient);

  py::class_<SigmoidClassifierProblem, Problem, std::shared_ptr<SigmoidClassifierProblem>>(
      m, "SigmoidClassifierProblem")
      .def(py::init<SyntheticDataset, double, SignMode>(), py::arg("dataset"),
           py::arg("lambda") = 1e-4, py::arg("sign_mode") = SignMode::verbatim);

  py::class_<QuadraticProblem, Problem, std::shared_ptr<QuadraticProblem>>(m, "QuadraticProblem")
      .def_static("random", &QuadraticProblem::random, py::arg("n"), py::arg("d"), py::arg("seed"),
                  py::arg("condition") = 10.0, py::arg("center_spread") = 1.0)
      .def("minimizer", &QuadraticProblem::minimizer);

  py::class_<ProblemConstants>(m, "ProblemConstants")
      .def_readonly("L_hat", &ProblemConstants::L_hat)
      .def_readonly("G_hat", &ProblemConstants::G_hat)
      .def_readonly("varsigma_hat", &ProblemConstants::varsigma_hat);
  m.def(
      "estimate_constants",
      [](const Problem& p, int num_thetas, double radius, std::uint64_t seed) {
        return estimate_constants(p, ConstantsConfig{num_thetas, radius, seed});
      },
      py::arg("problem"), py::arg("num_thetas") = 32, py::arg("radius") = 1.0,
      py::arg("seed") = 0);

  py::class_<StepSchedule>(m, "StepSchedule")
      .def_static("constant", &StepSchedule::constant, py::arg("value"))
      .def_static("polynomial", &StepSchedule::polynomial, py::arg("base"), py::arg("exponent"))
      .def("at", &StepSchedule::at, py::arg("k"));

  py::enum_<ThetaInit>(m, "ThetaInit")
      .value("zeros", ThetaInit::zeros)
      .value("gaussian", ThetaInit::gaussian);

  py::class_<InitRule>(m, "InitRule")
      .def(py::init([](const std::string& kind, double scale, std::uint64_t seed) {
             InitRule rule;
             rule.kind = kind == "gaussian" ? ThetaInit::gaussian : ThetaInit::zeros;
             rule.scale = scale;
             rule.seed = seed;
             return rule;
           }),
           py::arg("kind") = "zeros", py::arg("scale") = 0.1, py::arg("seed") = 0);

  py::enum_<Mode>(m, "Mode")
      .value("didgd", Mode::didgd)
      .value("d3gd_central", Mode::d3gd_central)
      .value("d3gd_decentralized", Mode::d3gd_decentralized);

  py::enum_<CentralGradient>(m, "CentralGradient")
      .value("algorithm1_targets", CentralGradient::algorithm1_targets)
      .value("exact_chain_rule", CentralGradient::exact_chain_rule);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init([](Mode mode, int T, double delta, const py::object& gamma,
                       const py::object& eta, std::uint64_t seed, const std::string& theta0,
                       double theta0_scale, int record_stride, std::vector<int> snapshot_iters,
                       bool force_exact_trackers, CentralGradient central_gradient,
                       bool backtracking) {
             RunConfig c;
             c.mode = mode;
             c.T = T;
             c.delta = delta;
             c.gamma = schedule_from_object(gamma);
             c.eta = schedule_from_object(eta);
             c.theta0.kind = theta0 == "gaussian" ? ThetaInit::gaussian : ThetaInit::zeros;
             c.theta0.scale = theta0_scale;
             c.theta0.seed = seed;
             c.record_stride = record_stride;
             c.snapshot_iters = std::move(snapshot_iters);
             c.force_exact_trackers = force_exact_trackers;
             c.central_gradient = central_gradient;
             c.backtracking = backtracking;
             return c;
           }),
           py::arg("mode") = Mode::didgd, py::arg("T") = 1000, py::arg("delta") = 0.2,
           py::arg("gamma") = 0.1, py::arg("eta") = 1.0, py::arg("seed") = 0,
           py::arg("theta0") = "gaussian", py::arg("theta0_scale") = 0.1,
           py::arg("record_stride") = 1, py::arg("snapshot_iters") = std::vector<int>{},
           py::arg("force_exact_trackers") = false,
           py::arg("central_gradient") = CentralGradient::algorithm1_targets,
           py::arg("backtracking") = false)
      .def_readwrite("T", &RunConfig::T)
      .def_readwrite("delta", &RunConfig::delta)
      .def_readwrite("record_stride", &RunConfig::record_stride);

  m.def(
      "run_didgd",
      [](const Problem& problem, const MixingMatrix& A, const py::object& gamma, int T,
         const InitRule& init, int record_stride) {
        RecordingConfig rec;
        rec.stride = record_stride;
        const Trajectory traj = run_didgd(problem, A, schedule_from_object(gamma), T, rec, init);
        py::list records;
        for (const auto& r : traj.records) records.append(record_to_dict(r));
        py::dict out;
        out["records"] = records;
        out["theta"] = traj.final_state.Theta;
        out["pi"] = traj.pi;
        out["rho"] = traj.rho;
        out["diverged"] = traj.diverged;
        return out;
      },
      py::arg("problem"), py::arg("A"), py::arg("gamma"), py::arg("T"),
      py::arg("init") = InitRule{}, py::arg("record_stride") = 1);

  m.def(
      "run_d3gd",
      [](const Problem& problem, const MixingMatrix& A0, const RunConfig& config) {
        const EngineResult result = run_d3gd(problem, A0, config);
        py::list records;
        for (const auto& r : result.records) records.append(record_to_dict(r));
        py::dict snapshots;
        for (const auto& [k, W] : result.snapshots) snapshots[py::int_(k)] = W;
        py::dict out;
        out["records"] = records;
        out["theta"] = result.final_state.Theta;
        out["abar"] = result.final_state.Abar;
        out["snapshots"] = snapshots;
        out["pi0"] = result.pi0;
        out["rho0"] = result.rho0;
        out["diverged"] = result.diverged;
        return out;
      },
      py::arg("problem"), py::arg("A0"), py::arg("config"));

  m.def("project_row_simplex", &project_row_simplex, py::arg("v"), py::arg("support"));

  m.def(
      "design_value",
      [](const Eigen::MatrixXd& A, const Eigen::MatrixXd& Theta, const Eigen::MatrixXd& grads,
         const Eigen::VectorXd& ydiag, const Eigen::VectorXd& pi, double gamma, double delta,
         const MixingMatrix& A0) {
        const DesignContext ctx{Theta, grads, ydiag, pi, gamma, delta, A0};
        return design_value(A, ctx);
      },
      py::arg("A"), py::arg("Theta"), py::arg("grad_stack"), py::arg("ydiag"), py::arg("pi"),
      py::arg("gamma"), py::arg("delta"), py::arg("A0"));

  m.def("information_audit", [](Mode mode) {
    const AccessReport report = information_audit(mode);
    py::dict d;
    d["mode"] = to_string(report.mode);
    d["one_hop_only"] = report.one_hop_only;
    d["agent_inputs"] = report.agent_inputs;
    return d;
  });

  m.def(
      "summarize_speedup",
      [](const std::vector<std::pair<int, double>>& baseline,
         const std::vector<std::pair<int, double>>& candidate,
         double tau) -> std::optional<double> {
        auto to_records = [](const std::vector<std::pair<int, double>>& seq) {
          std::vector<IterationRecord> records;
          for (const auto& [k, s] : seq) {
            IterationRecord r;
            r.k = k;
            r.stationarity = s;
            records.push_back(r);
          }
          return records;
        };
        const auto b = to_records(baseline);
        const auto c = to_records(candidate);
        return summarize_speedup(b, c, tau);
      },
      py::arg("baseline"), py::arg("candidate"), py::arg("tau"),
      "baseline/candidate are (k, stationarity) sequences");

  m.def(
      "run_experiment_json",
      [](const std::string& spec_json) {
        const auto spec = resolve_spec(nlohmann::json::parse(spec_json));
        const ExperimentResult result = run_experiment(spec);
        py::dict out;
        out["scenario_dir"] = result.scenario_dir.string();
        out["any_failed"] = result.any_failed;
        return out;
      },
      py::arg("spec_json"), "run an experiment from a JSON spec string");

  m.attr("__version__") = "0.1.0";
}
