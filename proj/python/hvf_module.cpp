#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hvf/cli.hpp"
#include "hvf/riccati.hpp"

namespace py = pybind11;
using namespace hvf;

namespace {

Variant variant_of(const std::string& name) {
  if (name == "plain") return Variant::plain;
  if (name == "structured") return Variant::structured;
  throw std::invalid_argument("variant must be 'plain' or 'structured'");
}

py::dict trace_dict(const SelectionTrace& t) {
  py::dict d;
  d["chosen"] = t.chosen;
  d["residuals"] = t.residuals;
  d["cg_iterations"] = t.cg_iterations;
  d["stop_reason"] = t.stop_reason;
  d["final_residual"] = t.final_residual;
  return d;
}

py::dict run_dict(const ClosedLoopRun& r) {
  py::dict d;
  d["times"] = r.times;
  d["states"] = r.states;
  d["controls"] = r.controls;
  d["cost"] = r.cost;
  d["unstable"] = r.unstable;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hermite kernel surrogates of optimal value functions";

  py::register_exception<NumericsError>(m, "NumericsError", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<VkogaError>(m, "VkogaError", PyExc_RuntimeError);
  py::register_exception<ExplorationError>(m, "ExplorationError", PyExc_RuntimeError);

  // models
  py::class_<ControlAffineModel, std::shared_ptr<ControlAffineModel>>(m, "Model")
      .def_property_readonly("name", &ControlAffineModel::name)
      .def_property_readonly("state_dim", &ControlAffineModel::state_dim)
      .def_property_readonly("control_dim", &ControlAffineModel::control_dim)
      .def("drift", &ControlAffineModel::drift)
      .def("running_cost", &ControlAffineModel::running_cost)
      .def("optimal_control", [](const ControlAffineModel& md, const Vec& x, const Vec& p) {
        return optimal_control(md, x, p);
      })
      .def("hjb_residual", [](const ControlAffineModel& md, const Vec& x, const Vec& p) {
        return hjb_residual(md, x, p);
      })
      .def("local_quadratic", [](const ControlAffineModel& md) { return local_quadratic(md); });

  py::class_<AmpModel, ControlAffineModel, std::shared_ptr<AmpModel>>(m, "AmpModel")
      .def(py::init([](double alpha, double beta, Index dim) {
             return std::make_shared<AmpModel>(AmpParameters{alpha, beta, dim});
           }),
           py::arg("alpha") = 1e5, py::arg("beta") = 1.0, py::arg("dim") = 2)
      .def("true_value", [](const AmpModel& a, const Vec& x) { return amp_true_value(a.parameters(), x); })
      .def("true_gradient", [](const AmpModel& a, const Vec& x) { return amp_true_gradient(a.parameters(), x); });

  py::class_<LinearQuadraticModel, ControlAffineModel, std::shared_ptr<LinearQuadraticModel>>(m, "LinearModel")
      .def(py::init<Mat, Mat, Mat, Mat>(), py::arg("A"), py::arg("B"), py::arg("C"), py::arg("R"));

  py::class_<NheModel, ControlAffineModel, std::shared_ptr<NheModel>>(m, "NheModel");
  m.def("nhe_model", [](Index grid_side) {
    NheParameters p;
    p.grid_side = grid_side;
    return nhe_assemble(p);
  }, py::arg("grid_side") = 10);

  // open loop
  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("times", &Trajectory::times)
      .def_readonly("states", &Trajectory::states)
      .def_readonly("costates", &Trajectory::costates)
      .def_readonly("values", &Trajectory::values)
      .def("__len__", &Trajectory::size);

  m.def("solve_open_loop",
        [](std::shared_ptr<ControlAffineModel> md, const Vec& x0, double delta_tau, Index mesh_nodes,
           double horizon) {
          OpenLoopConfig c;
          c.delta_tau = delta_tau;
          c.mesh_nodes = mesh_nodes;
          c.horizon = horizon;
          const OpenLoopSolver s(md, local_quadratic(*md), c);
          return to_trajectory(s.solve(x0).solution, horizon, 0);
        },
        py::arg("model"), py::arg("x0"), py::arg("delta_tau") = 1e-3, py::arg("mesh_nodes") = 200,
        py::arg("horizon") = 99.0);

  // exploration
  py::class_<Dataset>(m, "Dataset")
      .def_readonly("trajectories", &Dataset::trajectories)
      .def_property_readonly("samples", &Dataset::samples)
      .def_property_readonly("eps_achieved", [](const Dataset& d) { return d.meta.eps_achieved; })
      .def_property_readonly("eps_history", [](const Dataset& d) { return d.meta.eps_history; })
      .def_property_readonly("max_hjb", [](const Dataset& d) { return d.meta.max_hjb; })
      .def("flatten", [](const Dataset& d, bool with_origin) {
        const SampleSet s = d.flatten(with_origin);
        return py::make_tuple(s.points, s.values, s.gradients);
      }, py::arg("with_origin") = true)
      .def("to_json", &dataset_to_json);

  m.def("explore",
        [](std::shared_ptr<ControlAffineModel> md, const Mat& candidates, double eps_tol_d, Index max_traj,
           Index max_samples, double delta_tau, double horizon) {
          OpenLoopConfig c;
          c.delta_tau = delta_tau;
          c.horizon = horizon;
          const OpenLoopSolver s(md, local_quadratic(*md), c);
          ExploreOptions o;
          o.eps_tol_d = eps_tol_d;
          o.max_traj = max_traj;
          o.max_samples = max_samples;
          return run_exploration(s, CandidateSet{candidates, "python"}, o);
        },
        py::arg("model"), py::arg("candidates"), py::arg("eps_tol_d") = 1e-3, py::arg("max_traj") = 10,
        py::arg("max_samples") = 60, py::arg("delta_tau") = 1e-3, py::arg("horizon") = 99.0);
  m.def("box_grid", [](Index dim, double lo, double hi, Index per_dim) { return box_grid(dim, lo, hi, per_dim).points; });
  m.def("geometric_greedy", [](const Mat& candidates, Index count, const Vec& seed) {
    return geometric_greedy_testset(CandidateSet{candidates, "python"}, count, seed);
  });
  m.def("load_dataset", &load_dataset);
  m.def("save_dataset", &save_dataset);
  m.def("dataset_from_json", &dataset_from_json);

  // surrogates
  py::class_<Surrogate>(m, "Surrogate")
      .def("value", &Surrogate::value)
      .def("gradient", &Surrogate::gradient)
      .def_property_readonly("num_centers", &Surrogate::num_centers)
      .def_property_readonly("centers", &Surrogate::centers)
      .def_property_readonly("gamma", [](const Surrogate& s) { return s.kernel_spec().gamma; })
      .def_property_readonly("variant", [](const Surrogate& s) { return to_string(s.variant()); })
      .def("to_json", &surrogate_to_json);
  m.def("load_surrogate", &load_surrogate);
  m.def("save_surrogate", &save_surrogate);
  m.def("surrogate_from_json", &surrogate_from_json);

  m.def("fit_vkoga",
        [](const Mat& points, const Vec& values, const Mat& gradients, double gamma, const std::string& variant,
           std::optional<Mat> Q, Index max_centers, double eps_tol_f, double cg_tol) {
          const Variant v = variant_of(variant);
          VkogaOptions o;
          o.max_centers = max_centers;
          o.eps_tol_f = eps_tol_f;
          o.fit.cg_tol = cg_tol;
          const KernelSpec spec{"wendland_c4", points.rows(), gamma, v == Variant::structured};
          const VkogaResult r = run_vkoga(SampleSet{points, values, gradients}, spec, v, Q, o);
          return py::make_tuple(r.surrogate, trace_dict(r.trace));
        },
        py::arg("points"), py::arg("values"), py::arg("gradients"), py::arg("gamma"),
        py::arg("variant") = "plain", py::arg("Q") = py::none(), py::arg("max_centers") = 100,
        py::arg("eps_tol_f") = 0.0, py::arg("cg_tol") = 1e-10);

  // evaluation
  m.def("simulate",
        [](std::shared_ptr<ControlAffineModel> md, const Surrogate& s, const Vec& x0, double horizon) {
          SimulationOptions o;
          o.horizon = horizon;
          return run_dict(simulate_feedback(*md, s, x0, o));
        },
        py::arg("model"), py::arg("surrogate"), py::arg("x0"), py::arg("horizon") = 99.0);
  m.def("simulate_quadratic",
        [](std::shared_ptr<ControlAffineModel> md, const Mat& Q, const Vec& x0, double horizon) {
          SimulationOptions o;
          o.horizon = horizon;
          return run_dict(simulate_quadratic(*md, Q, x0, o));
        },
        py::arg("model"), py::arg("Q"), py::arg("x0"), py::arg("horizon") = 99.0);
  m.def("mrl2",
        [](std::shared_ptr<ControlAffineModel> md, const Surrogate& s, const std::vector<Trajectory>& test,
           double horizon) {
          SimulationOptions o;
          o.horizon = horizon;
          return mrl2_error(test, run_test_set(*md, [&s](const Vec& x) { return s.gradient(x); }, test, o));
        },
        py::arg("model"), py::arg("surrogate"), py::arg("test"), py::arg("horizon") = 99.0);

  // configuration-driven commands
  py::class_<ExperimentConfig>(m, "Config")
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("threads", &ExperimentConfig::threads)
      .def_readwrite("gamma", &ExperimentConfig::gamma)
      .def("to_json", &config_to_json);
  m.def("load_config", &load_config);
  m.def("parse_config", &parse_config);
  m.def("cmd_explore", &cmd_explore);
  m.def("cmd_testset", &cmd_testset);
  m.def("cmd_fit", [](const ExperimentConfig& c, const Dataset& d) {
    const VkogaResult r = cmd_fit(c, d);
    return py::make_tuple(r.surrogate, trace_dict(r.trace));
  });
  m.def("cmd_evaluate", [](const ExperimentConfig& c, std::optional<Surrogate> s, const Dataset& test) {
    return evaluation_to_json(cmd_evaluate(c, s, test));
  }, py::arg("config"), py::arg("surrogate"), py::arg("test"));
}
