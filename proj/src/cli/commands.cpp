#include "hvf/cli.hpp"
#include "hvf/riccati.hpp"
#include "io/json_util.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace hvf {

namespace {

KernelSpec spec_for(Index dim, double gamma, Variant v) {
  return KernelSpec{"wendland_c4", dim, gamma, v == Variant::structured};
}

std::optional<Mat> q_for(Variant v, const Mat& Q) {
  return v == Variant::structured ? std::optional<Mat>(Q) : std::nullopt;
}

}  // namespace

Dataset cmd_explore(const ExperimentConfig& cfg) {
  const ModelPtr model = build_model(cfg.model);
  const Mat Q = model_quadratic(*model);
  const OpenLoopSolver solver(model, Q, cfg.openloop);
  return run_exploration(solver, build_candidates(cfg, *model), cfg.explore);
}

Dataset cmd_testset(const ExperimentConfig& cfg) {
  const ModelPtr model = build_model(cfg.model);
  const Mat Q = model_quadratic(*model);
  const OpenLoopSolver solver(model, Q, cfg.openloop);
  const CandidateSet cands = build_candidates(cfg, *model);
  const auto idx = geometric_greedy_testset(cands, cfg.test_size, Vec::Zero(model->state_dim()));

  Dataset d;
  d.meta.model = model->name();
  d.meta.selected = idx;
  d.trajectories.resize(idx.size());
  d.meta.guess_sources.resize(idx.size());
  parallel_for(static_cast<Index>(idx.size()), cfg.threads, [&](Index k) {
    const auto j = static_cast<std::size_t>(k);
    const OpenLoopResult r = solver.solve(cands.points.col(idx[j]));
    d.trajectories[j] = to_trajectory(r.solution, cfg.openloop.horizon, 0);
    d.meta.guess_sources[j] = r.guess_source;
  });
  for (const auto& t : d.trajectories) d.meta.max_hjb = std::max(d.meta.max_hjb, max_hjb_violation(*model, t));
  return d;
}

CvReport cmd_cv(const ExperimentConfig& cfg, const Dataset& data) {
  const ModelPtr model = build_model(cfg.model);
  CvOptions o;
  o.gammas = cfg.cv_grid.empty() ? default_gamma_grid(data, cfg.cv_grid_size) : cfg.cv_grid;
  o.folds = cfg.folds;
  o.metric = cfg.metric;
  o.vkoga = cfg.vkoga;
  o.vkoga.checkpoints.clear();
  o.simulation = cfg.simulation;
  o.seed = cfg.seed;
  o.threads = cfg.threads;
  std::optional<Mat> Q;
  if (cfg.variant == Variant::structured) Q = model_quadratic(*model);
  return cross_validate(data, *model, cfg.variant, Q, o);
}

VkogaResult cmd_fit(const ExperimentConfig& cfg, const Dataset& data) {
  const ModelPtr model = build_model(cfg.model);
  const Mat Q = model_quadratic(*model);
  return run_vkoga(data.flatten(true), spec_for(model->state_dim(), cfg.gamma, cfg.variant), cfg.variant,
                   q_for(cfg.variant, Q), cfg.vkoga);
}

EvaluationReport cmd_evaluate(const ExperimentConfig& cfg, const std::optional<Surrogate>& surrogate,
                              const Dataset& test) {
  const ModelPtr model = build_model(cfg.model);
  const Index n = model->state_dim();
  Mat Q;
  GradientField grad;
  EvaluationReport rep;
  if (surrogate) {
    if (surrogate->dim() != n) throw std::invalid_argument("evaluate: surrogate dimension does not match the model");
    const Surrogate& s = *surrogate;
    grad = [&s](const Vec& x) { return s.gradient(x); };
    rep.controller = to_string(s.variant());
  } else {
    Q = model_quadratic(*model);
    grad = [&Q](const Vec& x) { return quadratic_gradient(Q, x); };
    rep.controller = "quadratic";
  }
  for (const auto& t : test.trajectories) {
    if (t.states.rows() != n) throw std::invalid_argument("evaluate: test set dimension does not match the model");
  }
  const auto runs = run_test_set(*model, grad, test.trajectories, cfg.simulation, cfg.threads);
  rep.mrl2 = mrl2_error(test.trajectories, runs);
  for (std::size_t j = 0; j < runs.size(); ++j) {
    const Trajectory& t = test.trajectories[j];
    const ClosedLoopRun& r = runs[j];
    EvaluationRow row;
    row.trajectory = static_cast<Index>(j);
    row.x0 = t.initial_state();
    row.rel_l2 = relative_l2(t, r);
    row.cost = r.total_cost();
    row.reference_cost = t.values.size() ? t.values(0) : std::numeric_limits<double>::quiet_NaN();
    row.final_norm = r.states.cols() ? r.states.col(r.states.cols() - 1).norm() : 0.0;
    row.unstable = r.unstable;
    // HJB residual of the controller's value gradient along the reference.
    for (Index k = 0; k < t.size(); ++k) {
      const Vec x = t.states.col(k);
      const double h = std::abs(hjb_residual(*model, x, grad(x))) / (1.0 + model->running_cost(x));
      row.max_hjb = std::max(row.max_hjb, h);
    }
    rep.max_hjb = std::max(rep.max_hjb, row.max_hjb);
    rep.unstable += row.unstable ? 1 : 0;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

std::string evaluation_to_json(const EvaluationReport& r) {
  using io::json;
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"trajectory", row.trajectory},
                    {"x0", io::to_json(row.x0)},
                    {"rel_l2", num(row.rel_l2)},
                    {"cost", num(row.cost)},
                    {"reference_cost", num(row.reference_cost)},
                    {"final_norm", num(row.final_norm)},
                    {"max_hjb", num(row.max_hjb)},
                    {"unstable", row.unstable}});
  }
  json doc = {{"schema", "hvf.evaluation/1"},
              {"controller", r.controller},
              {"mrl2", num(r.mrl2)},
              {"max_hjb", num(r.max_hjb)},
              {"unstable", r.unstable},
              {"rows", rows}};
  return doc.dump(1);
}

std::string evaluation_csv(const EvaluationReport& r) {
  std::ostringstream os;
  os << std::setprecision(10) << "trajectory,rel_l2,cost,reference_cost,final_norm,max_hjb,unstable\n";
  for (const auto& row : r.rows) {
    os << row.trajectory << ',' << row.rel_l2 << ',' << row.cost << ',' << row.reference_cost << ','
       << row.final_norm << ',' << row.max_hjb << ',' << (row.unstable ? 1 : 0) << '\n';
  }
  return os.str();
}

std::vector<CurveRow> cmd_curves(const ExperimentConfig& cfg, const Dataset& data, const Dataset& test,
                                 double gamma_plain, double gamma_structured) {
  const ModelPtr model = build_model(cfg.model);
  const Mat Q = model_quadratic(*model);
  const SampleSet s = data.flatten(true);
  VkogaOptions vo = cfg.vkoga;
  if (vo.checkpoints.empty()) vo.checkpoints = {vo.max_centers};
  const Index n = model->state_dim();
  const auto plain = run_vkoga(s, spec_for(n, gamma_plain, Variant::plain), Variant::plain, std::nullopt, vo);
  const auto structured =
      run_vkoga(s, spec_for(n, gamma_structured, Variant::structured), Variant::structured, Q, vo);
  return report_curves(*model, plain.checkpoints, structured.checkpoints, Q, test.trajectories, cfg.simulation,
                       cfg.threads);
}

std::string closed_loop_csv(const ClosedLoopRun& run) {
  std::ostringstream os;
  os << std::setprecision(12) << 't';
  for (Index i = 0; i < run.states.rows(); ++i) os << ",x_" << i + 1;
  for (Index i = 0; i < run.controls.rows(); ++i) os << ",u_" << i + 1;
  os << ",cost\n";
  for (std::size_t k = 0; k < run.times.size(); ++k) {
    const auto c = static_cast<Index>(k);
    os << run.times[k];
    for (Index i = 0; i < run.states.rows(); ++i) os << ',' << run.states(i, c);
    for (Index i = 0; i < run.controls.rows(); ++i) os << ',' << run.controls(i, c);
    os << ',' << run.cost(c) << '\n';
  }
  return os.str();
}

std::string error_block(const std::string& command, const std::string& type, const std::string& message) {
  io::json doc = {{"error", {{"command", command}, {"type", type}, {"message", message}}}};
  return doc.dump();
}

}  // namespace hvf
