#include "hvf/cli.hpp"
#include "hvf/riccati.hpp"
#include "io/json_util.hpp"

#include <cmath>
#include <limits>

namespace hvf {

namespace {

constexpr const char* kSchema = "hvf.config/1";
using io::json;

template <class T>
void get(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key) || j[key].is_null()) return;
  try {
    out = j[key].get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

// Numbers, or the strings "inf"/"infinity" for unbounded tolerances.
void get_real(const json& j, const char* key, double& out, const std::string& where) {
  if (!j.contains(key) || j[key].is_null()) return;
  const auto& v = j[key];
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "infinity") {
      out = std::numeric_limits<double>::infinity();
      return;
    }
    throw ConfigError(where + "." + key + ": expected a number or \"inf\"");
  }
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  out = v.get<double>();
}

json real(double v) { return std::isinf(v) ? json("inf") : json(v); }

void positive(double v, const std::string& what) {
  if (!(v > 0.0)) throw ConfigError(what + " must be positive");
}

Mat matrix(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  try {
    return io::mat_from_json(j[key], where + "." + key);
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = io::parse_json(text, "config");
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  }
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  if (doc.contains("schema") && doc["schema"] != kSchema) {
    throw ConfigError("config: schema " + doc["schema"].dump() + " does not match expected \"" + std::string(kSchema) + "\"");
  }
  ExperimentConfig c;
  get(doc, "seed", c.seed, "config");
  get(doc, "threads", c.threads, "config");

  if (doc.contains("model")) {
    const auto& m = doc["model"];
    get(m, "name", c.model.name, "model");
    if (c.model.name == "amp") {
      get_real(m, "alpha", c.model.amp.alpha, "model");
      get_real(m, "beta", c.model.amp.beta, "model");
      get(m, "dim", c.model.amp.dim, "model");
    } else if (c.model.name == "nhe") {
      get(m, "grid_side", c.model.nhe.grid_side, "model");
      get_real(m, "alpha", c.model.nhe.alpha, "model");
      get_real(m, "beta", c.model.nhe.beta, "model");
      get_real(m, "control_penalty", c.model.nhe.control_penalty, "model");
      if (m.contains("control_region")) {
        std::vector<double> r;
        get(m, "control_region", r, "model");
        if (r.size() != 4) throw ConfigError("model.control_region: expected 4 numbers");
        std::copy(r.begin(), r.end(), c.model.nhe.control_region.begin());
      }
    } else if (c.model.name == "linear") {
      c.model.A = matrix(m, "A", "model");
      c.model.B = matrix(m, "B", "model");
      c.model.C = matrix(m, "C", "model");
      c.model.R = matrix(m, "R", "model");
    } else {
      throw ConfigError("model.name: unknown model '" + c.model.name + "'");
    }
  }

  if (doc.contains("exploration")) {
    const auto& e = doc["exploration"];
    if (e.contains("candidates")) {
      const auto& k = e["candidates"];
      auto& cc = c.candidates;
      get(k, "kind", cc.kind, "exploration.candidates");
      get_real(k, "lo", cc.lo, "exploration.candidates");
      get_real(k, "hi", cc.hi, "exploration.candidates");
      get(k, "per_dim", cc.per_dim, "exploration.candidates");
      get(k, "count", cc.count, "exploration.candidates");
      get(k, "amplitudes", cc.amplitudes, "exploration.candidates");
      get_real(k, "amp_lo", cc.amp_lo, "exploration.candidates");
      get_real(k, "amp_hi", cc.amp_hi, "exploration.candidates");
    }
    get_real(e, "eps_tol_d", c.explore.eps_tol_d, "exploration");
    get(e, "max_traj", c.explore.max_traj, "exploration");
    get(e, "max_samples", c.explore.max_samples, "exploration");
    get_real(e, "min_spacing", c.explore.min_spacing, "exploration");
    get_real(e, "hjb_tol", c.explore.hjb_tol, "exploration");
    get_real(e, "horizon", c.openloop.horizon, "exploration");
    get_real(e, "delta_tau", c.openloop.delta_tau, "exploration");
    get(e, "mesh_nodes", c.openloop.mesh_nodes, "exploration");
    get_real(e, "newton_tol", c.openloop.bvp.newton_tol, "exploration");
    get(e, "max_newton", c.openloop.bvp.max_newton, "exploration");
    get_real(e, "collocation_tol", c.openloop.bvp.collocation_tol, "exploration");
    get(e, "max_nodes", c.openloop.bvp.max_nodes, "exploration");
    get_real(e, "warm_radius", c.openloop.warm_radius, "exploration");
    get(e, "continuation_steps", c.openloop.continuation_steps, "exploration");
  }

  if (doc.contains("kernel")) {
    const auto& k = doc["kernel"];
    std::string v = to_string(c.variant);
    get(k, "variant", v, "kernel");
    try {
      c.variant = variant_from_string(v);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("kernel.variant: ") + e.what());
    }
    get_real(k, "gamma", c.gamma, "kernel");
    get(k, "cv_grid", c.cv_grid, "kernel");
    get(k, "cv_grid_size", c.cv_grid_size, "kernel");
  }

  if (doc.contains("vkoga")) {
    const auto& v = doc["vkoga"];
    get_real(v, "eps_tol_f", c.vkoga.eps_tol_f, "vkoga");
    get(v, "max_centers", c.vkoga.max_centers, "vkoga");
    get_real(v, "cg_tol", c.vkoga.fit.cg_tol, "vkoga");
    get_real(v, "nugget", c.vkoga.fit.nugget, "vkoga");
    get(v, "checkpoints", c.vkoga.checkpoints, "vkoga");
  }

  if (doc.contains("evaluation")) {
    const auto& v = doc["evaluation"];
    get(v, "test_size", c.test_size, "evaluation");
    get(v, "s_folds", c.folds, "evaluation");
    std::string metric = to_string(c.metric);
    get(v, "metric", metric, "evaluation");
    try {
      c.metric = cv_metric_from_string(metric);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("evaluation.metric: ") + e.what());
    }
    get_real(v, "rel_tol", c.simulation.rel_tol, "evaluation");
    get_real(v, "abs_tol", c.simulation.abs_tol, "evaluation");
  }
  c.simulation.horizon = c.openloop.horizon;

  if (doc.contains("paths")) {
    const auto& p = doc["paths"];
    get(p, "dataset", c.paths.dataset, "paths");
    get(p, "testset", c.paths.testset, "paths");
    get(p, "cv", c.paths.cv, "paths");
    get(p, "surrogate", c.paths.surrogate, "paths");
    get(p, "report", c.paths.report, "paths");
  }

  positive(c.explore.eps_tol_d, "exploration.eps_tol_d");
  positive(c.explore.hjb_tol, "exploration.hjb_tol");
  positive(c.openloop.horizon, "exploration.horizon");
  positive(c.openloop.bvp.newton_tol, "exploration.newton_tol");
  positive(c.openloop.bvp.collocation_tol, "exploration.collocation_tol");
  positive(c.vkoga.fit.cg_tol, "vkoga.cg_tol");
  positive(c.gamma, "kernel.gamma");
  positive(c.simulation.rel_tol, "evaluation.rel_tol");
  positive(c.simulation.abs_tol, "evaluation.abs_tol");
  if (!(c.openloop.delta_tau > 0.0 && c.openloop.delta_tau < 1.0)) {
    throw ConfigError("exploration.delta_tau must lie in (0, 1)");
  }
  if (c.vkoga.eps_tol_f < 0.0) throw ConfigError("vkoga.eps_tol_f must be nonnegative");
  if (c.vkoga.fit.nugget < 0.0) throw ConfigError("vkoga.nugget must be nonnegative");
  if (c.explore.max_traj < 0 || c.vkoga.max_centers < 0) throw ConfigError("budgets must be nonnegative");
  if (c.openloop.mesh_nodes < 4) throw ConfigError("exploration.mesh_nodes must be at least 4");
  if (c.folds < 1) throw ConfigError("evaluation.s_folds must be at least 1");
  for (const double g : c.cv_grid) positive(g, "kernel.cv_grid entries");
  if (c.threads < 1) throw ConfigError("threads must be at least 1");
  return c;
}

ExperimentConfig load_config(const std::string& path) { return parse_config(io::read_file(path)); }

std::string config_to_json(const ExperimentConfig& c) {
  json doc;
  doc["schema"] = kSchema;
  doc["seed"] = c.seed;
  doc["threads"] = c.threads;
  json m = {{"name", c.model.name}};
  if (c.model.name == "amp") {
    m["alpha"] = c.model.amp.alpha;
    m["beta"] = c.model.amp.beta;
    m["dim"] = c.model.amp.dim;
  } else if (c.model.name == "nhe") {
    m["grid_side"] = c.model.nhe.grid_side;
    m["alpha"] = c.model.nhe.alpha;
    m["beta"] = c.model.nhe.beta;
    m["control_penalty"] = c.model.nhe.control_penalty;
    m["control_region"] = c.model.nhe.control_region;
  } else {
    m["A"] = io::to_json(c.model.A);
    m["B"] = io::to_json(c.model.B);
    m["C"] = io::to_json(c.model.C);
    m["R"] = io::to_json(c.model.R);
  }
  doc["model"] = m;
  const auto& cc = c.candidates;
  doc["exploration"] = {
      {"candidates",
       {{"kind", cc.kind}, {"lo", cc.lo}, {"hi", cc.hi}, {"per_dim", cc.per_dim}, {"count", cc.count},
        {"amplitudes", cc.amplitudes}, {"amp_lo", cc.amp_lo}, {"amp_hi", cc.amp_hi}}},
      {"eps_tol_d", c.explore.eps_tol_d},
      {"max_traj", c.explore.max_traj},
      {"max_samples", c.explore.max_samples},
      {"min_spacing", c.explore.min_spacing},
      {"hjb_tol", c.explore.hjb_tol},
      {"horizon", c.openloop.horizon},
      {"delta_tau", c.openloop.delta_tau},
      {"mesh_nodes", c.openloop.mesh_nodes},
      {"newton_tol", c.openloop.bvp.newton_tol},
      {"max_newton", c.openloop.bvp.max_newton},
      {"collocation_tol", c.openloop.bvp.collocation_tol},
      {"max_nodes", c.openloop.bvp.max_nodes},
      {"warm_radius", c.openloop.warm_radius},
      {"continuation_steps", c.openloop.continuation_steps}};
  doc["kernel"] = {{"variant", to_string(c.variant)},
                   {"gamma", c.gamma},
                   {"cv_grid", c.cv_grid},
                   {"cv_grid_size", c.cv_grid_size}};
  doc["vkoga"] = {{"eps_tol_f", real(c.vkoga.eps_tol_f)},
                  {"max_centers", c.vkoga.max_centers},
                  {"cg_tol", c.vkoga.fit.cg_tol},
                  {"nugget", c.vkoga.fit.nugget},
                  {"checkpoints", c.vkoga.checkpoints}};
  doc["evaluation"] = {{"test_size", c.test_size},
                       {"s_folds", c.folds},
                       {"metric", to_string(c.metric)},
                       {"rel_tol", c.simulation.rel_tol},
                       {"abs_tol", c.simulation.abs_tol}};
  doc["paths"] = {{"dataset", c.paths.dataset},
                  {"testset", c.paths.testset},
                  {"cv", c.paths.cv},
                  {"surrogate", c.paths.surrogate},
                  {"report", c.paths.report}};
  return doc.dump(2);
}

ModelPtr build_model(const ModelConfig& cfg) {
  if (cfg.name == "amp") return std::make_shared<AmpModel>(cfg.amp);
  if (cfg.name == "nhe") return nhe_assemble(cfg.nhe);
  if (cfg.name == "linear") return std::make_shared<LinearQuadraticModel>(cfg.A, cfg.B, cfg.C, cfg.R);
  throw ConfigError("unknown model '" + cfg.name + "'");
}

CandidateSet build_candidates(const ExperimentConfig& cfg, const ControlAffineModel& model) {
  const auto& c = cfg.candidates;
  const Index n = model.state_dim();
  if (c.kind == "grid") return box_grid(n, c.lo, c.hi, c.per_dim);
  if (c.kind == "halton") return box_halton(n, c.lo, c.hi, c.count);
  if (c.kind == "random") return box_random(n, c.lo, c.hi, c.count, cfg.seed);
  if (c.kind == "nhe_family") {
    const auto* nhe = dynamic_cast<const NheModel*>(&model);
    if (!nhe) throw ConfigError("candidates kind nhe_family requires the nhe model");
    return nhe_family(*nhe, c.amplitudes, c.amp_lo, c.amp_hi);
  }
  throw ConfigError("exploration.candidates.kind: unknown generator '" + c.kind + "'");
}

Mat model_quadratic(const ControlAffineModel& model) { return local_quadratic(model); }

}  // namespace hvf
