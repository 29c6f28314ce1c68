#pragma once

#include "hvf/evaluate.hpp"
#include "hvf/explore.hpp"
#include "hvf/hermite.hpp"
#include "hvf/models.hpp"
#include "hvf/openloop.hpp"
#include "hvf/vkoga.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hvf {

/// Raised for invalid experiment configurations.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ModelConfig {
  /// "amp", "nhe" or "linear".
  std::string name = "amp";
  AmpParameters amp;
  NheParameters nhe;
  Mat A, B, C, R;
};

struct CandidateConfig {
  /// "grid", "halton", "random" or "nhe_family".
  std::string kind = "grid";
  double lo = -1.0, hi = 1.0;
  Index per_dim = 101;
  Index count = 10000;
  Index amplitudes = 7;
  double amp_lo = -0.25, amp_hi = 0.5;
};

/// Default artifact locations, used when a command gets no explicit path.
struct PathsConfig {
  std::string dataset = "dataset.json";
  std::string testset = "testset.json";
  std::string cv = "cv.json";
  std::string surrogate = "surrogate.json";
  std::string report = "report.json";
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  int threads = 1;
  ModelConfig model;

  CandidateConfig candidates;
  ExploreOptions explore;
  OpenLoopConfig openloop;

  Variant variant = Variant::plain;
  double gamma = 0.5;
  std::vector<double> cv_grid;  // empty: default grid
  Index cv_grid_size = 9;

  VkogaOptions vkoga;

  Index test_size = 20;
  Index folds = 10;
  CvMetric metric = CvMetric::mrl2;
  SimulationOptions simulation;

  PathsConfig paths;
};

/// Parses and validates a configuration document; missing fields keep their
/// defaults.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);

ModelPtr build_model(const ModelConfig& cfg);
CandidateSet build_candidates(const ExperimentConfig& cfg, const ControlAffineModel& model);
/// Local quadratic model of the configured problem.
Mat model_quadratic(const ControlAffineModel& model);

Dataset cmd_explore(const ExperimentConfig& cfg);
/// Geometric-greedy test initial states solved at full time resolution.
Dataset cmd_testset(const ExperimentConfig& cfg);
CvReport cmd_cv(const ExperimentConfig& cfg, const Dataset& data);
VkogaResult cmd_fit(const ExperimentConfig& cfg, const Dataset& data);

struct EvaluationRow {
  Index trajectory = 0;
  Vec x0;
  double rel_l2 = 0.0;
  double cost = 0.0;
  double reference_cost = 0.0;
  double final_norm = 0.0;
  double max_hjb = 0.0;
  bool unstable = false;
};

struct EvaluationReport {
  std::string controller;  // "plain", "structured" or "quadratic"
  std::vector<EvaluationRow> rows;
  double mrl2 = 0.0;
  double max_hjb = 0.0;
  Index unstable = 0;
};

/// Closed-loop evaluation on a test set. Without a surrogate the quadratic
/// baseline is evaluated.
EvaluationReport cmd_evaluate(const ExperimentConfig& cfg, const std::optional<Surrogate>& surrogate,
                              const Dataset& test);
std::string evaluation_to_json(const EvaluationReport& r);
std::string evaluation_csv(const EvaluationReport& r);

/// MRL^2 against the number of centers for both surrogate variants.
std::vector<CurveRow> cmd_curves(const ExperimentConfig& cfg, const Dataset& data, const Dataset& test,
                                 double gamma_plain, double gamma_structured);

/// t,x_1..x_N,u_1..u_M,cost
std::string closed_loop_csv(const ClosedLoopRun& run);

/// {"error": {"command", "type", "message"}}
std::string error_block(const std::string& command, const std::string& type, const std::string& message);

}  // namespace hvf
