#pragma once

#include "hvf/explore.hpp"
#include "hvf/hermite.hpp"
#include "hvf/models.hpp"
#include "hvf/openloop.hpp"
#include "hvf/vkoga.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hvf {

/// Runs fn(0), ..., fn(n-1) on up to `threads` worker threads.
void parallel_for(Index n, int threads, const std::function<void(Index)>& fn);

using GradientField = std::function<Vec(const Vec&)>;

struct ClosedLoopRun {
  IvpResult path;  // augmented state [x; accumulated cost]
  std::vector<double> times;
  Mat states;    // N x K
  Mat controls;  // M x K
  Vec cost;      // accumulated running cost at `times`
  bool unstable = false;
  std::string message;

  Vec state_at(double t) const;
  double total_cost() const { return cost.size() ? cost(cost.size() - 1) : 0.0; }
};

struct SimulationOptions {
  double horizon = 99.0;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  /// The run is flagged unstable once ||x|| exceeds this multiple of 1 + ||x0||.
  double blowup = 1e6;
};

/// Integrates x' = f(x) + g(x) u with u = optimal_control(x, grad(x)) and the
/// accumulated cost r + u^T R u.
ClosedLoopRun simulate_feedback(const ControlAffineModel& model, const GradientField& grad, const Vec& x0,
                                const SimulationOptions& options = {});
ClosedLoopRun simulate_feedback(const ControlAffineModel& model, const Surrogate& s, const Vec& x0,
                                const SimulationOptions& options = {});
/// Feedback of the quadratic value model x^T Q x.
ClosedLoopRun simulate_quadratic(const ControlAffineModel& model, const Mat& Q, const Vec& x0,
                                 const SimulationOptions& options = {});

/// sqrt(sum_i ||x_ref(t_i) - x(t_i)||^2 / sum_i ||x_ref(t_i)||^2) on the
/// reference grid; NaN for a zero reference.
double relative_l2(const Trajectory& reference, const ClosedLoopRun& run);

/// Mean of relative_l2 over the pairs, skipping zero references.
double mrl2_error(const std::vector<Trajectory>& reference, const std::vector<ClosedLoopRun>& runs);

/// Closed-loop runs from the initial states of `reference` under a feedback.
std::vector<ClosedLoopRun> run_test_set(const ControlAffineModel& model, const GradientField& grad,
                                        const std::vector<Trajectory>& reference,
                                        const SimulationOptions& options = {}, int threads = 1);

enum class CvMetric { mrl2, residual };
std::string to_string(CvMetric m);
CvMetric cv_metric_from_string(const std::string& name);

struct CvOptions {
  std::vector<double> gammas;
  Index folds = 10;
  CvMetric metric = CvMetric::mrl2;
  VkogaOptions vkoga;
  SimulationOptions simulation;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct CvReport {
  std::vector<double> gammas;
  /// scores[g][f]; NaN marks a failed cell.
  std::vector<std::vector<double>> scores;
  std::vector<double> mean;
  std::vector<char> valid;
  /// Trajectory indices per fold.
  std::vector<std::vector<Index>> folds;
  double selected_gamma = 0.0;
  std::string metric;
  std::string variant;
};

/// Balanced split of `count` trajectories into `folds` groups after a seeded
/// shuffle.
std::vector<std::vector<Index>> make_folds(Index count, Index folds, std::uint64_t seed);

/// Logarithmic grid of `count` kernel parameters gamma = c / diameter with
/// c from 1e-3 to 10.
std::vector<double> default_gamma_grid(const Dataset& data, Index count = 9);

/// s-fold cross-validation over whole trajectories. Throws std::runtime_error
/// if every gamma is disqualified.
CvReport cross_validate(const Dataset& data, const ControlAffineModel& model, Variant variant,
                        const std::optional<Mat>& Q, const CvOptions& options);

std::string cv_report_to_json(const CvReport& r);
CvReport cv_report_from_json(const std::string& text);

struct CurveRow {
  Index centers = 0;
  double mrl2_plain = 0.0;
  double mrl2_structured = 0.0;
  double mrl2_quadratic = 0.0;
};

/// MRL^2 of the checkpointed surrogates against the test set, with the
/// quadratic baseline on every row. Checkpoint lists may be empty (NaN column)
/// and are matched by center count.
std::vector<CurveRow> report_curves(const ControlAffineModel& model,
                                    const std::vector<std::pair<Index, Surrogate>>& plain,
                                    const std::vector<std::pair<Index, Surrogate>>& structured,
                                    const Mat& Q, const std::vector<Trajectory>& test,
                                    const SimulationOptions& options = {}, int threads = 1);

/// n_centers,mrl2_plain,mrl2_structured,mrl2_quadratic
std::string curves_csv(const std::vector<CurveRow>& rows);

}  // namespace hvf
