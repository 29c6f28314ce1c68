#pragma once

#include "hvf/hermite.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hvf {

/// Flattened training data: states column-wise with values and gradients.
struct SampleSet {
  Mat points;     // N x P
  Vec values;     // P
  Mat gradients;  // N x P

  Index size() const { return points.cols(); }
  Index dim() const { return points.rows(); }
};

struct SelectionTrace {
  std::vector<Index> chosen;
  /// Max residual over the unselected data at the time of each selection,
  /// which equals the residual of the chosen point.
  std::vector<double> residuals;
  std::vector<int> cg_iterations;
  std::vector<double> cg_residuals;
  /// "tolerance", "budget" or "exhausted".
  std::string stop_reason;
  /// Max residual over the unselected data when the loop ended.
  double final_residual = 0.0;
};

struct VkogaOptions {
  double eps_tol_f = 0.0;
  Index max_centers = 200;
  FitOptions fit;
  /// Center counts at which a copy of the surrogate is kept.
  std::vector<Index> checkpoints;
};

struct VkogaResult {
  Surrogate surrogate;
  SelectionTrace trace;
  std::vector<std::pair<Index, Surrogate>> checkpoints;
};

class VkogaError : public std::runtime_error {
 public:
  VkogaError(const std::string& what, SelectionTrace trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const SelectionTrace& trace() const { return trace_; }

 private:
  SelectionTrace trace_;
};

/// |v(x) - s(x)| + ||grad v(x) - grad s(x)||_2
double residual(const Surrogate& s, const Vec& x, double v, const Vec& grad_v);

/// Indices of the samples usable for a variant: exact duplicates are dropped
/// and, for the structured variant, the origin and points with v <= 0.
std::vector<Index> usable_samples(const SampleSet& data, Variant variant);

/// Hermite VKOGA: repeatedly add the sample with the largest combined
/// value/gradient residual as a center and refit (CG, warm started), until the
/// largest residual is <= eps_tol_f or max_centers is reached. Ties go to the
/// lowest sample index.
VkogaResult run_vkoga(const SampleSet& data, const KernelSpec& kernel, Variant variant,
                      const std::optional<Mat>& Q, const VkogaOptions& options);

/// CSV with header iteration,chosen_index,residual,cg_iterations.
std::string trace_csv(const SelectionTrace& trace);

}  // namespace hvf
