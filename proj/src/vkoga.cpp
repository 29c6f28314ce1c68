#include "hvf/vkoga.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace hvf {

double residual(const Surrogate& s, const Vec& x, double v, const Vec& grad_v) {
  Vec g;
  const double sv = s.value_and_gradient(x, g);
  return std::abs(v - sv) + (grad_v - g).norm();
}

std::vector<Index> usable_samples(const SampleSet& data, Variant variant) {
  std::vector<Index> keep;
  std::map<std::vector<double>, Index> seen;
  for (Index k = 0; k < data.size(); ++k) {
    const auto col = data.points.col(k);
    if (variant == Variant::structured && (col.squaredNorm() == 0.0 || !(data.values(k) > 0.0))) {
      continue;
    }
    std::vector<double> key(col.data(), col.data() + col.size());
    if (!seen.emplace(std::move(key), k).second) continue;
    keep.push_back(k);
  }
  return keep;
}

VkogaResult run_vkoga(const SampleSet& data, const KernelSpec& kernel_spec, Variant variant,
                      const std::optional<Mat>& Q, const VkogaOptions& options) {
  const Index dim = data.dim();
  if (data.size() == 0) throw std::invalid_argument("run_vkoga: empty dataset");
  if (kernel_spec.dim != dim) throw std::invalid_argument("run_vkoga: kernel dimension mismatch");
  if ((variant == Variant::structured) != kernel_spec.structured) {
    throw std::invalid_argument("run_vkoga: kernel structure flag does not match variant");
  }
  if (variant == Variant::structured && !Q) {
    throw std::invalid_argument("run_vkoga: structured variant requires Q");
  }

  const Kernel kernel(kernel_spec);
  const std::vector<Index> pool = usable_samples(data, variant);
  std::vector<char> selected(static_cast<std::size_t>(data.size()), 0);

  SelectionTrace trace;
  Surrogate current(kernel_spec, Mat(dim, 0), HermiteCoefficients::zero(dim, 0), variant, Q);
  std::vector<std::pair<Index, Surrogate>> checkpoints;
  std::vector<Index> pending = options.checkpoints;
  std::sort(pending.begin(), pending.end());
  auto take_checkpoint = [&](Index count) {
    if (std::binary_search(pending.begin(), pending.end(), count)) {
      checkpoints.emplace_back(count, current);
    }
  };
  take_checkpoint(0);

  Mat centers(dim, 0);
  Vec values(0);
  Mat gradients(dim, 0);
  Vec coeffs(0);

  while (true) {
    double best = -1.0;
    Index best_k = -1;
    Vec g;
    for (const Index k : pool) {
      if (selected[static_cast<std::size_t>(k)]) continue;
      const double sv = current.value_and_gradient(data.points.col(k), g);
      const double r = std::abs(data.values(k) - sv) + (data.gradients.col(k) - g).norm();
      if (!std::isfinite(r)) {
        throw VkogaError("run_vkoga: non-finite residual at sample " + std::to_string(k), trace);
      }
      if (r > best) {
        best = r;
        best_k = k;
      }
    }
    trace.final_residual = std::max(best, 0.0);
    if (best_k < 0) {
      trace.stop_reason = "exhausted";
      break;
    }
    if (!(best > options.eps_tol_f)) {
      trace.stop_reason = "tolerance";
      break;
    }
    if (centers.cols() >= options.max_centers) {
      trace.stop_reason = "budget";
      break;
    }

    selected[static_cast<std::size_t>(best_k)] = 1;
    const Index n = centers.cols();
    centers.conservativeResize(dim, n + 1);
    centers.col(n) = data.points.col(best_k);
    values.conservativeResize(n + 1);
    values(n) = data.values(best_k);
    gradients.conservativeResize(dim, n + 1);
    gradients.col(n) = data.gradients.col(best_k);
    trace.chosen.push_back(best_k);
    trace.residuals.push_back(best);

    // Warm start: previous coefficients with zeros for the new center.
    Vec start = Vec::Zero((n + 1) * (dim + 1));
    if (n > 0) {
      start.head(n) = coeffs.head(n);
      start.segment(n + 1, n * dim) = coeffs.tail(n * dim);
    }
    try {
      const Vec rhs = assemble_rhs(centers, values, gradients, variant, Q ? &*Q : nullptr);
      FitResult fr = fit(kernel, centers, rhs, options.fit, &start);
      coeffs = fr.coeffs.stacked();
      trace.cg_iterations.push_back(fr.info.cg_iterations);
      trace.cg_residuals.push_back(fr.info.cg_residual);
      current = Surrogate(kernel_spec, centers, std::move(fr.coeffs), variant, Q, fr.info);
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "run_vkoga: fit failed after selecting sample " << best_k << ": " << e.what();
      trace.stop_reason = "fit_failure";
      throw VkogaError(os.str(), trace);
    }
    take_checkpoint(centers.cols());
  }
  return {current, trace, std::move(checkpoints)};
}

std::string trace_csv(const SelectionTrace& trace) {
  std::ostringstream os;
  os.precision(17);
  os << "iteration,chosen_index,residual,cg_iterations\n";
  for (std::size_t i = 0; i < trace.chosen.size(); ++i) {
    os << i + 1 << ',' << trace.chosen[i] << ',' << trace.residuals[i] << ','
       << (i < trace.cg_iterations.size() ? trace.cg_iterations[i] : 0) << '\n';
  }
  return os.str();
}

}  // namespace hvf
