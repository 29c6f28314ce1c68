#pragma once

#include "hvf/kernels.hpp"
#include "hvf/numerics.hpp"

#include <optional>
#include <stdexcept>
#include <string>

namespace hvf {

enum class Variant { plain, structured };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);

/// Input rejected by the interpolation engine (duplicate centers, a
/// structured data point at the origin, ...).
class InvalidDataError : public std::invalid_argument {
 public:
  InvalidDataError(const std::string& what, Index index)
      : std::invalid_argument(what), index_(index) {}
  Index index() const { return index_; }

 private:
  Index index_;
};

/// alpha_i and beta_i of s(x) = sum_i alpha_i k(x_i, x) + <beta_i, grad1 k(x_i, x)>.
struct HermiteCoefficients {
  Vec alphas;  // n
  Mat betas;   // N x n

  static HermiteCoefficients zero(Index dim, Index n);
  Index size() const { return alphas.size(); }
  /// [alpha_1 .. alpha_n, beta_1^T .. beta_n^T]
  Vec stacked() const;
  static HermiteCoefficients unstack(const Vec& stacked, Index dim);
};

struct FitInfo {
  double cg_residual = 0.0;
  int cg_iterations = 0;
  double nugget = 0.0;
};

/// Fitted value-function surrogate. Centers are stored column-wise (N x n).
class Surrogate {
 public:
  Surrogate(KernelSpec kernel, Mat centers, HermiteCoefficients coeffs, Variant variant,
            std::optional<Mat> Q = std::nullopt, FitInfo info = {});

  const KernelSpec& kernel_spec() const { return kernel_.spec(); }
  const Kernel& kernel() const { return kernel_; }
  const Mat& centers() const { return centers_; }
  const HermiteCoefficients& coefficients() const { return coeffs_; }
  Variant variant() const { return variant_; }
  const std::optional<Mat>& Q() const { return Q_; }
  const FitInfo& fit_info() const { return info_; }
  Index dim() const { return kernel_.dim(); }
  Index num_centers() const { return centers_.cols(); }

  /// Kernel expansion only (the correction term h - sqrt(x^T Q x) for the
  /// structured variant).
  double expansion(const Vec& x, Vec* grad = nullptr) const;

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  double value_and_gradient(const Vec& x, Vec& grad) const;

 private:
  Kernel kernel_;
  Mat centers_;
  HermiteCoefficients coeffs_;
  Variant variant_;
  std::optional<Mat> Q_;
  FitInfo info_;
};

double eval(const Surrogate& s, const Vec& x);
Vec eval_grad(const Surrogate& s, const Vec& x);

/// Matrix-free action of the symmetric interpolation matrix
///   [K  B ; B^T  C] [alpha; beta]
/// in O(N n^2) without materialising it.
Vec matvec_M(const Kernel& kernel, const Mat& centers, const Vec& stacked);

/// Diagonal of the interpolation matrix (for Jacobi scaling and the nugget).
Vec diagonal_M(const Kernel& kernel, const Mat& centers);

/// Right-hand side of the interpolation system for data v(x_j), grad v(x_j).
/// Structured: sqrt(v_j) - sqrt(x_j^T Q x_j) and
/// grad v_j / (2 sqrt(v_j)) - Q x_j / sqrt(x_j^T Q x_j).
Vec assemble_rhs(const Mat& centers, const Vec& values, const Mat& gradients, Variant variant,
                 const Mat* Q = nullptr);

struct FitOptions {
  double cg_tol = 1e-10;
  /// Relative nugget: M + nugget * diag(M).
  double nugget = 0.0;
  int max_iter = 0;
  bool jacobi = true;
};

struct FitResult {
  HermiteCoefficients coeffs;
  FitInfo info;
};

/// Solves the interpolation system by conjugate gradients. Throws
/// InvalidDataError on duplicate centers and ConvergenceError if CG stalls.
FitResult fit(const Kernel& kernel, const Mat& centers, const Vec& rhs,
              const FitOptions& options = {}, const Vec* warm_start = nullptr);

/// Convenience: rhs assembly + fit + Surrogate construction.
Surrogate fit_surrogate(const KernelSpec& spec, const Mat& centers, const Vec& values,
                        const Mat& gradients, Variant variant, const std::optional<Mat>& Q,
                        const FitOptions& options = {});

/// c^T M c, the squared native-space norm of a plain surrogate.
double native_norm_sq(const Surrogate& s);

/// Throws InvalidDataError naming the second index of the first duplicate.
void check_distinct(const Mat& centers, double tol = 0.0);

// Persistence (single JSON document, schema "hvf.surrogate/1").
void save_surrogate(const Surrogate& s, const std::string& path);
Surrogate load_surrogate(const std::string& path);
std::string surrogate_to_json(const Surrogate& s);
Surrogate surrogate_from_json(const std::string& text);

}  // namespace hvf
