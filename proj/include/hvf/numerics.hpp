#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hvf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

class NumericsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed, incompatible or unreadable artifact file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by dense_solve when a pivot falls below the singularity threshold.
class SingularMatrixError : public NumericsError {
 public:
  SingularMatrixError(Index pivot, double value);
  Index pivot() const { return pivot_; }
  double value() const { return value_; }

 private:
  Index pivot_;
  double value_;
};

/// Raised by cg_solve when max_iter is exhausted before the tolerance is met.
class ConvergenceError : public NumericsError {
 public:
  ConvergenceError(const std::string& what, int iterations, double residual);
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

// ---------------------------------------------------------------------------
// Linear operators and conjugate gradients

struct LinearOperator {
  Index dim = 0;
  /// out = A * in. `out` is pre-sized to dim.
  std::function<void(const Vec& in, Vec& out)> apply;
  bool symmetric = true;
};

struct CgOptions {
  double tol = 1e-10;
  /// 0 means 50 * dim.
  int max_iter = 0;
  /// Optional Jacobi scaling: the diagonal of the operator.
  std::optional<Vec> diagonal;
};

struct CgResult {
  Vec x;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Solves op(x) = rhs for a symmetric positive definite operator.
/// Terminates on ||op(x) - rhs||_2 <= tol * ||rhs||_2 (true residual, checked
/// on exit). `initial` is an optional warm start.
CgResult cg_solve(const LinearOperator& op, const Vec& rhs,
                  const CgOptions& options = {},
                  const Vec* initial = nullptr);

// ---------------------------------------------------------------------------
// Direct solvers

/// Partial-pivot LU. Throws SingularMatrixError if a pivot is below
/// pivot_tol * max|A|.
Vec dense_solve(Mat a, const Vec& b, double pivot_tol = 1e-14);

/// Square banded system with kl sub- and ku super-diagonals, stored densely by
/// band for LAPACK's gbsv.
class BandedMatrix {
 public:
  BandedMatrix(Index n, Index kl, Index ku);

  Index size() const { return n_; }
  Index lower() const { return kl_; }
  Index upper() const { return ku_; }

  /// Entry (i, j); must lie inside the band.
  double& operator()(Index i, Index j);
  double operator()(Index i, Index j) const;
  bool in_band(Index i, Index j) const { return j - i <= ku_ && i - j <= kl_; }

  void set_zero();
  Vec multiply(const Vec& x) const;

  /// Solves in place (the matrix is overwritten by its factors). Throws
  /// SingularMatrixError on an exactly singular U.
  Vec solve(Vec rhs);

 private:
  Index n_, kl_, ku_, ldab_;
  std::vector<double> ab_;
};

// ---------------------------------------------------------------------------
// Adaptive explicit Runge-Kutta integration (Dormand-Prince 5(4))

using OdeRhs = std::function<Vec(double t, const Vec& x)>;

struct IvpOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double first_step = 0.0;  // 0: automatic
  double max_step = 0.0;    // 0: unbounded
  long max_steps = 5'000'000;
  /// Keep every accepted step for dense output; otherwise only the last one.
  bool dense = true;
  /// Stops integration early (successfully) once it returns true for an
  /// accepted state.
  std::function<bool(double t, const Vec& x)> stop;
};

/// Accepted steps of an integration with C1 cubic Hermite dense output.
class IvpResult {
 public:
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> derivatives;
  bool stopped_early = false;

  double t_begin() const { return times.front(); }
  double t_end() const { return times.back(); }
  /// Dense output; clamps to the covered interval.
  Vec at(double t) const;
  std::size_t steps() const { return times.size() - 1; }
};

class IvpError : public NumericsError {
 public:
  IvpError(const std::string& what, IvpResult partial);
  const IvpResult& partial() const { return partial_; }

 private:
  IvpResult partial_;
};

/// Integrates x' = rhs(t, x) over [t0, t1]. Throws IvpError (carrying the
/// accepted steps so far) on step-size underflow, step budget exhaustion or a
/// non-finite right-hand side.
IvpResult integrate_ivp(const OdeRhs& rhs, const Vec& x0, double t0, double t1,
                        const IvpOptions& options = {});

// ---------------------------------------------------------------------------
// Finite-difference checks

using ScalarField = std::function<double(const Vec&)>;
using VectorField = std::function<Vec(const Vec&)>;

/// max_i |(f(x + h e_i) - f(x - h e_i)) / 2h - grad(x)_i|
double fd_gradient_check(const ScalarField& f, const VectorField& grad,
                         const Vec& x, double h);

/// Central-difference Jacobian of a vector field, column by column.
Mat fd_jacobian(const VectorField& f, const Vec& x, double h);

}  // namespace hvf
