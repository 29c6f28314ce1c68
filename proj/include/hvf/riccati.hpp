#pragma once

#include "hvf/models.hpp"
#include "hvf/numerics.hpp"

namespace hvf {

struct RiccatiOptions {
  /// Stationarity threshold on max|dQ/dt|.
  double tol = 1e-9;
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;
  /// Integration horizon budget.
  double max_time = 1e6;
};

struct QuadraticValue {
  Mat Q;
  /// max|A^T Q + Q A - Q B R^{-1} B^T Q + C| at the returned Q.
  double residual = 0.0;
  double integration_time = 0.0;
};

/// Right-hand side A^T Q + Q A - Q B R^{-1} B^T Q + C.
Mat riccati_residual(const Mat& A, const Mat& B, const Mat& cost, const Mat& R, const Mat& Q);

/// Stabilising solution of the algebraic Riccati equation, reached by
/// integrating the Riccati differential equation from Q = 0 until it is
/// stationary. Throws NumericsError with the last residual if the time budget
/// runs out.
QuadraticValue solve_are(const Mat& A, const Mat& B, const Mat& cost, const Mat& R,
                         const RiccatiOptions& options = {});

double quadratic_value(const Mat& Q, const Vec& x);
Vec quadratic_gradient(const Mat& Q, const Vec& x);

/// Q for the local quadratic value model of a problem: the closed-form Taylor
/// matrix if the model provides one, otherwise the ARE of its linearization.
Mat local_quadratic(const ControlAffineModel& model, const RiccatiOptions& options = {});

}  // namespace hvf
