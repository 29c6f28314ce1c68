#pragma once

#include "hvf/numerics.hpp"

#include <Eigen/Sparse>

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hvf {

/// Linear-quadratic data of the problem at the target state 0:
/// A = J_f(0), B = g(0), cost = Hessian(r)(0) / 2.
struct Linearization {
  Mat A;
  Mat B;
  Mat cost;
};

/// Infinite-horizon problem  min int r(x) + u^T R u  s.t.  x' = f(x) + g(x) u.
///
/// Derivatives are exposed only as transpose-Jacobian actions so that the
/// costate equation of large semi-discretised models stays linear in the state
/// dimension.
class ControlAffineModel {
 public:
  virtual ~ControlAffineModel() = default;

  virtual std::string name() const = 0;
  Index state_dim() const { return state_dim_; }
  Index control_dim() const { return control_dim_; }

  virtual Vec drift(const Vec& x) const = 0;
  /// g(x) u
  virtual Vec input_apply(const Vec& x, const Vec& u) const = 0;
  /// g(x)^T p
  virtual Vec input_transpose_apply(const Vec& x, const Vec& p) const = 0;
  virtual double running_cost(const Vec& x) const = 0;
  virtual Vec running_cost_gradient(const Vec& x) const = 0;
  /// J_f(x)^T p
  virtual Vec drift_jacobian_transpose_apply(const Vec& x, const Vec& p) const = 0;
  /// [d/dx (g(x) u)]^T p
  virtual Vec input_jacobian_transpose_apply(const Vec& x, const Vec& u,
                                             const Vec& p) const = 0;
  virtual Linearization linearization() const = 0;

  /// A quadratic model x^T Q x of the value function known in closed form,
  /// for problems whose linearization is degenerate.
  virtual std::optional<Mat> taylor_quadratic() const { return std::nullopt; }

  const Mat& control_weight() const { return R_; }
  const Mat& control_weight_inverse() const { return R_inv_; }

 protected:
  ControlAffineModel(Index state_dim, Index control_dim, Mat control_weight);

 private:
  Index state_dim_;
  Index control_dim_;
  Mat R_;
  Mat R_inv_;
};

using ModelPtr = std::shared_ptr<const ControlAffineModel>;

/// u = -1/2 R^{-1} g(x)^T p
Vec optimal_control(const ControlAffineModel& model, const Vec& x, const Vec& p);

/// Right-hand side of the state/costate/value system for z = [x; p; v].
Vec pmp_rhs(const ControlAffineModel& model, const Vec& z);

/// grad^T f - 1/4 grad^T g R^{-1} g^T grad + r
double hjb_residual(const ControlAffineModel& model, const Vec& x, const Vec& grad_v);

/// Closed-loop right-hand side f(x) + g(x) u with u from a value gradient.
Vec feedback_rhs(const ControlAffineModel& model, const Vec& x, const Vec& grad_v);

/// r(x) + u^T R u
double stage_cost(const ControlAffineModel& model, const Vec& x, const Vec& u);

// ---------------------------------------------------------------------------
// Academic model problem

struct AmpParameters {
  double alpha = 1e5;
  double beta = 1.0;
  Index dim = 2;

  /// Positive root of the scalar Riccati-type identity of the closed-form
  /// value function.
  double value_constant() const;
};

/// x' = |x|^2 x + exp(-|x|^2/2) x u,  r = alpha exp(|x|^2) |x|^4,  R = beta.
/// Its value function is C (exp(|x|^2) - 1).
class AmpModel final : public ControlAffineModel {
 public:
  explicit AmpModel(AmpParameters params);

  std::string name() const override { return "amp"; }
  const AmpParameters& parameters() const { return params_; }

  Vec drift(const Vec& x) const override;
  Vec input_apply(const Vec& x, const Vec& u) const override;
  Vec input_transpose_apply(const Vec& x, const Vec& p) const override;
  double running_cost(const Vec& x) const override;
  Vec running_cost_gradient(const Vec& x) const override;
  Vec drift_jacobian_transpose_apply(const Vec& x, const Vec& p) const override;
  Vec input_jacobian_transpose_apply(const Vec& x, const Vec& u,
                                     const Vec& p) const override;
  Linearization linearization() const override;
  /// 2 C I from truncating the Taylor series of the exact value function.
  std::optional<Mat> taylor_quadratic() const override;

 private:
  AmpParameters params_;
};

double amp_true_value(const AmpParameters& params, const Vec& x);
Vec amp_true_gradient(const AmpParameters& params, const Vec& x);
/// Optimal closed loop x' = -sqrt(1 + alpha/beta) |x|^2 x.
Vec amp_optimal_closed_loop(const AmpParameters& params, const Vec& x);

// ---------------------------------------------------------------------------
// Linear-quadratic model

/// x' = A x + B u,  r = x^T C x.
class LinearQuadraticModel final : public ControlAffineModel {
 public:
  LinearQuadraticModel(Mat A, Mat B, Mat cost, Mat control_weight);

  std::string name() const override { return "linear"; }

  Vec drift(const Vec& x) const override;
  Vec input_apply(const Vec& x, const Vec& u) const override;
  Vec input_transpose_apply(const Vec& x, const Vec& p) const override;
  double running_cost(const Vec& x) const override;
  Vec running_cost_gradient(const Vec& x) const override;
  Vec drift_jacobian_transpose_apply(const Vec& x, const Vec& p) const override;
  Vec input_jacobian_transpose_apply(const Vec& x, const Vec& u,
                                     const Vec& p) const override;
  Linearization linearization() const override;

 private:
  Mat A_, B_, C_;
};

// ---------------------------------------------------------------------------
// Nonlinear heat equation of Zeldovich type, finite differences on the unit
// square with homogeneous Neumann boundary.

struct NheParameters {
  Index grid_side = 10;
  double alpha = 5.0;
  double beta = 0.5;
  /// Control region [lo_x, hi_x] x [lo_y, hi_y].
  std::array<double, 4> control_region{0.25, 0.75, 0.25, 0.75};
  double control_penalty = 1e-3;
};

/// x' = A x + beta (x^2 - x^3) + B u,  r = |x|^2,  R = penalty I.
///
/// Nodes are cell centred, xi_i = (i + 1/2) h with h = 1 / grid_side; the
/// Laplacian uses mirrored ghost nodes so every row of A sums to zero.
class NheModel final : public ControlAffineModel {
 public:
  NheModel(NheParameters params, Eigen::SparseMatrix<double> laplacian,
           std::vector<Index> controlled_nodes);

  std::string name() const override { return "nhe"; }
  const NheParameters& parameters() const { return params_; }
  const Eigen::SparseMatrix<double>& diffusion() const { return A_; }
  const std::vector<Index>& controlled_nodes() const { return controlled_; }
  Mat input_matrix() const;
  /// Spatial coordinate of grid node k (row-major, x fastest).
  std::array<double, 2> node(Index k) const;

  Vec drift(const Vec& x) const override;
  Vec input_apply(const Vec& x, const Vec& u) const override;
  Vec input_transpose_apply(const Vec& x, const Vec& p) const override;
  double running_cost(const Vec& x) const override;
  Vec running_cost_gradient(const Vec& x) const override;
  Vec drift_jacobian_transpose_apply(const Vec& x, const Vec& p) const override;
  Vec input_jacobian_transpose_apply(const Vec& x, const Vec& u,
                                     const Vec& p) const override;
  Linearization linearization() const override;

 private:
  NheParameters params_;
  Eigen::SparseMatrix<double> A_;
  std::vector<Index> controlled_;
};

std::shared_ptr<NheModel> nhe_assemble(const NheParameters& params);

}  // namespace hvf
