#include "hvf/models.hpp"

namespace hvf {

ControlAffineModel::ControlAffineModel(Index state_dim, Index control_dim,
                                       Mat control_weight)
    : state_dim_(state_dim), control_dim_(control_dim), R_(std::move(control_weight)) {
  if (R_.rows() != control_dim_ || R_.cols() != control_dim_) {
    throw std::invalid_argument("control weight must be control_dim x control_dim");
  }
  Eigen::LLT<Mat> llt(R_);
  if (llt.info() != Eigen::Success || !R_.isApprox(R_.transpose())) {
    throw std::invalid_argument("control weight must be symmetric positive definite");
  }
  R_inv_ = llt.solve(Mat::Identity(control_dim_, control_dim_));
}

Vec optimal_control(const ControlAffineModel& model, const Vec& x, const Vec& p) {
  return -0.5 * (model.control_weight_inverse() * model.input_transpose_apply(x, p));
}

double stage_cost(const ControlAffineModel& model, const Vec& x, const Vec& u) {
  return model.running_cost(x) + u.dot(model.control_weight() * u);
}

Vec pmp_rhs(const ControlAffineModel& model, const Vec& z) {
  const Index n = model.state_dim();
  if (z.size() != 2 * n + 1) throw std::invalid_argument("pmp_rhs: z must have length 2N+1");
  const Vec x = z.head(n);
  const Vec p = z.segment(n, n);
  const Vec u = optimal_control(model, x, p);

  Vec dz(2 * n + 1);
  dz.head(n) = model.drift(x) + model.input_apply(x, u);
  dz.segment(n, n) = -(model.drift_jacobian_transpose_apply(x, p) +
                       model.input_jacobian_transpose_apply(x, u, p) +
                       model.running_cost_gradient(x));
  dz(2 * n) = -stage_cost(model, x, u);
  return dz;
}

double hjb_residual(const ControlAffineModel& model, const Vec& x, const Vec& grad_v) {
  const Vec gtp = model.input_transpose_apply(x, grad_v);
  return grad_v.dot(model.drift(x)) - 0.25 * gtp.dot(model.control_weight_inverse() * gtp) +
         model.running_cost(x);
}

Vec feedback_rhs(const ControlAffineModel& model, const Vec& x, const Vec& grad_v) {
  return model.drift(x) + model.input_apply(x, optimal_control(model, x, grad_v));
}

}  // namespace hvf
