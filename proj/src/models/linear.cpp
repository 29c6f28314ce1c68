#include "hvf/models.hpp"

namespace hvf {

LinearQuadraticModel::LinearQuadraticModel(Mat A, Mat B, Mat cost, Mat control_weight)
    : ControlAffineModel(A.rows(), B.cols(), std::move(control_weight)),
      A_(std::move(A)),
      B_(std::move(B)),
      C_(std::move(cost)) {
  const Index n = A_.rows();
  if (A_.cols() != n || B_.rows() != n || C_.rows() != n || C_.cols() != n) {
    throw std::invalid_argument("LinearQuadraticModel: inconsistent dimensions");
  }
}

Vec LinearQuadraticModel::drift(const Vec& x) const { return A_ * x; }
Vec LinearQuadraticModel::input_apply(const Vec&, const Vec& u) const { return B_ * u; }
Vec LinearQuadraticModel::input_transpose_apply(const Vec&, const Vec& p) const {
  return B_.transpose() * p;
}
double LinearQuadraticModel::running_cost(const Vec& x) const { return x.dot(C_ * x); }
Vec LinearQuadraticModel::running_cost_gradient(const Vec& x) const {
  return (C_ + C_.transpose()) * x;
}
Vec LinearQuadraticModel::drift_jacobian_transpose_apply(const Vec&, const Vec& p) const {
  return A_.transpose() * p;
}
Vec LinearQuadraticModel::input_jacobian_transpose_apply(const Vec& x, const Vec&,
                                                         const Vec&) const {
  return Vec::Zero(x.size());
}
Linearization LinearQuadraticModel::linearization() const {
  return {A_, B_, 0.5 * (C_ + C_.transpose())};
}

}  // namespace hvf
