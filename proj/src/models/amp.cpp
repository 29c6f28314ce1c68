#include "hvf/models.hpp"

#include <cmath>

namespace hvf {

double AmpParameters::value_constant() const {
  return beta * (1.0 + std::sqrt(1.0 + alpha / beta));
}

AmpModel::AmpModel(AmpParameters params)
    : ControlAffineModel(params.dim, 1, Mat::Constant(1, 1, params.beta)),
      params_(params) {
  if (!(params.alpha > 0.0) || !(params.beta > 0.0) || params.dim < 1) {
    throw std::invalid_argument("AMP requires alpha > 0, beta > 0, dim >= 1");
  }
}

Vec AmpModel::drift(const Vec& x) const { return x.squaredNorm() * x; }

Vec AmpModel::input_apply(const Vec& x, const Vec& u) const {
  return (std::exp(-0.5 * x.squaredNorm()) * u(0)) * x;
}

Vec AmpModel::input_transpose_apply(const Vec& x, const Vec& p) const {
  return Vec::Constant(1, std::exp(-0.5 * x.squaredNorm()) * x.dot(p));
}

double AmpModel::running_cost(const Vec& x) const {
  const double s = x.squaredNorm();
  return params_.alpha * std::exp(s) * s * s;
}

Vec AmpModel::running_cost_gradient(const Vec& x) const {
  const double s = x.squaredNorm();
  return (params_.alpha * std::exp(s) * (2.0 * s * s + 4.0 * s)) * x;
}

// J_f = |x|^2 I + 2 x x^T
Vec AmpModel::drift_jacobian_transpose_apply(const Vec& x, const Vec& p) const {
  return x.squaredNorm() * p + (2.0 * x.dot(p)) * x;
}

// d/dx [exp(-|x|^2/2) u x] = u exp(-|x|^2/2) (I - x x^T), symmetric.
Vec AmpModel::input_jacobian_transpose_apply(const Vec& x, const Vec& u,
                                             const Vec& p) const {
  const double w = u(0) * std::exp(-0.5 * x.squaredNorm());
  return w * (p - x.dot(p) * x);
}

Linearization AmpModel::linearization() const {
  const Index n = state_dim();
  return {Mat::Zero(n, n), Mat::Zero(n, 1), Mat::Zero(n, n)};
}

std::optional<Mat> AmpModel::taylor_quadratic() const {
  const Index n = state_dim();
  return Mat(2.0 * params_.value_constant() * Mat::Identity(n, n));
}

double amp_true_value(const AmpParameters& params, const Vec& x) {
  return params.value_constant() * std::expm1(x.squaredNorm());
}

Vec amp_true_gradient(const AmpParameters& params, const Vec& x) {
  return (2.0 * params.value_constant() * std::exp(x.squaredNorm())) * x;
}

Vec amp_optimal_closed_loop(const AmpParameters& params, const Vec& x) {
  return (-std::sqrt(1.0 + params.alpha / params.beta) * x.squaredNorm()) * x;
}

}  // namespace hvf
