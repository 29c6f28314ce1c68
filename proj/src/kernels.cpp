#include "hvf/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace hvf {

namespace {

double ipow(double base, int exp) {
  double result = 1.0;
  while (exp > 0) {
    if (exp & 1) result *= base;
    base *= base;
    exp >>= 1;
  }
  return result;
}

}  // namespace

WendlandC4::WendlandC4(Index dim, double gamma)
    : dim_(dim), gamma_(gamma), l_(static_cast<int>(dim / 2) + 3) {
  if (dim < 1) throw std::invalid_argument("WendlandC4: dim must be >= 1");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("WendlandC4: gamma must be positive and finite");
  }
  const double l = l_;
  c2_ = l * l + 4.0 * l + 3.0;
  c1_ = 3.0 * l + 6.0;
  d1_scale_ = -0.5 * gamma * gamma * (l + 3.0) * (l + 4.0);
  d2_scale_ = 0.25 * gamma * gamma * gamma * gamma * (l + 1.0) * (l + 2.0) * (l + 3.0) * (l + 4.0);
}

double WendlandC4::phi(double r) const {
  if (r >= 1.0) return 0.0;
  return ipow(1.0 - r, l_ + 2) * ((c2_ * r + c1_) * r + 3.0);
}

ProfileValues WendlandC4::profile(double s) const {
  const double r = gamma_ * std::sqrt(s);
  if (r >= 1.0) return {};
  const double one_minus = 1.0 - r;
  const double pow_l = ipow(one_minus, l_);
  ProfileValues out;
  out.psi = pow_l * one_minus * one_minus * ((c2_ * r + c1_) * r + 3.0);
  out.dpsi = d1_scale_ * pow_l * one_minus * (1.0 + (l_ + 1.0) * r);
  out.ddpsi = d2_scale_ * pow_l;
  return out;
}

Kernel::Kernel(const KernelSpec& spec)
    : spec_(spec), radial_(spec.dim, spec.gamma), support_sq_(1.0 / (spec.gamma * spec.gamma)) {
  if (spec.family != "wendland_c4") {
    throw std::invalid_argument("Kernel: unsupported family '" + spec.family + "'");
  }
}

double Kernel::eval(const Vec& x, const Vec& y) const {
  const double phi = radial_.psi((x - y).squaredNorm());
  if (!spec_.structured) return phi;
  const double m = x.dot(y);
  return m * m * phi;
}

Vec Kernel::grad1(const Vec& x, const Vec& y) const {
  const Vec d = x - y;
  const ProfileValues pv = radial_.profile(d.squaredNorm());
  Vec g = (2.0 * pv.dpsi) * d;
  if (!spec_.structured) return g;
  const double m = x.dot(y);
  return (2.0 * m * pv.psi) * y + (m * m) * g;
}

Vec Kernel::grad2(const Vec& x, const Vec& y) const {
  const Vec d = x - y;
  const ProfileValues pv = radial_.profile(d.squaredNorm());
  Vec g = (-2.0 * pv.dpsi) * d;
  if (!spec_.structured) return g;
  const double m = x.dot(y);
  return (2.0 * m * pv.psi) * x + (m * m) * g;
}

Vec Kernel::ek_apply(const Vec& x, const Vec& y, const Vec& b) const {
  const Vec d = x - y;
  const ProfileValues pv = radial_.profile(d.squaredNorm());
  // Radial part: -2 psi' b - 4 psi'' d <d, b>.
  const double db = d.dot(b);
  Vec radial = -2.0 * pv.dpsi * b - (4.0 * pv.ddpsi * db) * d;
  if (!spec_.structured) return radial;
  // Product rule for <x,y>^2 * phi.
  const double m = x.dot(y);
  const double yb = y.dot(b);
  return (2.0 * pv.psi * yb) * x + (2.0 * m * pv.psi) * b - (4.0 * m * pv.dpsi * yb) * d +
         (4.0 * m * pv.dpsi * db) * x + (m * m) * radial;
}

bool Kernel::accumulate(const double* center, double a, const double* b, const double* y,
                        double& value, double* grad) const {
  const Index n = spec_.dim;
  double s = 0.0;
  for (Index k = 0; k < n; ++k) {
    const double dk = center[k] - y[k];
    s += dk * dk;
  }
  if (s >= support_sq_) return false;
  const ProfileValues pv = radial_.profile(s);

  double db = 0.0;
  for (Index k = 0; k < n; ++k) db += (center[k] - y[k]) * b[k];

  if (!spec_.structured) {
    value += a * pv.psi + 2.0 * pv.dpsi * db;
    if (grad) {
      // a grad2 k + E_k b = -2 psi' (a d + b) - 4 psi'' <d,b> d
      const double cd = -2.0 * pv.dpsi * a - 4.0 * pv.ddpsi * db;
      const double cb = -2.0 * pv.dpsi;
      for (Index k = 0; k < n; ++k) grad[k] += cd * (center[k] - y[k]) + cb * b[k];
    }
    return true;
  }

  double m = 0.0, yb = 0.0;
  for (Index k = 0; k < n; ++k) {
    m += center[k] * y[k];
    yb += y[k] * b[k];
  }
  value += a * m * m * pv.psi + 2.0 * m * pv.psi * yb + 2.0 * m * m * pv.dpsi * db;
  if (grad) {
    const double cx = 2.0 * a * m * pv.psi + 2.0 * pv.psi * yb + 4.0 * m * pv.dpsi * db;
    const double cd = -2.0 * a * m * m * pv.dpsi - 4.0 * m * pv.dpsi * yb -
                      4.0 * m * m * pv.ddpsi * db;
    const double cb = 2.0 * m * pv.psi - 2.0 * m * m * pv.dpsi;
    for (Index k = 0; k < n; ++k) {
      grad[k] += cx * center[k] + cd * (center[k] - y[k]) + cb * b[k];
    }
  }
  return true;
}

}  // namespace hvf
