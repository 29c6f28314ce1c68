#pragma once

#include "hvf/numerics.hpp"

#include <string>

namespace hvf {

/// Serializable kernel description: family, width parameter, and whether the
/// radial kernel is multiplied by <x, y>^2.
struct KernelSpec {
  std::string family = "wendland_c4";
  Index dim = 1;
  double gamma = 1.0;
  bool structured = false;
};

/// psi(s) and its first two derivatives for s = |x - y|^2.
struct ProfileValues {
  double psi = 0.0;
  double dpsi = 0.0;
  double ddpsi = 0.0;
};

/// Wendland function Phi(r) = (1-r)_+^{l+2} [(l^2+4l+3) r^2 + (3l+6) r + 3]
/// with l = floor(N/2) + 3, used as psi(s) = Phi(gamma sqrt(s)).
///
/// The derivatives in s have removable singularities at s = 0. They are
/// evaluated through the factorisations
///   Phi'(r)          = -(l+3)(l+4) r (1-r)^{l+1} (1 + (l+1) r)
///   d/dr(Phi'(r)/r)  =  (l+1)(l+2)(l+3)(l+4) r (1-r)^l
/// which are exact for every r in [0, 1].
class WendlandC4 {
 public:
  WendlandC4(Index dim, double gamma);

  Index dim() const { return dim_; }
  double gamma() const { return gamma_; }
  int l() const { return l_; }
  double support_radius() const { return 1.0 / gamma_; }

  double phi(double r) const;
  ProfileValues profile(double s) const;
  double psi(double s) const { return profile(s).psi; }
  double dpsi(double s) const { return profile(s).dpsi; }
  double ddpsi(double s) const { return profile(s).ddpsi; }

 private:
  Index dim_;
  double gamma_;
  int l_;
  double c2_, c1_;     // quadratic factor coefficients
  double d1_scale_;    // psi' prefactor
  double d2_scale_;    // psi'' prefactor
};

/// Kernel used for Hermite interpolation: a Wendland C4 kernel, optionally
/// multiplied by <x, y>^2 (the structured variant, which vanishes together
/// with its first and mixed second derivatives whenever an argument is 0).
class Kernel {
 public:
  explicit Kernel(const KernelSpec& spec);

  const KernelSpec& spec() const { return spec_; }
  const WendlandC4& radial() const { return radial_; }
  Index dim() const { return spec_.dim; }
  bool structured() const { return spec_.structured; }

  double eval(const Vec& x, const Vec& y) const;
  /// Gradient in the first argument.
  Vec grad1(const Vec& x, const Vec& y) const;
  /// Gradient in the second argument.
  Vec grad2(const Vec& x, const Vec& y) const;
  /// E_k(x, y) b with E_k(x, y)_{jl} = d^2 k / (dy_j dx_l), in O(N).
  Vec ek_apply(const Vec& x, const Vec& y, const Vec& b) const;

  /// Adds the contribution of one Hermite basis term centred at `center`,
  ///   a k(center, y) + <b, grad1 k(center, y)>,
  /// to `value` and its y-gradient a grad2 k(center, y) + E_k(center, y) b to
  /// `grad` (if non-null). Returns false when y is outside the support.
  bool accumulate(const double* center, double a, const double* b, const double* y,
                  double& value, double* grad) const;

 private:
  KernelSpec spec_;
  WendlandC4 radial_;
  double support_sq_;
};

}  // namespace hvf
