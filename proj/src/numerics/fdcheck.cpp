#include "hvf/numerics.hpp"

#include <cmath>

namespace hvf {

double fd_gradient_check(const ScalarField& f, const VectorField& grad,
                         const Vec& x, double h) {
  const Vec g = grad(x);
  double worst = 0.0;
  Vec xp = x;
  for (Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    const double fp = f(xp);
    xp(i) = x(i) - h;
    const double fm = f(xp);
    xp(i) = x(i);
    worst = std::max(worst, std::abs((fp - fm) / (2.0 * h) - g(i)));
  }
  return worst;
}

Mat fd_jacobian(const VectorField& f, const Vec& x, double h) {
  Vec xp = x;
  Mat jac;
  for (Index j = 0; j < x.size(); ++j) {
    xp(j) = x(j) + h;
    const Vec fp = f(xp);
    xp(j) = x(j) - h;
    const Vec fm = f(xp);
    xp(j) = x(j);
    if (j == 0) jac.resize(fp.size(), x.size());
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

}  // namespace hvf
