#include "hvf/numerics.hpp"

#include <cmath>
#include <sstream>

namespace hvf {

CgResult cg_solve(const LinearOperator& op, const Vec& rhs,
                  const CgOptions& options, const Vec* initial) {
  const Index n = op.dim;
  if (rhs.size() != n) throw NumericsError("cg_solve: rhs size mismatch");
  if (!(options.tol > 0.0)) throw NumericsError("cg_solve: tol must be positive");
  const int max_iter =
      options.max_iter > 0 ? options.max_iter : static_cast<int>(50 * std::max<Index>(n, 1));

  CgResult result;
  result.x = initial ? *initial : Vec::Zero(n);
  if (result.x.size() != n) throw NumericsError("cg_solve: warm start size mismatch");

  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) {
    result.x.setZero();
    return result;
  }
  const double target = options.tol * rhs_norm;

  Vec inv_diag;
  if (options.diagonal) {
    inv_diag = options.diagonal->unaryExpr(
        [](double d) { return d > 0.0 ? 1.0 / d : 1.0; });
  }
  auto precondition = [&](const Vec& r) -> Vec {
    return options.diagonal ? Vec(r.cwiseProduct(inv_diag)) : r;
  };

  Vec ap(n);
  op.apply(result.x, ap);
  Vec r = rhs - ap;
  double rnorm = r.norm();
  int it = 0;

  // Outer loop re-seeds the recurrence from the true residual so that the
  // termination test is never fooled by drift in the updated residual.
  while (rnorm > target && it < max_iter) {
    Vec z = precondition(r);
    Vec p = z;
    double rz = r.dot(z);
    while (it < max_iter) {
      op.apply(p, ap);
      const double pap = p.dot(ap);
      if (!(pap > 0.0)) {
        if (!std::isfinite(pap)) throw ConvergenceError("cg_solve: non-finite curvature", it, rnorm / rhs_norm);
        break;  // breakdown: restart from the true residual
      }
      const double step = rz / pap;
      result.x.noalias() += step * p;
      r.noalias() -= step * ap;
      ++it;
      rnorm = r.norm();
      if (rnorm <= target) break;
      z = precondition(r);
      const double rz_new = r.dot(z);
      p = z + (rz_new / rz) * p;
      rz = rz_new;
    }
    op.apply(result.x, ap);
    r = rhs - ap;
    rnorm = r.norm();
  }

  result.iterations = it;
  result.relative_residual = rnorm / rhs_norm;
  if (rnorm > target) {
    std::ostringstream os;
    os << "cg_solve: no convergence after " << it
       << " iterations, relative residual " << result.relative_residual;
    throw ConvergenceError(os.str(), it, result.relative_residual);
  }
  return result;
}

}  // namespace hvf
