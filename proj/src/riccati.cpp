#include "hvf/riccati.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace hvf {

Mat riccati_residual(const Mat& A, const Mat& B, const Mat& cost, const Mat& R, const Mat& Q) {
  const Mat S = B * R.llt().solve(B.transpose());
  return A.transpose() * Q + Q * A - Q * S * Q + cost;
}

QuadraticValue solve_are(const Mat& A, const Mat& B, const Mat& cost, const Mat& R,
                         const RiccatiOptions& options) {
  const Index n = A.rows();
  if (A.cols() != n || B.rows() != n || cost.rows() != n || cost.cols() != n ||
      R.rows() != B.cols() || R.cols() != B.cols()) {
    throw std::invalid_argument("solve_are: inconsistent dimensions");
  }
  const Mat S = B * R.llt().solve(B.transpose());
  const Mat At = A.transpose();

  auto unpack = [n](const Vec& y) { return Eigen::Map<const Mat>(y.data(), n, n); };
  auto rate = [&](const Mat& Q) -> Mat { return At * Q + Q * A - Q * S * Q + cost; };

  IvpOptions ivp;
  ivp.rel_tol = options.rel_tol;
  ivp.abs_tol = options.abs_tol;
  ivp.max_steps = 50'000'000;
  ivp.dense = false;
  ivp.stop = [&](double, const Vec& y) {
    const Mat Q = unpack(y);
    return rate(0.5 * (Q + Q.transpose())).cwiseAbs().maxCoeff() <= options.tol;
  };
  const OdeRhs rhs = [&](double, const Vec& y) -> Vec {
    const Mat dQ = rate(unpack(y));
    return Eigen::Map<const Vec>(dQ.data(), n * n);
  };

  QuadraticValue out;
  Vec y = Vec::Zero(n * n);
  double t = 0.0;
  // Integrate in chunks, projecting onto symmetric matrices between them.
  // Error-control noise in the stiff modes can hold the residual above tol;
  // tighten the integrator whenever a chunk fails to halve the residual.
  double chunk = 1.0;
  double last = std::numeric_limits<double>::infinity();
  while (true) {
    const IvpResult run = integrate_ivp(rhs, y, t, t + chunk, ivp);
    t = run.t_end();
    Mat Q = unpack(run.states.back());
    Q = 0.5 * (Q + Q.transpose());
    y = Eigen::Map<const Vec>(Q.data(), n * n);
    out.residual = rate(Q).cwiseAbs().maxCoeff();
    if (out.residual <= options.tol) {
      out.Q = Q;
      out.integration_time = t;
      return out;
    }
    if (t >= options.max_time) {
      std::ostringstream os;
      os << "solve_are: not stationary after t = " << t << ", residual " << out.residual;
      throw NumericsError(os.str());
    }
    if (out.residual > 0.5 * last) {
      ivp.rel_tol = std::max(1e-14, 0.1 * ivp.rel_tol);
      ivp.abs_tol = std::max(1e-16, 0.1 * ivp.abs_tol);
    }
    last = out.residual;
    chunk = std::min(2.0 * chunk, options.max_time - t);
  }
}

double quadratic_value(const Mat& Q, const Vec& x) { return x.dot(Q * x); }

Vec quadratic_gradient(const Mat& Q, const Vec& x) { return (Q + Q.transpose()) * x; }

Mat local_quadratic(const ControlAffineModel& model, const RiccatiOptions& options) {
  if (auto q = model.taylor_quadratic()) return *q;
  const Linearization lin = model.linearization();
  return solve_are(lin.A, lin.B, lin.cost, model.control_weight(), options).Q;
}

}  // namespace hvf
