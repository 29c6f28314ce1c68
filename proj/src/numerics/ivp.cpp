#include "hvf/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hvf {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - b_hat (error weights), the 7th stage is FSAL.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

bool all_finite(const Vec& v) { return v.allFinite(); }

double error_norm(const Vec& err, const Vec& y0, const Vec& y1,
                  const IvpOptions& o) {
  const Index n = err.size();
  if (n == 0) return 0.0;
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double sc = o.abs_tol + o.rel_tol * std::max(std::abs(y0(i)), std::abs(y1(i)));
    const double q = err(i) / sc;
    acc += q * q;
  }
  return std::sqrt(acc / static_cast<double>(n));
}

double initial_step(const OdeRhs& rhs, double t0, const Vec& y0, const Vec& f0,
                    double direction, const IvpOptions& o) {
  auto scaled_norm = [&](const Vec& v) {
    double acc = 0.0;
    for (Index i = 0; i < v.size(); ++i) {
      const double sc = o.abs_tol + o.rel_tol * std::abs(y0(i));
      acc += (v(i) / sc) * (v(i) / sc);
    }
    return v.size() ? std::sqrt(acc / static_cast<double>(v.size())) : 0.0;
  };
  const double d0 = scaled_norm(y0), d1 = scaled_norm(f0);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  const Vec y1 = y0 + direction * h0 * f0;
  const Vec f1 = rhs(t0 + direction * h0, y1);
  if (!all_finite(f1)) return h0 * 1e-3;
  const double d2 = scaled_norm(f1 - f0) / h0;
  const double h1 = (d1 <= 1e-15 && d2 <= 1e-15)
                        ? std::max(1e-6, h0 * 1e-3)
                        : std::pow(0.01 / std::max(d1, d2), 1.0 / 5.0);
  return std::min(100 * h0, h1);
}

}  // namespace

IvpError::IvpError(const std::string& what, IvpResult partial)
    : NumericsError(what), partial_(std::move(partial)) {}

Vec IvpResult::at(double t) const {
  if (times.size() == 1 || t <= times.front()) return states.front();
  if (t >= times.back()) return states.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - times.begin()) - 1;
  const double h = times[k + 1] - times[k];
  const double s = (t - times[k]) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
  return h00 * states[k] + (h10 * h) * derivatives[k] + h01 * states[k + 1] +
         (h11 * h) * derivatives[k + 1];
}

IvpResult integrate_ivp(const OdeRhs& rhs, const Vec& x0, double t0, double t1,
                        const IvpOptions& o) {
  if (!(t1 > t0)) throw NumericsError("integrate_ivp: requires t1 > t0");
  IvpResult out;
  Vec y = x0;
  Vec k1 = rhs(t0, y);
  out.times.push_back(t0);
  out.states.push_back(y);
  out.derivatives.push_back(k1);
  if (!all_finite(y) || !all_finite(k1)) {
    throw IvpError("integrate_ivp: non-finite initial state or derivative", out);
  }
  if (o.stop && o.stop(t0, y)) {
    out.stopped_early = true;
    return out;
  }

  const double span = t1 - t0;
  const double max_step = o.max_step > 0.0 ? o.max_step : span;
  double h = o.first_step > 0.0 ? o.first_step : initial_step(rhs, t0, y, k1, 1.0, o);
  h = std::min(h, max_step);
  double t = t0;
  long steps = 0;

  constexpr double safety = 0.9, min_factor = 0.2, max_factor = 10.0;
  bool rejected_last = false;

  while (t < t1) {
    if (++steps > o.max_steps) {
      throw IvpError("integrate_ivp: step budget exhausted", out);
    }
    const double min_step = 10.0 * std::abs(std::nextafter(t, t1) - t);
    if (h < min_step) {
      std::ostringstream os;
      os << "integrate_ivp: step size underflow at t = " << t;
      throw IvpError(os.str(), out);
    }
    if (t + h > t1 || t1 - (t + h) < min_step) h = t1 - t;

    const Vec k2 = rhs(t + c2 * h, y + h * (a21 * k1));
    const Vec k3 = rhs(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const Vec k4 = rhs(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec k5 = rhs(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec k6 = rhs(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Vec y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vec k7 = rhs(t + h, y_new);

    const bool finite = all_finite(y_new) && all_finite(k7);
    double err = std::numeric_limits<double>::infinity();
    if (finite) {
      const Vec e = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      err = error_norm(e, y, y_new, o);
    }

    if (finite && err <= 1.0) {
      t = (h == t1 - t) ? t1 : t + h;
      y = y_new;
      k1 = k7;
      if (!o.dense && out.times.size() > 1) {
        out.times.pop_back();
        out.states.pop_back();
        out.derivatives.pop_back();
      }
      out.times.push_back(t);
      out.states.push_back(y);
      out.derivatives.push_back(k1);
      if (o.stop && o.stop(t, y)) {
        out.stopped_early = true;
        return out;
      }
      double factor = err == 0.0 ? max_factor : safety * std::pow(err, -0.2);
      factor = std::clamp(factor, min_factor, max_factor);
      if (rejected_last) factor = std::min(factor, 1.0);
      h = std::min(h * factor, max_step);
      rejected_last = false;
    } else {
      const double factor =
          finite ? std::max(min_factor, safety * std::pow(err, -0.2)) : 0.25;
      h *= factor;
      rejected_last = true;
    }
  }
  return out;
}

}  // namespace hvf
