#pragma once

#include "hvf/evaluate.hpp"
#include "hvf/explore.hpp"
#include "hvf/hermite.hpp"
#include "hvf/kernels.hpp"
#include "hvf/models.hpp"
#include "hvf/numerics.hpp"
#include "hvf/openloop.hpp"
#include "hvf/riccati.hpp"
#include "hvf/vkoga.hpp"

#include <random>

namespace testutil {

using namespace hvf;

inline Vec uniform(std::mt19937_64& rng, Index n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v(i) = d(rng);
  return v;
}

inline Mat uniform(std::mt19937_64& rng, Index r, Index c, double lo, double hi) {
  Mat m(r, c);
  for (Index j = 0; j < c; ++j) m.col(j) = uniform(rng, r, lo, hi);
  return m;
}

/// n points in [-1, 1]^N, pairwise and from the origin at least `sep` apart.
inline Mat separated(std::mt19937_64& rng, Index N, Index n, double sep) {
  Mat X(N, n);
  Index k = 0;
  while (k < n) {
    const Vec c = uniform(rng, N);
    bool ok = c.norm() >= sep;
    for (Index j = 0; j < k && ok; ++j) ok = (X.col(j) - c).norm() >= sep;
    if (ok) X.col(k++) = c;
  }
  return X;
}

/// Interpolation matrix assembled entry by entry from the kernel and its
/// derivative actions; layout [alpha_1..alpha_n, beta_1..beta_n].
inline Mat dense_M(const Kernel& k, const Mat& X) {
  const Index N = X.rows(), n = X.cols();
  Mat M = Mat::Zero(n * (N + 1), n * (N + 1));
  for (Index j = 0; j < n; ++j) {
    const Vec xj = X.col(j);
    for (Index i = 0; i < n; ++i) {
      const Vec xi = X.col(i);
      M(j, i) = k.eval(xi, xj);
      const Vec g1 = k.grad1(xi, xj), g2 = k.grad2(xi, xj);
      for (Index l = 0; l < N; ++l) {
        M(j, n + i * N + l) = g1(l);
        M(n + j * N + l, i) = g2(l);
        Vec e = Vec::Zero(N);
        e(l) = 1.0;
        M.block(n + j * N, n + i * N + l, N, 1) = k.ek_apply(xi, xj, e);
      }
    }
  }
  return M;
}

/// Scalar problem x' = a x + b u, r = c x^2, R = rho.
inline std::shared_ptr<LinearQuadraticModel> scalar_lqr(double a = 0.0, double b = 1.0, double c = 1.0,
                                                       double rho = 1.0) {
  return std::make_shared<LinearQuadraticModel>(Mat::Constant(1, 1, a), Mat::Constant(1, 1, b),
                                                Mat::Constant(1, 1, c), Mat::Constant(1, 1, rho));
}

inline std::shared_ptr<LinearQuadraticModel> planar_lqr() {
  Mat A(2, 2), B(2, 1);
  A << 0.0, 1.0, -1.0, 0.5;
  B << 0.0, 1.0;
  return std::make_shared<LinearQuadraticModel>(A, B, Mat::Identity(2, 2), Mat::Identity(1, 1));
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testutil
