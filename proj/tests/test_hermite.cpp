#include "common.hpp"
#include "doctest.h"

#include <chrono>
#include <cmath>

using namespace hvf;
using namespace testutil;

TEST_CASE("matvec examples") {
  const Kernel k(KernelSpec{"wendland_c4", 2, 0.9, false});
  const Mat X = (Mat(2, 1) << 0.3, -0.1).finished();
  CHECK(matvec_M(k, X, Vec::Zero(3)).norm() == 0.0);
  const Vec c = (Vec(3) << 2.0, 1.0, -1.0).finished();
  const Vec out = matvec_M(k, X, c);
  const double dpsi0 = k.radial().profile(0.0).dpsi;
  CHECK(out(0) == doctest::Approx(6.0));
  CHECK(out(1) == doctest::Approx(-2.0 * dpsi0 * 1.0));
  CHECK(out(2) == doctest::Approx(-2.0 * dpsi0 * -1.0));
}

TEST_CASE("matvec equals dense assembly") {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 25; ++t) {
    const Index n = 1 + t % 5, N = 1 + t % 3;
    for (bool st : {false, true}) {
      const Kernel k(KernelSpec{"wendland_c4", N, 0.5 + 0.1 * t, st});
      const Mat X = uniform(rng, N, n, -1, 1);
      const Mat M = dense_M(k, X);
      const Vec c = uniform(rng, n * (N + 1));
      CHECK((matvec_M(k, X, c) - M * c).norm() <= 1e-12 * (M * c).norm() + 1e-300);
      CHECK((diagonal_M(k, X) - M.diagonal()).norm() <= 1e-12 * M.diagonal().norm());
    }
  }
}

TEST_CASE("matvec is symmetric and positive semidefinite") {
  std::mt19937_64 rng(11);
  const Kernel k(KernelSpec{"wendland_c4", 3, 0.7, true});
  const Mat X = uniform(rng, 3, 12, -1, 1);
  const double scale = diagonal_M(k, X).cwiseAbs().maxCoeff();
  for (int t = 0; t < 20; ++t) {
    const Vec u = uniform(rng, 48), w = uniform(rng, 48);
    CHECK(std::abs(matvec_M(k, X, u).dot(w) - u.dot(matvec_M(k, X, w))) <= 1e-12 * u.norm() * w.norm() * scale);
    CHECK(u.dot(matvec_M(k, X, u)) >= -1e-12 * scale * u.squaredNorm());
  }
}

TEST_CASE("rhs assembly") {
  const Mat X = (Mat(2, 2) << 0.1, 0.2, 0.3, 0.4).finished();
  const Vec v = (Vec(2) << 1, 2).finished();
  const Vec r = assemble_rhs(X, v, Mat::Zero(2, 2), Variant::plain);
  CHECK(r.head(2) == v);
  CHECK(r.tail(4).norm() == 0.0);

  Mat Q(2, 2);
  Q << 2.0, 0.3, 0.3, 1.0;
  Vec qv(2);
  Mat qg(2, 2);
  for (Index j = 0; j < 2; ++j) {
    qv(j) = quadratic_value(Q, X.col(j));
    qg.col(j) = quadratic_gradient(Q, X.col(j));
  }
  CHECK(assemble_rhs(X, qv, qg, Variant::structured, &Q).norm() <= 1e-14);

  AmpParameters P;
  const Mat Qa = 2.0 * P.value_constant() * Mat::Identity(2, 2);
  const Mat e1 = (Mat(2, 1) << 1, 0).finished();
  const Vec ra = assemble_rhs(e1, Vec::Constant(1, amp_true_value(P, e1.col(0))), amp_true_gradient(P, e1.col(0)),
                              Variant::structured, &Qa);
  const double C = P.value_constant();
  CHECK(ra(0) == doctest::Approx(std::sqrt(C * (std::exp(1.0) - 1.0)) - std::sqrt(2.0 * C)).epsilon(1e-12));
  CHECK(ra(0) == doctest::Approx(-1.8413).epsilon(1e-4));
}

TEST_CASE("fit closed forms") {
  const Kernel k(KernelSpec{"wendland_c4", 2, 1.0, false});
  const Mat X = (Mat(2, 1) << 0.2, 0.1).finished();
  const auto z = fit(k, X, Vec::Zero(3));
  CHECK(z.coeffs.stacked().norm() == 0.0);
  const auto one = fit(k, X, (Vec(3) << 1, 0, 0).finished());
  CHECK(one.coeffs.alphas(0) == doctest::Approx(1.0 / 3.0));
  CHECK(one.coeffs.betas.norm() <= 1e-14);
}

TEST_CASE("fit agrees with a dense solve") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 25; ++t) {
    const Index n = 1 + t % 5, N = 1 + t % 3;
    for (bool st : {false, true}) {
      const Kernel k(KernelSpec{"wendland_c4", N, 2.0 + 0.5 * (t % 3), st});
      const Mat X = separated(rng, N, n, 0.1);
      const Vec rhs = uniform(rng, n * (N + 1));
      FitOptions o;
      o.cg_tol = 1e-12;
      const Vec cg = fit(k, X, rhs, o).coeffs.stacked();
      const Vec d = dense_solve(dense_M(k, X), rhs);
      CHECK((cg - d).norm() <= 1e-8 * d.norm());
    }
  }
}

TEST_CASE("interpolation conditions for both variants") {
  std::mt19937_64 rng(13);
  AmpParameters P;
  const Mat Q = 2.0 * P.value_constant() * Mat::Identity(2, 2);
  const Mat X = uniform(rng, 2, 6, -0.8, 0.8);
  Vec v(6);
  Mat g(2, 6);
  for (Index j = 0; j < 6; ++j) {
    v(j) = amp_true_value(P, X.col(j));
    g.col(j) = amp_true_gradient(P, X.col(j));
  }
  FitOptions o;
  for (Variant var : {Variant::plain, Variant::structured}) {
    const KernelSpec spec{"wendland_c4", 2, 0.6, var == Variant::structured};
    const Surrogate s = fit_surrogate(spec, X, v, g, var, var == Variant::structured ? std::optional<Mat>(Q) : std::nullopt, o);
    const double scale = v.cwiseAbs().maxCoeff() + g.colwise().norm().maxCoeff();
    for (Index j = 0; j < 6; ++j) {
      CHECK(residual(s, X.col(j), v(j), g.col(j)) <= 10 * o.cg_tol * scale);
    }
    // eval_grad against finite differences of eval
    for (int t = 0; t < 50; ++t) {
      const Vec x = uniform(rng, 2, -1, 1);
      const double sc = 1.0 + eval_grad(s, x).norm();
      CHECK(fd_gradient_check([&](const Vec& y) { return eval(s, y); }, [&](const Vec& y) { return eval_grad(s, y); }, x,
                              1e-6) <= 1e-5 * sc);
    }
    if (var == Variant::structured) {
      CHECK(eval(s, Vec::Zero(2)) == 0.0);
      CHECK(eval_grad(s, Vec::Zero(2)).norm() == 0.0);
      for (int t = 0; t < 1000; ++t) CHECK(eval(s, uniform(rng, 2)) >= 0.0);
    }
  }
}

TEST_CASE("zero surrogates") {
  const Mat Q = (Mat(2, 2) << 3.0, 0.5, 0.5, 1.0).finished();
  const Surrogate plain(KernelSpec{"wendland_c4", 2, 1.0, false}, Mat(2, 0), HermiteCoefficients::zero(2, 0),
                        Variant::plain);
  const Surrogate st(KernelSpec{"wendland_c4", 2, 1.0, true}, Mat(2, 0), HermiteCoefficients::zero(2, 0),
                     Variant::structured, Q);
  std::mt19937_64 rng(14);
  for (int t = 0; t < 20; ++t) {
    const Vec x = uniform(rng, 2);
    CHECK(eval(plain, x) == 0.0);
    CHECK(eval(st, x) == doctest::Approx(quadratic_value(Q, x)));
    CHECK((eval_grad(st, x) - quadratic_gradient(Q, x)).norm() <= 1e-12 * (1 + x.norm()));
  }
  CHECK(native_norm_sq(plain) == 0.0);
}

TEST_CASE("native norm") {
  const KernelSpec spec{"wendland_c4", 2, 1.0, false};
  HermiteCoefficients c = HermiteCoefficients::zero(2, 1);
  c.alphas(0) = 1.0;
  const Surrogate s(spec, Mat::Zero(2, 1), c, Variant::plain);
  CHECK(native_norm_sq(s) == doctest::Approx(3.0));

  std::mt19937_64 rng(15);
  AmpParameters P;
  const Mat X = uniform(rng, 2, 8, -0.7, 0.7);
  Vec v(8);
  Mat g(2, 8);
  for (Index j = 0; j < 8; ++j) {
    v(j) = amp_true_value(P, X.col(j));
    g.col(j) = amp_true_gradient(P, X.col(j));
  }
  double prev = 0.0;
  for (Index n = 1; n <= 8; ++n) {
    FitOptions o;
    o.cg_tol = 1e-13;
    const Surrogate sn = fit_surrogate(spec, X.leftCols(n), v.head(n), g.leftCols(n), Variant::plain, std::nullopt, o);
    const double nn = native_norm_sq(sn);
    CHECK(nn >= prev - 1e-8 * (1.0 + prev));
    prev = nn;
  }
}

TEST_CASE("invalid data is rejected") {
  const KernelSpec spec{"wendland_c4", 2, 1.0, false};
  Mat X(2, 3);
  X << 0.1, 0.5, 0.1, 0.2, 0.3, 0.2;
  CHECK_THROWS_AS(check_distinct(X), InvalidDataError);
  try {
    check_distinct(X);
  } catch (const InvalidDataError& e) {
    CHECK(e.index() == 2);
  }
  CHECK_THROWS_AS(fit_surrogate(spec, X, Vec::Ones(3), Mat::Zero(2, 3), Variant::plain, std::nullopt), InvalidDataError);
  const Mat Z = Mat::Zero(2, 1);
  CHECK_THROWS_AS(fit_surrogate(KernelSpec{"wendland_c4", 2, 1.0, true}, Z, Vec::Zero(1), Mat::Zero(2, 1),
                                Variant::structured, Mat(Mat::Identity(2, 2))),
                  InvalidDataError);
}

TEST_CASE("surrogate json round trip and version check") {
  std::mt19937_64 rng(16);
  const Mat X = uniform(rng, 2, 4, -1, 1);
  const Mat Q = Mat::Identity(2, 2) * 2.0;
  const Surrogate s = fit_surrogate(KernelSpec{"wendland_c4", 2, 0.7, true}, X, Vec::Constant(4, 2.0),
                                    uniform(rng, 2, 4, -1, 1), Variant::structured, Q);
  const Surrogate r = surrogate_from_json(surrogate_to_json(s));
  CHECK(r.variant() == Variant::structured);
  CHECK(r.centers() == s.centers());
  CHECK(r.coefficients().stacked() == s.coefficients().stacked());
  for (int t = 0; t < 10; ++t) {
    const Vec x = uniform(rng, 2);
    CHECK(eval(r, x) == eval(s, x));
  }
  std::string text = surrogate_to_json(s);
  const auto pos = text.find("hvf.surrogate/1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 15, "hvf.surrogate/9");
  CHECK_THROWS_AS(surrogate_from_json(text), FormatError);
  CHECK_THROWS_AS(surrogate_from_json("{"), FormatError);
}

TEST_CASE("matvec cost grows linearly with the dimension") {
  std::mt19937_64 rng(17);
  auto time_for = [&](Index N) {
    const Kernel k(KernelSpec{"wendland_c4", N, 1.0 / std::sqrt(static_cast<double>(N)), false});
    const Mat X = uniform(rng, N, 200, -0.05, 0.05);
    const Vec c = uniform(rng, 200 * (N + 1));
    double best = 1e300;
    for (int rep = 0; rep < 5; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      const Vec y = matvec_M(k, X, c);
      const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      CHECK(std::isfinite(y.sum()));
      best = std::min(best, dt);
    }
    return best;
  };
  const double ratio = time_for(200) / time_for(100);
  CHECK(ratio >= 1.5);
  CHECK(ratio <= 3.0);
}
