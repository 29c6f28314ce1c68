#include "common.hpp"
#include "doctest.h"

#include <cmath>

using namespace hvf;
using namespace testutil;

namespace {

TransformedBvp make_bvp(const ControlAffineModel& m, const Vec& x0, double dtau, Index nodes) {
  TransformedBvp b;
  b.model = &m;
  b.x0 = x0;
  b.delta_tau = dtau;
  b.mesh = default_mesh(b.tau_end(), nodes);
  return b;
}

Mat lqr_q(const ControlAffineModel& m) {
  const auto L = m.linearization();
  return solve_are(L.A, L.B, L.cost, m.control_weight()).Q;
}

}  // namespace

TEST_CASE("time transform") {
  CHECK(time_transform(0.0) == 0.0);
  CHECK(time_transform(0.5) == doctest::Approx(1.0));
  CHECK(time_transform_derivative(0.5) == doctest::Approx(4.0));
  for (double t : {0.0, 0.3, 1.0, 99.0, 1e5}) CHECK(time_transform(inverse_time_transform(t)) == doctest::Approx(t));
  CHECK(inverse_time_transform(1.0) == doctest::Approx(0.5));
}

TEST_CASE("transformed rhs") {
  const AmpModel amp(AmpParameters{});
  const auto b = make_bvp(amp, Vec::Ones(2) * 0.3, 1e-3, 20);
  for (double tau : {0.0, 0.4, 0.99}) CHECK(transformed_rhs(b, tau, Vec::Zero(5)).norm() == 0.0);
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const Vec z = uniform(rng, 5);
    const double tau = uniform(rng, 1, 0.0, 0.99)(0);
    const Vec ref = time_transform_derivative(tau) * pmp_rhs(amp, z);
    CHECK((transformed_rhs(b, tau, z) - ref).norm() <= 1e-14 * ref.norm());
  }
}

TEST_CASE("boundary residual") {
  const auto m = scalar_lqr();
  const Vec x0 = Vec::Constant(1, 0.8);
  auto b = make_bvp(*m, x0, 1e-2, 20);
  CHECK(boundary_residual(b, Vec::Zero(3), Vec::Zero(3)).norm() == doctest::Approx(0.8));

  auto b0 = make_bvp(*m, Vec::Zero(1), 1e-2, 20);
  CHECK(boundary_residual(b0, Vec::Zero(3), Vec::Zero(3)).norm() == 0.0);

  // constructed root: the Euler step from z_end lands on p = v = 0
  const double c = b.delta_tau * time_transform_derivative(b.tau_end());
  Vec zs = Vec::Zero(3), ze = Vec::Zero(3);
  zs(0) = 0.8;
  ze(0) = 0.5;
  // F = (-p/2, -2x, -x^2 - p^2/4); solve e + c F(e) = 0 in (p, v) for fixed x
  ze(1) = 2.0 * c * ze(0);
  ze(2) = c * (ze(0) * ze(0) + ze(1) * ze(1) / 4.0);
  const Vec r0 = boundary_residual(b, zs, ze);
  CHECK(std::abs(r0(0)) == 0.0);
  CHECK(std::abs(r0(1)) <= 1e-12);
  CHECK(std::abs(r0(2)) <= 1e-12);

  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    const Vec a = uniform(rng, 3), e = uniform(rng, 3);
    const Vec r = boundary_residual(b, a, e);
    const Vec F = pmp_rhs(*m, e);
    CHECK(r(0) == doctest::Approx(a(0) - 0.8));
    CHECK(r(1) == doctest::Approx(e(1) + c * F(1)));
    CHECK(r(2) == doctest::Approx(e(2) + c * F(2)));
  }
}

TEST_CASE("equilibrium solve") {
  const AmpModel amp(AmpParameters{});
  const auto b = make_bvp(amp, Vec::Zero(2), 1e-3, 30);
  const Mat guess = initial_guess(amp, local_quadratic(amp), Vec::Zero(2), b.mesh);
  CHECK(guess.norm() == 0.0);
  const auto s = solve_pmp(b, guess);
  CHECK(s.newton_iterations <= 1);
  CHECK(s.z.norm() == 0.0);
}

TEST_CASE("scalar LQR open loop matches the Riccati closed form") {
  const auto m = scalar_lqr();
  const Mat Q = lqr_q(*m);
  CHECK(Q(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
  const Vec x0 = Vec::Ones(1);
  const auto b = make_bvp(*m, x0, 1e-3, 100);
  const Mat guess = initial_guess(*m, Q, x0, b.mesh);
  CHECK(guess(0, 0) == 1.0);
  const auto s = solve_pmp(b, guess);
  // each Newton pass (initial mesh, then every refinement) ends on a converged entry
  int pass = 0, worst = 0;
  for (const double h : s.newton_history) {
    if (h <= BvpOptions{}.newton_tol) {
      worst = std::max(worst, pass);
      pass = 0;
    } else {
      ++pass;
    }
  }
  CHECK(worst <= 2);
  CHECK(s.newton_iterations <= 2 * (s.refinements + 1));
  const Trajectory tr = to_trajectory(s, 5.0, 0);
  double dev = 0.0;
  for (Index k = 0; k < tr.size(); ++k) {
    const double t = tr.times[static_cast<std::size_t>(k)];
    const double x = std::exp(-t);
    dev = std::max({dev, std::abs(tr.states(0, k) - x), std::abs(tr.costates(0, k) - 2 * x),
                    std::abs(tr.values(k) - x * x)});
  }
  CHECK(dev <= 1e-6);
}

TEST_CASE("planar LQR open loop matches the Riccati closed form") {
  const auto m = planar_lqr();
  const Mat Q = lqr_q(*m);
  const auto L = m->linearization();
  const Mat Acl = L.A - L.B * m->control_weight_inverse() * L.B.transpose() * Q;
  const Vec x0 = (Vec(2) << 0.6, -0.4).finished();
  const auto b = make_bvp(*m, x0, 1e-3, 100);
  const auto s = solve_pmp(b, initial_guess(*m, Q, x0, b.mesh));
  const Trajectory tr = to_trajectory(s, 5.0, 0);
  const auto ref = integrate_ivp([&](double, const Vec& x) { return Vec(Acl * x); }, x0, 0.0, 5.0,
                                 IvpOptions{1e-12, 1e-14, 0.0, 0.0, 5'000'000, true, {}});
  double dev = 0.0;
  for (Index k = 0; k < tr.size(); ++k) {
    const Vec x = ref.at(tr.times[static_cast<std::size_t>(k)]);
    dev = std::max({dev, (tr.states.col(k) - x).cwiseAbs().maxCoeff(),
                    (tr.costates.col(k) - 2 * Q * x).cwiseAbs().maxCoeff(),
                    std::abs(tr.values(k) - x.dot(Q * x))});
  }
  CHECK(dev <= 1e-6);
}

TEST_CASE("AMP open loop recovers the analytic value") {
  AmpParameters P;
  const auto amp = std::make_shared<AmpModel>(P);
  const Mat Q = local_quadratic(*amp);
  OpenLoopConfig cfg;
  cfg.delta_tau = 1e-7;
  const OpenLoopSolver solver(amp, Q, cfg);
  const Vec x0 = (Vec(2) << 0.7, -0.3).finished();
  const auto r = solver.solve(x0);
  const Trajectory tr = to_trajectory(r.solution, 99.0, 0);
  CHECK(tr.values(0) == doctest::Approx(amp_true_value(P, x0)).epsilon(1e-5));
  CHECK(tr.values(0) == r.solution.z(4, 0));

  // all retained times <= T and increasing; v nonincreasing and nonnegative
  for (Index k = 0; k < tr.size(); ++k) {
    CHECK(tr.times[static_cast<std::size_t>(k)] <= 99.0 + 1e-12);
    CHECK(tr.values(k) >= 0.0);
    CHECK(std::abs(hjb_residual(*amp, tr.states.col(k), tr.costates.col(k))) <=
          1e-6 * (1.0 + amp->running_cost(tr.states.col(k))));
    if (k > 0) {
      CHECK(tr.times[static_cast<std::size_t>(k)] > tr.times[static_cast<std::size_t>(k - 1)]);
      CHECK(tr.values(k) <= tr.values(k - 1) + 1e-12);
    }
    const Vec x = tr.states.col(k);
    CHECK(std::abs(tr.values(k) - amp_true_value(P, x)) <= 1e-5 * amp_true_value(P, x));
    CHECK((tr.costates.col(k) - amp_true_gradient(P, x)).norm() <= 1e-5 * amp_true_gradient(P, x).norm());
  }
  CHECK(std::abs(tr.times.back() - 99.0) < 1e-9);

  // boundary conditions hold at the Newton tolerance
  const double scale = 1.0 + r.solution.z.cwiseAbs().maxCoeff();
  CHECK(r.solution.boundary_residual <= 10 * cfg.bvp.newton_tol * scale);

  // the initial guess starts at x0
  TransformedBvp b;
  b.model = amp.get();
  b.x0 = x0;
  b.delta_tau = cfg.delta_tau;
  b.mesh = default_mesh(b.tau_end(), 50);
  const Mat g = initial_guess(*amp, Q, x0, b.mesh);
  CHECK((g.col(0).head(2) - x0).norm() == 0.0);
  CHECK(boundary_residual(b, g.col(0), g.col(g.cols() - 1)).head(2).norm() == 0.0);
}

TEST_CASE("self-convergence under mesh doubling and Bellman consistency") {
  AmpParameters P;
  const auto amp = std::make_shared<AmpModel>(P);
  const Mat Q = local_quadratic(*amp);
  const Vec x0 = (Vec(2) << -0.4, 0.5).finished();
  OpenLoopConfig c1;
  c1.delta_tau = 1e-7;
  c1.mesh_nodes = 100;
  OpenLoopConfig c2 = c1;
  c2.mesh_nodes = 200;
  const auto s1 = OpenLoopSolver(amp, Q, c1).solve(x0).solution;
  const auto s2 = OpenLoopSolver(amp, Q, c2).solve(x0).solution;
  const double v1 = s1.z(4, 0), v2 = s2.z(4, 0);
  CHECK(std::abs(v1 - v2) <= c1.bvp.collocation_tol * 10 * v2);

  // v(0) = int_0^t (r + u^T R u) ds + v(t), by composite Simpson in tau
  const double tau_t = inverse_time_transform(5.0);
  const int K = 20000;
  double integral = 0.0;
  for (int k = 0; k <= K; ++k) {
    const double tau = tau_t * k / K;
    const Vec z = s2.at(tau);
    const Vec x = z.head(2), p = z.segment(2, 2);
    const double w = (k == 0 || k == K) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    integral += w * stage_cost(*amp, x, optimal_control(*amp, x, p)) * time_transform_derivative(tau);
  }
  integral *= tau_t / K / 3.0;
  CHECK(std::abs(v2 - (integral + s2.at(tau_t)(4))) <= 1e-6 * v2);
}

TEST_CASE("warm start and continuation sources") {
  const auto m = planar_lqr();
  const Mat Q = lqr_q(*m);
  OpenLoopConfig cfg;
  const OpenLoopSolver solver(m, Q, cfg);
  const auto a = solver.solve((Vec(2) << 0.5, 0.5).finished());
  CHECK(a.guess_source == "riccati");
  const auto w = solver.solve_from((Vec(2) << 0.52, 0.49).finished(), a.solution);
  CHECK(w.guess_source == "warm");
  CHECK(w.solution.z(0, 0) == doctest::Approx(0.52));
}

TEST_CASE("invalid inputs") {
  const auto m = scalar_lqr();
  auto b = make_bvp(*m, Vec::Ones(1), 1e-3, 10);
  CHECK_THROWS_AS(solve_pmp(b, Mat::Zero(3, 5)), std::invalid_argument);
  CHECK_THROWS_AS(default_mesh(0.999, 3), std::invalid_argument);
  b.mesh = {0.0, 0.5, 0.4, 0.999};
  CHECK_THROWS_AS(solve_pmp(b, Mat::Zero(3, 4)), std::invalid_argument);
}
