#pragma once

#include "hvf/models.hpp"
#include "hvf/numerics.hpp"

#include <string>
#include <vector>

namespace hvf {

/// t = tau / (1 - tau), mapping [0, 1) onto [0, inf).
double time_transform(double tau);
double time_transform_derivative(double tau);
double inverse_time_transform(double t);

/// State/costate/value boundary value problem on [0, 1 - delta_tau] for the
/// time-transformed infinite-horizon optimality system.
struct TransformedBvp {
  const ControlAffineModel* model = nullptr;
  Vec x0;
  double delta_tau = 1e-3;
  std::vector<double> mesh;

  double tau_end() const { return 1.0 - delta_tau; }
  Index stacked_dim() const { return 2 * model->state_dim() + 1; }
};

/// Phi'(tau) * pmp_rhs(model, z)
Vec transformed_rhs(const TransformedBvp& bvp, double tau, const Vec& z);

/// [x_start - x0; (p, v) of z_end + dtau Phi'(1 - dtau) F(z_end)]: the initial
/// condition and the transversality conditions at tau = 1, reached by one
/// explicit Euler step from the truncated end point.
Vec boundary_residual(const TransformedBvp& bvp, const Vec& z_start, const Vec& z_end);

/// Mesh on [0, tau_end]: cosine clustered near 0, geometrically graded towards
/// tau_end.
std::vector<double> default_mesh(double tau_end, Index nodes);

struct BvpOptions {
  double newton_tol = 1e-10;
  int max_newton = 40;
  /// Halvings of the Newton step in the backtracking line search.
  int max_halvings = 20;
  /// Bound on the relative residual of the collocation polynomial between
  /// nodes; intervals above it are split.
  double collocation_tol = 1e-7;
  int max_refinements = 25;
  Index max_nodes = 20000;
};

/// Collocation solution: nodal values and tau-derivatives, with the C1 cubic
/// collocation polynomial as continuous extension.
struct BvpSolution {
  std::vector<double> mesh;
  Mat z;   // (2N+1) x nodes
  Mat dz;  // tau-derivatives at the nodes
  int newton_iterations = 0;
  int refinements = 0;
  double collocation_residual = 0.0;  // max relative residual between nodes
  double boundary_residual = 0.0;
  std::vector<double> newton_history;

  Vec at(double tau) const;
  Index nodes() const { return static_cast<Index>(mesh.size()); }
};

class BvpError : public NumericsError {
 public:
  BvpError(const std::string& what, std::vector<double> history)
      : NumericsError(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

/// Hermite-Simpson (Lobatto IIIA, order 4) collocation solved by damped
/// Newton with a banded finite-difference Jacobian, followed by residual-driven
/// mesh refinement. `guess` holds one column per mesh node of `bvp`.
BvpSolution solve_pmp(const TransformedBvp& bvp, const Mat& guess, const BvpOptions& options = {});

/// Closed loop of the quadratic value model x^T Q x, simulated in time and
/// sampled at t = Phi(tau) for every mesh node; p = 2 Q x and v = x^T Q x.
Mat initial_guess(const ControlAffineModel& model, const Mat& Q, const Vec& x0,
                  const std::vector<double>& mesh);

/// Optimal trajectory in the time domain. Costates double as value gradients.
struct Trajectory {
  std::vector<double> times;
  Mat states;    // N x K
  Mat costates;  // N x K
  Vec values;    // K

  Index size() const { return static_cast<Index>(times.size()); }
  Vec initial_state() const { return states.col(0); }
};

/// Maps a collocation solution to time, dropping t > horizon (the horizon
/// itself is included by interpolation) and keeping at most max_samples nodes.
Trajectory to_trajectory(const BvpSolution& solution, double horizon, Index max_samples);

struct OpenLoopConfig {
  double delta_tau = 1e-3;
  Index mesh_nodes = 200;
  BvpOptions bvp;
  double horizon = 99.0;
  /// Reuse a stored solution as guess when its initial state is this close.
  double warm_radius = 0.0;
  /// Homotopy steps in the initial state when the direct solve fails.
  int continuation_steps = 4;
};

struct OpenLoopResult {
  BvpSolution solution;
  /// "riccati", "warm" or "continuation".
  std::string guess_source;
};

/// solve_pmp with the quadratic closed-loop guess, warm starts from nearby
/// solutions, and continuation in the initial state as a fallback.
class OpenLoopSolver {
 public:
  OpenLoopSolver(ModelPtr model, Mat Q, OpenLoopConfig config);

  OpenLoopResult solve(const Vec& x0) const;
  /// Solve from a given previous solution (shifted to the new initial state).
  OpenLoopResult solve_from(const Vec& x0, const BvpSolution& previous) const;

  const OpenLoopConfig& config() const { return config_; }
  const ControlAffineModel& model() const { return *model_; }
  const Mat& Q() const { return Q_; }

 private:
  OpenLoopResult solve_direct(const Vec& x0) const;

  ModelPtr model_;
  Mat Q_;
  OpenLoopConfig config_;
};

}  // namespace hvf
