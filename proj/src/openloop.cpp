#include "hvf/openloop.hpp"

#include "hvf/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

namespace hvf {

double time_transform(double tau) { return tau / (1.0 - tau); }

double time_transform_derivative(double tau) {
  const double s = 1.0 - tau;
  return 1.0 / (s * s);
}

double inverse_time_transform(double t) { return t / (1.0 + t); }

Vec transformed_rhs(const TransformedBvp& bvp, double tau, const Vec& z) {
  return time_transform_derivative(tau) * pmp_rhs(*bvp.model, z);
}

Vec boundary_residual(const TransformedBvp& bvp, const Vec& z_start, const Vec& z_end) {
  const Index n = bvp.model->state_dim();
  Vec out(2 * n + 1);
  out.head(n) = z_start.head(n) - bvp.x0;
  const double c = bvp.delta_tau * time_transform_derivative(bvp.tau_end());
  const Vec ext = z_end + c * pmp_rhs(*bvp.model, z_end);
  out.tail(n + 1) = ext.tail(n + 1);
  return out;
}

std::vector<double> default_mesh(double tau_end, Index nodes) {
  if (nodes < 4) throw std::invalid_argument("default_mesh: need at least 4 nodes");
  if (!(tau_end > 0.0 && tau_end < 1.0)) throw std::invalid_argument("default_mesh: tau_end must lie in (0, 1)");
  // Cosine clustering on [0, tau_mid], then geometric grading in 1 - tau
  // down to 1 - tau_end.
  const double tau_mid = std::min(0.9, 0.5 * tau_end + 0.45);
  const Index m2 = nodes / 2;
  const Index m1 = nodes - m2;
  std::vector<double> mesh;
  mesh.reserve(static_cast<std::size_t>(nodes));
  for (Index j = 0; j < m1; ++j) {
    const double s = static_cast<double>(j) / static_cast<double>(m1);
    mesh.push_back(tau_mid * 0.5 * (1.0 - std::cos(std::numbers::pi * s)));
  }
  const double a = std::log(1.0 - tau_mid), b = std::log(1.0 - tau_end);
  for (Index j = 0; j < m2; ++j) {
    const double s = static_cast<double>(j) / static_cast<double>(m2 - 1);
    mesh.push_back(1.0 - std::exp(a + s * (b - a)));
  }
  mesh.back() = tau_end;
  return mesh;
}

namespace {

Vec hermite_cubic(double tau, double t0, double t1, const Vec& z0, const Vec& z1,
                  const Vec& g0, const Vec& g1, Vec* derivative = nullptr) {
  const double h = t1 - t0;
  const double s = (tau - t0) / h;
  const double s2 = s * s, s3 = s2 * s;
  if (derivative) {
    const double d00 = (6 * s2 - 6 * s) / h, d10 = 3 * s2 - 4 * s + 1;
    const double d01 = (-6 * s2 + 6 * s) / h, d11 = 3 * s2 - 2 * s;
    *derivative = d00 * z0 + d10 * g0 + d01 * z1 + d11 * g1;
  }
  return (2 * s3 - 3 * s2 + 1) * z0 + ((s3 - 2 * s2 + s) * h) * g0 + (-2 * s3 + 3 * s2) * z1 +
         ((s3 - s2) * h) * g1;
}

// Collocation system on a fixed mesh. Unknowns are the node values stacked
// node by node.
class Collocation {
 public:
  Collocation(const TransformedBvp& bvp, const std::vector<double>& mesh)
      : bvp_(bvp), model_(*bvp.model), mesh_(mesh), n_(model_.state_dim()),
        d_(2 * n_ + 1), m_(static_cast<Index>(mesh.size())) {}

  Index unknowns() const { return d_ * m_; }
  Index stacked_dim() const { return d_; }

  Vec G(double tau, const Vec& z) const { return time_transform_derivative(tau) * pmp_rhs(model_, z); }

  // Residual; also fills nodal derivatives and midpoints for reuse.
  Vec residual(const Vec& Z, Mat& Gn, Mat& zm, Mat& Gm) const {
    Gn.resize(d_, m_);
    zm.resize(d_, m_ - 1);
    Gm.resize(d_, m_ - 1);
    for (Index j = 0; j < m_; ++j) Gn.col(j) = G(tau(j), Z.segment(j * d_, d_));
    Vec R(unknowns());
    R.head(n_) = Z.head(n_) - bvp_.x0;
    for (Index i = 0; i + 1 < m_; ++i) {
      const double h = tau(i + 1) - tau(i);
      const auto zi = Z.segment(i * d_, d_);
      const auto zj = Z.segment((i + 1) * d_, d_);
      zm.col(i) = 0.5 * (zi + zj) + (h / 8.0) * (Gn.col(i) - Gn.col(i + 1));
      Gm.col(i) = G(0.5 * (tau(i) + tau(i + 1)), zm.col(i));
      R.segment(n_ + i * d_, d_) = zj - zi - (h / 6.0) * (Gn.col(i) + 4.0 * Gm.col(i) + Gn.col(i + 1));
    }
    const Vec zl = Z.tail(d_);
    const double c = bvp_.delta_tau * time_transform_derivative(bvp_.tau_end());
    R.tail(n_ + 1) = zl.tail(n_ + 1) + c * pmp_rhs(model_, zl).tail(n_ + 1);
    return R;
  }

  Vec residual(const Vec& Z) const {
    Mat a, b, c;
    return residual(Z, a, b, c);
  }

  // Central-difference Jacobian of pmp_rhs.
  Mat jacobian_F(const Vec& z) const {
    Mat J(d_, d_);
    Vec zp = z;
    for (Index k = 0; k < d_; ++k) {
      const double h = 6e-6 * (1.0 + std::abs(z(k)));
      zp(k) = z(k) + h;
      const Vec fp = pmp_rhs(model_, zp);
      zp(k) = z(k) - h;
      const Vec fm = pmp_rhs(model_, zp);
      zp(k) = z(k);
      J.col(k) = (fp - fm) / (2.0 * h);
    }
    return J;
  }

  void jacobian(const Vec& Z, const Mat& zm, BandedMatrix& J) const {
    J.set_zero();
    for (Index k = 0; k < n_; ++k) J(k, k) = 1.0;
    const Mat I = Mat::Identity(d_, d_);
    Mat Ji = time_transform_derivative(tau(0)) * jacobian_F(Z.head(d_));
    for (Index i = 0; i + 1 < m_; ++i) {
      const double h = tau(i + 1) - tau(i);
      const Mat Jj = time_transform_derivative(tau(i + 1)) * jacobian_F(Z.segment((i + 1) * d_, d_));
      const Mat Jm = time_transform_derivative(0.5 * (tau(i) + tau(i + 1))) * jacobian_F(zm.col(i));
      const Mat Ai = -I - (h / 6.0) * (Ji + Jm * (2.0 * I + (h / 2.0) * Ji));
      const Mat Aj = I - (h / 6.0) * (Jj + Jm * (2.0 * I - (h / 2.0) * Jj));
      const Index r0 = n_ + i * d_;
      const Index c0 = i * d_;
      for (Index c = 0; c < d_; ++c) {
        for (Index r = 0; r < d_; ++r) {
          J(r0 + r, c0 + c) = Ai(r, c);
          J(r0 + r, c0 + d_ + c) = Aj(r, c);
        }
      }
      Ji = Jj;
    }
    const Index last = (m_ - 1) * d_;
    const double cst = bvp_.delta_tau * time_transform_derivative(bvp_.tau_end());
    const Mat Je = I + cst * jacobian_F(Z.tail(d_));
    const Index r0 = unknowns() - (n_ + 1);
    for (Index c = 0; c < d_; ++c) {
      for (Index r = 0; r <= n_; ++r) J(r0 + r, last + c) = Je(n_ + r, c);
    }
  }

  // Per-row scales for the convergence test.
  Vec scales(const Vec& Z) const {
    Vec comp = Vec::Ones(d_);
    for (Index j = 0; j < m_; ++j) {
      comp = comp.cwiseMax(Z.segment(j * d_, d_).cwiseAbs() + Vec::Ones(d_));
    }
    Vec s(unknowns());
    s.head(n_) = bvp_.x0.cwiseAbs() + Vec::Ones(n_);
    for (Index i = 0; i + 1 < m_; ++i) s.segment(n_ + i * d_, d_) = comp;
    s.tail(n_ + 1) = comp.tail(n_ + 1);
    return s;
  }

  double tau(Index j) const { return mesh_[static_cast<std::size_t>(j)]; }

 private:
  const TransformedBvp& bvp_;
  const ControlAffineModel& model_;
  const std::vector<double>& mesh_;
  Index n_, d_, m_;
};

double scaled_norm(const Vec& R, const Vec& s) {
  if (!R.allFinite()) return std::numeric_limits<double>::infinity();
  return (R.array() / s.array()).abs().maxCoeff();
}

int newton(const Collocation& col, Vec& Z, const BvpOptions& o, std::vector<double>& history) {
  const Index d = col.stacked_dim();
  const Index N = (d - 1) / 2;
  Mat Gn, zm, Gm;
  for (int it = 0;; ++it) {
    const Vec R = col.residual(Z, Gn, zm, Gm);
    const Vec s = col.scales(Z);
    const double norm = scaled_norm(R, s);
    history.push_back(norm);
    if (!std::isfinite(norm)) throw BvpError("solve_pmp: non-finite residual", history);
    if (norm <= o.newton_tol) return it;
    if (it >= o.max_newton) {
      std::ostringstream os;
      os << "solve_pmp: no convergence in " << o.max_newton << " Newton iterations (residual " << norm << ")";
      throw BvpError(os.str(), history);
    }
    BandedMatrix J(col.unknowns(), 3 * N, 3 * N + 1);
    col.jacobian(Z, zm, J);
    Vec step;
    try {
      step = J.solve(-R);
    } catch (const SingularMatrixError& e) {
      throw BvpError(std::string("solve_pmp: singular Newton matrix: ") + e.what(), history);
    }
    double lambda = 1.0;
    bool accepted = false;
    for (int k = 0; k <= o.max_halvings; ++k, lambda *= 0.5) {
      const Vec trial = Z + lambda * step;
      const double tn = scaled_norm(col.residual(trial), s);
      if (tn < norm) {
        Z = trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      std::ostringstream os;
      os << "solve_pmp: Newton step does not reduce the residual (residual " << norm << ")";
      throw BvpError(os.str(), history);
    }
  }
}

}  // namespace

Vec BvpSolution::at(double tau) const {
  if (tau <= mesh.front()) return z.col(0);
  if (tau >= mesh.back()) return z.col(nodes() - 1);
  const auto it = std::upper_bound(mesh.begin(), mesh.end(), tau);
  const Index k = static_cast<Index>(it - mesh.begin()) - 1;
  const auto kk = static_cast<std::size_t>(k);
  return hermite_cubic(tau, mesh[kk], mesh[kk + 1], z.col(k), z.col(k + 1), dz.col(k), dz.col(k + 1));
}

BvpSolution solve_pmp(const TransformedBvp& bvp, const Mat& guess, const BvpOptions& o) {
  if (!bvp.model) throw std::invalid_argument("solve_pmp: no model");
  const Index d = bvp.stacked_dim();
  const Index N = bvp.model->state_dim();
  if (bvp.x0.size() != N) throw std::invalid_argument("solve_pmp: x0 has wrong dimension");
  if (bvp.mesh.size() < 2 || bvp.mesh.front() != 0.0 || std::abs(bvp.mesh.back() - bvp.tau_end()) > 1e-15) {
    throw std::invalid_argument("solve_pmp: mesh must run from 0 to 1 - delta_tau");
  }
  for (std::size_t j = 1; j < bvp.mesh.size(); ++j) {
    if (!(bvp.mesh[j] > bvp.mesh[j - 1])) throw std::invalid_argument("solve_pmp: mesh not increasing");
  }
  if (guess.rows() != d || guess.cols() != static_cast<Index>(bvp.mesh.size())) {
    throw std::invalid_argument("solve_pmp: guess does not match the mesh");
  }

  std::vector<double> mesh = bvp.mesh;
  Vec Z = Eigen::Map<const Vec>(guess.data(), guess.size());
  BvpSolution sol;
  int iterations = 0;

  for (int ref = 0;; ++ref) {
    Collocation col(bvp, mesh);
    iterations += newton(col, Z, o, sol.newton_history);

    const Index m = static_cast<Index>(mesh.size());
    const Mat Zm = Eigen::Map<const Mat>(Z.data(), d, m);
    Mat Gn(d, m);
    for (Index j = 0; j < m; ++j) Gn.col(j) = col.G(mesh[static_cast<std::size_t>(j)], Zm.col(j));

    // Error estimate per interval: h * |S' - G(S)| at the quarter points
    // against a mixed relative/absolute bound.
    Vec floor_k = 1e-9 * (Zm.cwiseAbs().rowwise().maxCoeff() + Vec::Ones(d));
    std::vector<int> split(static_cast<std::size_t>(m - 1), 0);
    double worst = 0.0;
    bool any = false;
    for (Index i = 0; i + 1 < m; ++i) {
      const double t0 = mesh[static_cast<std::size_t>(i)], t1 = mesh[static_cast<std::size_t>(i + 1)];
      const double h = t1 - t0;
      double ratio = 0.0;
      for (const double q : {0.25, 0.75}) {
        const double tq = t0 + q * h;
        Vec dS;
        const Vec S = hermite_cubic(tq, t0, t1, Zm.col(i), Zm.col(i + 1), Gn.col(i), Gn.col(i + 1), &dS);
        const Vec r = dS - col.G(tq, S);
        const Vec bound = S.cwiseAbs() + h * dS.cwiseAbs() + floor_k;
        ratio = std::max(ratio, (h * r.cwiseAbs().array() / bound.array()).maxCoeff());
      }
      if (!std::isfinite(ratio)) throw BvpError("solve_pmp: non-finite collocation residual", sol.newton_history);
      worst = std::max(worst, ratio);
      if (ratio > o.collocation_tol) {
        split[static_cast<std::size_t>(i)] = ratio > 100.0 * o.collocation_tol ? 2 : 1;
        any = true;
      }
    }

    if (!any) {
      sol.mesh = mesh;
      sol.z = Zm;
      sol.dz = Gn;
      sol.newton_iterations = iterations;
      sol.refinements = ref;
      sol.collocation_residual = worst;
      sol.boundary_residual =
          boundary_residual(bvp, Zm.col(0), Zm.col(m - 1)).cwiseAbs().maxCoeff();
      return sol;
    }
    if (ref >= o.max_refinements) {
      std::ostringstream os;
      os << "solve_pmp: collocation residual " << worst << " above tolerance after " << ref << " refinements";
      throw BvpError(os.str(), sol.newton_history);
    }

    std::vector<double> fine;
    std::vector<Vec> values;
    for (Index i = 0; i + 1 < m; ++i) {
      const double t0 = mesh[static_cast<std::size_t>(i)], t1 = mesh[static_cast<std::size_t>(i + 1)];
      fine.push_back(t0);
      values.push_back(Zm.col(i));
      const int parts = split[static_cast<std::size_t>(i)] + 1;
      for (int k = 1; k < parts; ++k) {
        const double tq = t0 + (t1 - t0) * k / parts;
        fine.push_back(tq);
        values.push_back(hermite_cubic(tq, t0, t1, Zm.col(i), Zm.col(i + 1), Gn.col(i), Gn.col(i + 1)));
      }
    }
    fine.push_back(mesh.back());
    values.push_back(Zm.col(m - 1));
    if (static_cast<Index>(fine.size()) > o.max_nodes) {
      throw BvpError("solve_pmp: mesh node budget exhausted", sol.newton_history);
    }
    mesh = std::move(fine);
    Z.resize(d * static_cast<Index>(mesh.size()));
    for (std::size_t j = 0; j < values.size(); ++j) Z.segment(static_cast<Index>(j) * d, d) = values[j];
  }
}

Mat initial_guess(const ControlAffineModel& model, const Mat& Q, const Vec& x0,
                  const std::vector<double>& mesh) {
  const Index n = model.state_dim();
  const Index m = static_cast<Index>(mesh.size());
  Mat guess = Mat::Zero(2 * n + 1, m);
  if (x0.norm() == 0.0) return guess;

  const double t_end = time_transform(mesh.back());
  const double floor = 1e-13 * std::max(1.0, x0.norm());
  IvpOptions opts;
  opts.rel_tol = 1e-8;
  opts.abs_tol = 1e-12;
  opts.stop = [floor](double, const Vec& x) { return x.norm() <= floor; };
  const IvpResult run = integrate_ivp(
      [&](double, const Vec& x) { return feedback_rhs(model, x, quadratic_gradient(Q, x)); }, x0, 0.0,
      t_end, opts);

  for (Index j = 0; j < m; ++j) {
    const double t = time_transform(mesh[static_cast<std::size_t>(j)]);
    const Vec x = (run.stopped_early && t > run.t_end()) ? Vec::Zero(n) : run.at(t);
    guess.col(j).head(n) = x;
    guess.col(j).segment(n, n) = quadratic_gradient(Q, x);
    guess(2 * n, j) = quadratic_value(Q, x);
  }
  guess.col(0).head(n) = x0;
  return guess;
}

Trajectory to_trajectory(const BvpSolution& solution, double horizon, Index max_samples) {
  const Index d = solution.z.rows();
  const Index n = (d - 1) / 2;
  std::vector<double> taus;
  const double tau_h = inverse_time_transform(horizon);
  for (const double tau : solution.mesh) {
    if (tau < tau_h) taus.push_back(tau);
  }
  if (tau_h <= solution.mesh.back() && (taus.empty() || taus.back() < tau_h)) taus.push_back(tau_h);

  std::vector<std::size_t> keep;
  const std::size_t K = taus.size();
  if (max_samples > 0 && static_cast<Index>(K) > max_samples) {
    for (Index k = 0; k < max_samples; ++k) {
      const std::size_t idx = static_cast<std::size_t>(
          std::llround(static_cast<double>(k) * static_cast<double>(K - 1) / static_cast<double>(max_samples - 1)));
      if (keep.empty() || idx > keep.back()) keep.push_back(idx);
    }
  } else {
    for (std::size_t k = 0; k < K; ++k) keep.push_back(k);
  }

  Trajectory tr;
  const Index cnt = static_cast<Index>(keep.size());
  tr.states.resize(n, cnt);
  tr.costates.resize(n, cnt);
  tr.values.resize(cnt);
  for (Index k = 0; k < cnt; ++k) {
    const double tau = taus[keep[static_cast<std::size_t>(k)]];
    const Vec z = solution.at(tau);
    tr.times.push_back(time_transform(tau));
    tr.states.col(k) = z.head(n);
    tr.costates.col(k) = z.segment(n, n);
    tr.values(k) = std::max(0.0, z(2 * n));  // roundoff far out on the tail
  }
  return tr;
}

OpenLoopSolver::OpenLoopSolver(ModelPtr model, Mat Q, OpenLoopConfig config)
    : model_(std::move(model)), Q_(std::move(Q)), config_(std::move(config)) {
  if (!model_) throw std::invalid_argument("OpenLoopSolver: no model");
  if (!(config_.delta_tau > 0.0 && config_.delta_tau < 1.0)) {
    throw std::invalid_argument("OpenLoopSolver: delta_tau must lie in (0, 1)");
  }
}

OpenLoopResult OpenLoopSolver::solve_direct(const Vec& x0) const {
  TransformedBvp bvp{model_.get(), x0, config_.delta_tau,
                     default_mesh(1.0 - config_.delta_tau, config_.mesh_nodes)};
  const Mat guess = initial_guess(*model_, Q_, x0, bvp.mesh);
  return {solve_pmp(bvp, guess, config_.bvp), "riccati"};
}

namespace {

// Previous solution moved to a new initial state: the state offset is
// faded out in proportion to the decay of the previous trajectory.
Mat shifted_guess(const BvpSolution& prev, const Vec& x0) {
  const Index n = x0.size();
  Mat g = prev.z;
  const Vec offset = x0 - prev.z.col(0).head(n);
  const double n0 = prev.z.col(0).head(n).norm();
  const double tau_end = prev.mesh.back();
  for (Index j = 0; j < g.cols(); ++j) {
    const double w = n0 > 0.0 ? prev.z.col(j).head(n).norm() / n0
                              : 1.0 - prev.mesh[static_cast<std::size_t>(j)] / tau_end;
    g.col(j).head(n) += w * offset;
  }
  g.col(0).head(n) = x0;
  return g;
}

}  // namespace

OpenLoopResult OpenLoopSolver::solve_from(const Vec& x0, const BvpSolution& previous) const {
  TransformedBvp bvp{model_.get(), x0, config_.delta_tau, previous.mesh};
  try {
    return {solve_pmp(bvp, shifted_guess(previous, x0), config_.bvp), "warm"};
  } catch (const BvpError&) {
    return solve(x0);
  }
}

OpenLoopResult OpenLoopSolver::solve(const Vec& x0) const {
  if (x0.size() != model_->state_dim()) throw std::invalid_argument("OpenLoopSolver: x0 has wrong dimension");
  try {
    return solve_direct(x0);
  } catch (const NumericsError& direct) {
    if (config_.continuation_steps < 2) throw;
    // Continuation along lambda x0; the first step starts from the quadratic
    // guess, later ones from the previous solution.
    std::optional<BvpSolution> prev;
    for (int k = 1; k <= config_.continuation_steps; ++k) {
      const Vec xk = (static_cast<double>(k) / config_.continuation_steps) * x0;
      if (!prev) {
        prev = solve_direct(xk).solution;
      } else {
        TransformedBvp bvp{model_.get(), xk, config_.delta_tau, prev->mesh};
        prev = solve_pmp(bvp, shifted_guess(*prev, xk), config_.bvp);
      }
    }
    return {*prev, "continuation"};
  }
}

}  // namespace hvf
