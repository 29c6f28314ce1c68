#include "hvf/explore.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace hvf {

CandidateSet box_grid(Index dim, double lo, double hi, Index per_dim) {
  if (dim < 1 || per_dim < 1) throw std::invalid_argument("box_grid: empty grid");
  Index total = 1;
  for (Index k = 0; k < dim; ++k) total *= per_dim;
  CandidateSet c{Mat(dim, total), "box_grid"};
  for (Index j = 0; j < total; ++j) {
    Index r = j;
    for (Index k = 0; k < dim; ++k) {
      const Index i = r % per_dim;
      r /= per_dim;
      c.points(k, j) = per_dim == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(per_dim - 1);
    }
  }
  std::ostringstream os;
  os << "box_grid dim=" << dim << " [" << lo << "," << hi << "] per_dim=" << per_dim;
  c.provenance = os.str();
  return c;
}

namespace {

double radical_inverse(Index i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

int nth_prime(Index k) {
  int p = 1;
  for (Index found = 0; found <= k;) {
    ++p;
    bool prime = true;
    for (int q = 2; q * q <= p; ++q) {
      if (p % q == 0) {
        prime = false;
        break;
      }
    }
    if (prime) ++found;
  }
  return p;
}

}  // namespace

CandidateSet box_halton(Index dim, double lo, double hi, Index count, Index skip) {
  if (dim < 1 || count < 1) throw std::invalid_argument("box_halton: empty set");
  CandidateSet c{Mat(dim, count), ""};
  for (Index k = 0; k < dim; ++k) {
    const int base = nth_prime(k);
    for (Index j = 0; j < count; ++j) c.points(k, j) = lo + (hi - lo) * radical_inverse(j + 1 + skip, base);
  }
  std::ostringstream os;
  os << "box_halton dim=" << dim << " [" << lo << "," << hi << "] count=" << count << " skip=" << skip;
  c.provenance = os.str();
  return c;
}

CandidateSet box_random(Index dim, double lo, double hi, Index count, std::uint64_t seed) {
  if (dim < 1 || count < 1) throw std::invalid_argument("box_random: empty set");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  CandidateSet c{Mat(dim, count), ""};
  for (Index j = 0; j < count; ++j)
    for (Index k = 0; k < dim; ++k) c.points(k, j) = u(rng);
  std::ostringstream os;
  os << "box_random dim=" << dim << " [" << lo << "," << hi << "] count=" << count << " seed=" << seed;
  c.provenance = os.str();
  return c;
}

CandidateSet nhe_family(const NheModel& model, Index amplitudes, double lo, double hi) {
  if (amplitudes < 1) throw std::invalid_argument("nhe_family: need at least one amplitude");
  const Index N = model.state_dim();
  auto amp = [&](Index i) {
    return amplitudes == 1 ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(amplitudes - 1);
  };
  auto sq = [](double s) { return s * s; };
  std::vector<Vec> pts;
  const double pi = std::numbers::pi;
  for (Index ia = 0; ia < amplitudes; ++ia)
    for (Index id = 0; id < amplitudes; ++id)
      for (int b = 1; b <= 2; ++b)
        for (int c = 1; c <= 2; ++c)
          for (int e = 1; e <= 2; ++e)
            for (int f = 1; f <= 2; ++f) {
              const double a = amp(ia), d = amp(id);
              if (a == 0.0 && d == 0.0) continue;
              Vec x(N);
              for (Index k = 0; k < N; ++k) {
                const auto xi = model.node(k);
                x(k) = a * sq(std::sin(b * pi * xi[0])) * sq(std::sin(c * pi * xi[1])) +
                       d * sq(std::sin(e * pi * xi[0] * xi[0])) * sq(std::sin(f * pi * xi[1]));
              }
              pts.push_back(std::move(x));
            }
  CandidateSet cs{Mat(N, static_cast<Index>(pts.size())), ""};
  for (std::size_t j = 0; j < pts.size(); ++j) cs.points.col(static_cast<Index>(j)) = pts[j];
  std::ostringstream os;
  os << "nhe_family amplitudes=" << amplitudes << " [" << lo << "," << hi << "]";
  cs.provenance = os.str();
  return cs;
}

Index Dataset::samples() const {
  Index n = 0;
  for (const auto& t : trajectories) n += t.size();
  return n;
}

SampleSet Dataset::flatten(const std::vector<Index>& which, bool with_origin) const {
  Index dim = 0;
  Index total = with_origin ? 1 : 0;
  for (const Index w : which) {
    const auto& t = trajectories.at(static_cast<std::size_t>(w));
    dim = t.states.rows();
    total += t.size();
  }
  if (dim == 0 && !trajectories.empty()) dim = trajectories.front().states.rows();
  SampleSet s{Mat(dim, total), Vec(total), Mat(dim, total)};
  Index k = 0;
  if (with_origin) {
    s.points.col(0).setZero();
    s.values(0) = 0.0;
    s.gradients.col(0).setZero();
    k = 1;
  }
  for (const Index w : which) {
    const auto& t = trajectories[static_cast<std::size_t>(w)];
    s.points.middleCols(k, t.size()) = t.states;
    s.values.segment(k, t.size()) = t.values;
    s.gradients.middleCols(k, t.size()) = t.costates;
    k += t.size();
  }
  return s;
}

SampleSet Dataset::flatten(bool with_origin) const {
  std::vector<Index> all(trajectories.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Index>(i);
  return flatten(all, with_origin);
}

Index select_initial_state(const Vec& min_dist, const std::vector<char>& excluded) {
  Index best = -1;
  double bd = -1.0;
  for (Index i = 0; i < min_dist.size(); ++i) {
    if (!excluded.empty() && excluded[static_cast<std::size_t>(i)]) continue;
    if (min_dist(i) > bd) {
      bd = min_dist(i);
      best = i;
    }
  }
  return best;
}

Vec cover_distances(const CandidateSet& candidates, const Mat& cloud) {
  Vec d = Vec::Constant(candidates.size(), std::numeric_limits<double>::infinity());
  for (Index j = 0; j < cloud.cols(); ++j) {
    d = d.cwiseMin((candidates.points.colwise() - cloud.col(j)).colwise().squaredNorm().transpose());
  }
  return d.cwiseSqrt();
}

Trajectory thin_trajectory(const Trajectory& tr, Index max_samples, double min_spacing) {
  const Index K = tr.size();
  std::vector<Index> pick;
  if (max_samples > 0 && K > max_samples) {
    std::vector<double> s(static_cast<std::size_t>(K), 0.0);
    for (Index k = 1; k < K; ++k) {
      s[static_cast<std::size_t>(k)] = s[static_cast<std::size_t>(k - 1)] + (tr.states.col(k) - tr.states.col(k - 1)).norm();
    }
    const double L = s.back();
    for (Index j = 0; j < max_samples; ++j) {
      const double target = L * static_cast<double>(j) / static_cast<double>(max_samples - 1);
      auto it = std::lower_bound(s.begin(), s.end(), target);
      Index k = std::min<Index>(static_cast<Index>(it - s.begin()), K - 1);
      if (k > 0 && target - s[static_cast<std::size_t>(k - 1)] < s[static_cast<std::size_t>(k)] - target) --k;
      if (j == max_samples - 1) k = K - 1;
      if (pick.empty() || k > pick.back()) pick.push_back(k);
    }
  } else {
    for (Index k = 0; k < K; ++k) pick.push_back(k);
  }
  std::vector<Index> keep;
  for (const Index k : pick) {
    if (!keep.empty() && (tr.states.col(k) - tr.states.col(keep.back())).norm() < min_spacing) continue;
    keep.push_back(k);
  }
  Trajectory out;
  const Index n = tr.states.rows();
  const Index m = static_cast<Index>(keep.size());
  out.states.resize(n, m);
  out.costates.resize(n, m);
  out.values.resize(m);
  for (Index j = 0; j < m; ++j) {
    const Index k = keep[static_cast<std::size_t>(j)];
    out.times.push_back(tr.times[static_cast<std::size_t>(k)]);
    out.states.col(j) = tr.states.col(k);
    out.costates.col(j) = tr.costates.col(k);
    out.values(j) = tr.values(k);
  }
  return out;
}

double max_hjb_violation(const ControlAffineModel& model, const Trajectory& tr) {
  double worst = 0.0;
  for (Index k = 0; k < tr.size(); ++k) {
    const Vec x = tr.states.col(k);
    const double r = std::abs(hjb_residual(model, x, tr.costates.col(k))) / (1.0 + model.running_cost(x));
    worst = std::max(worst, std::isfinite(r) ? r : std::numeric_limits<double>::infinity());
  }
  return worst;
}

Dataset run_exploration(const OpenLoopSolver& solver, const CandidateSet& candidates, const ExploreOptions& o) {
  if (!(o.eps_tol_d > 0.0)) throw std::invalid_argument("run_exploration: eps_tol_d must be positive");
  if (candidates.size() == 0) throw std::invalid_argument("run_exploration: no candidates");
  const ControlAffineModel& model = solver.model();
  if (candidates.dim() != model.state_dim()) throw std::invalid_argument("run_exploration: candidate dimension mismatch");

  Dataset data;
  data.meta.model = model.name();
  data.meta.eps_tol_d = o.eps_tol_d;
  data.meta.c_max_a = candidates.points.colwise().norm().maxCoeff();

  Vec mind = cover_distances(candidates, Mat::Zero(candidates.dim(), 1));
  std::vector<char> excluded(static_cast<std::size_t>(candidates.size()), 0);
  std::vector<std::pair<Vec, BvpSolution>> solved;
  const double warm = solver.config().warm_radius;

  auto finish = [&]() {
    const Index best = select_initial_state(mind, excluded);
    data.meta.eps_achieved = best >= 0 ? mind(best) : 0.0;
  };

  while (static_cast<Index>(data.trajectories.size()) < o.max_traj) {
    const Index idx = select_initial_state(mind, excluded);
    if (idx < 0) {
      data.meta.complete = false;
      data.meta.failure = "all remaining candidates quarantined";
      finish();
      throw ExplorationError("run_exploration: all remaining candidates quarantined", data);
    }
    const double eps = mind(idx);
    if (eps <= o.eps_tol_d) break;
    const Vec x0 = candidates.points.col(idx);

    std::optional<OpenLoopResult> res;
    try {
      const std::pair<Vec, BvpSolution>* near = nullptr;
      double nd = warm;
      for (const auto& s : solved) {
        const double dd = (s.first - x0).norm();
        if (dd <= nd) {
          nd = dd;
          near = &s;
        }
      }
      res = near ? solver.solve_from(x0, near->second) : solver.solve(x0);
    } catch (const NumericsError&) {
      excluded[static_cast<std::size_t>(idx)] = 1;
      data.meta.quarantined.push_back(idx);
      continue;
    }

    const Trajectory full = to_trajectory(res->solution, solver.config().horizon, 0);
    const Trajectory tr = thin_trajectory(full, o.max_samples, o.min_spacing);
    const double hjb = max_hjb_violation(model, tr);
    if (!(hjb <= o.hjb_tol) || !tr.values.allFinite()) {
      excluded[static_cast<std::size_t>(idx)] = 1;
      data.meta.quarantined.push_back(idx);
      continue;
    }

    data.meta.max_hjb = std::max(data.meta.max_hjb, hjb);
    data.meta.eps_history.push_back(eps);
    data.meta.selected.push_back(idx);
    data.meta.guess_sources.push_back(res->guess_source);
    for (Index k = 0; k < tr.size(); ++k) {
      data.meta.c_max_v = std::max(data.meta.c_max_v, std::abs(tr.values(k)) + tr.costates.col(k).norm());
    }
    mind = mind.cwiseMin(cover_distances(candidates, tr.states));
    excluded[static_cast<std::size_t>(idx)] = 1;  // now at distance 0
    if (warm > 0.0) solved.emplace_back(x0, res->solution);
    data.trajectories.push_back(tr);
    if (o.progress) o.progress(static_cast<Index>(data.trajectories.size()) - 1, data.trajectories.back());
  }
  finish();
  return data;
}

std::vector<Index> geometric_greedy_testset(const CandidateSet& candidates, Index m, const Vec& seed_point) {
  if (m > candidates.size()) throw std::invalid_argument("geometric_greedy_testset: m exceeds candidate count");
  Vec d = cover_distances(candidates, seed_point);
  std::vector<char> taken(static_cast<std::size_t>(candidates.size()), 0);
  std::vector<Index> out;
  for (Index k = 0; k < m; ++k) {
    const Index i = select_initial_state(d, taken);
    out.push_back(i);
    taken[static_cast<std::size_t>(i)] = 1;
    d = d.cwiseMin(cover_distances(candidates, candidates.points.col(i)));
  }
  return out;
}

}  // namespace hvf
