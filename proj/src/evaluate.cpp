#include "hvf/evaluate.hpp"

#include "hvf/riccati.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace hvf {

void parallel_for(Index n, int threads, const std::function<void(Index)>& fn) {
  const int workers = static_cast<int>(std::min<Index>(std::max(threads, 1), n));
  if (workers <= 1) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (Index i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

Vec ClosedLoopRun::state_at(double t) const {
  const Vec z = path.at(t);
  return z.head(z.size() - 1);
}

ClosedLoopRun simulate_feedback(const ControlAffineModel& model, const GradientField& grad, const Vec& x0,
                                const SimulationOptions& o) {
  const Index n = model.state_dim();
  if (x0.size() != n) throw std::invalid_argument("simulate_feedback: x0 has wrong dimension");
  const double bound = o.blowup * (1.0 + x0.norm());
  auto rhs = [&](double, const Vec& z) -> Vec {
    const Vec x = z.head(n);
    const Vec u = optimal_control(model, x, grad(x));
    Vec dz(n + 1);
    dz.head(n) = model.drift(x) + model.input_apply(x, u);
    dz(n) = stage_cost(model, x, u);
    return dz;
  };
  IvpOptions io;
  io.rel_tol = o.rel_tol;
  io.abs_tol = o.abs_tol;
  io.stop = [&](double, const Vec& z) { return z.head(n).norm() > bound; };
  Vec z0(n + 1);
  z0.head(n) = x0;
  z0(n) = 0.0;

  ClosedLoopRun run;
  try {
    run.path = integrate_ivp(rhs, z0, 0.0, o.horizon, io);
    if (run.path.stopped_early) {
      run.unstable = true;
      run.message = "state norm exceeded the blow-up bound";
    }
  } catch (const IvpError& e) {
    run.path = e.partial();
    run.unstable = true;
    run.message = e.what();
  }
  const Index K = static_cast<Index>(run.path.times.size());
  run.times = run.path.times;
  run.states.resize(n, K);
  run.controls.resize(model.control_dim(), K);
  run.cost.resize(K);
  for (Index k = 0; k < K; ++k) {
    const Vec& z = run.path.states[static_cast<std::size_t>(k)];
    run.states.col(k) = z.head(n);
    run.controls.col(k) = optimal_control(model, z.head(n), grad(z.head(n)));
    run.cost(k) = z(n);
  }
  return run;
}

ClosedLoopRun simulate_feedback(const ControlAffineModel& model, const Surrogate& s, const Vec& x0,
                                const SimulationOptions& o) {
  return simulate_feedback(model, [&s](const Vec& x) { return s.gradient(x); }, x0, o);
}

ClosedLoopRun simulate_quadratic(const ControlAffineModel& model, const Mat& Q, const Vec& x0,
                                 const SimulationOptions& o) {
  return simulate_feedback(model, [&Q](const Vec& x) { return quadratic_gradient(Q, x); }, x0, o);
}

double relative_l2(const Trajectory& reference, const ClosedLoopRun& run) {
  double num = 0.0, den = 0.0;
  for (Index k = 0; k < reference.size(); ++k) {
    const Vec xr = reference.states.col(k);
    num += (xr - run.state_at(reference.times[static_cast<std::size_t>(k)])).squaredNorm();
    den += xr.squaredNorm();
  }
  if (!(den > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(num / den);
}

double mrl2_error(const std::vector<Trajectory>& reference, const std::vector<ClosedLoopRun>& runs) {
  if (reference.size() != runs.size()) throw std::invalid_argument("mrl2_error: size mismatch");
  double sum = 0.0;
  Index count = 0;
  for (std::size_t j = 0; j < reference.size(); ++j) {
    const double r = relative_l2(reference[j], runs[j]);
    if (std::isnan(r)) continue;
    sum += r;
    ++count;
  }
  return count ? sum / static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN();
}

std::vector<ClosedLoopRun> run_test_set(const ControlAffineModel& model, const GradientField& grad,
                                        const std::vector<Trajectory>& reference,
                                        const SimulationOptions& o, int threads) {
  std::vector<ClosedLoopRun> runs(reference.size());
  parallel_for(static_cast<Index>(reference.size()), threads, [&](Index j) {
    runs[static_cast<std::size_t>(j)] =
        simulate_feedback(model, grad, reference[static_cast<std::size_t>(j)].initial_state(), o);
  });
  return runs;
}

std::string to_string(CvMetric m) { return m == CvMetric::mrl2 ? "mrl2" : "residual"; }

CvMetric cv_metric_from_string(const std::string& name) {
  if (name == "mrl2") return CvMetric::mrl2;
  if (name == "residual") return CvMetric::residual;
  throw std::invalid_argument("unknown cross-validation metric '" + name + "'");
}

std::vector<std::vector<Index>> make_folds(Index count, Index folds, std::uint64_t seed) {
  if (folds < 1 || count < folds) throw std::invalid_argument("make_folds: need at least one trajectory per fold");
  std::vector<Index> order(static_cast<std::size_t>(count));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(folds));
  for (std::size_t i = 0; i < order.size(); ++i) out[i % static_cast<std::size_t>(folds)].push_back(order[i]);
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

std::vector<double> default_gamma_grid(const Dataset& data, Index count) {
  const SampleSet s = data.flatten(true);
  double diam = 0.0;
  // Bounding-box diagonal as a cheap diameter proxy.
  if (s.size() > 0) diam = (s.points.rowwise().maxCoeff() - s.points.rowwise().minCoeff()).norm();
  if (!(diam > 0.0)) diam = 1.0;
  std::vector<double> g;
  for (Index k = 0; k < count; ++k) {
    const double e = count == 1 ? -1.0 : -3.0 + 4.0 * static_cast<double>(k) / static_cast<double>(count - 1);
    g.push_back(std::pow(10.0, e) / diam);
  }
  return g;
}

CvReport cross_validate(const Dataset& data, const ControlAffineModel& model, Variant variant,
                        const std::optional<Mat>& Q, const CvOptions& o) {
  if (o.gammas.empty()) throw std::invalid_argument("cross_validate: empty gamma grid");
  const Index T = static_cast<Index>(data.trajectories.size());
  if (T < o.folds) throw std::invalid_argument("cross_validate: fewer trajectories than folds");

  CvReport rep;
  rep.gammas = o.gammas;
  rep.metric = to_string(o.metric);
  rep.variant = to_string(variant);
  rep.folds = make_folds(T, o.folds, o.seed);
  const Index G = static_cast<Index>(o.gammas.size());
  rep.scores.assign(static_cast<std::size_t>(G), std::vector<double>(static_cast<std::size_t>(o.folds), 0.0));

  parallel_for(G * o.folds, o.threads, [&](Index cell) {
    const Index g = cell / o.folds, f = cell % o.folds;
    std::vector<Index> train;
    for (Index k = 0; k < o.folds; ++k) {
      if (k == f) continue;
      const auto& fk = rep.folds[static_cast<std::size_t>(k)];
      train.insert(train.end(), fk.begin(), fk.end());
    }
    std::sort(train.begin(), train.end());
    double score = std::numeric_limits<double>::quiet_NaN();
    try {
      const SampleSet ts = data.flatten(train, true);
      KernelSpec spec{"wendland_c4", model.state_dim(), o.gammas[static_cast<std::size_t>(g)],
                      variant == Variant::structured};
      const VkogaResult vr = run_vkoga(ts, spec, variant, Q, o.vkoga);
      const auto& held = rep.folds[static_cast<std::size_t>(f)];
      if (o.metric == CvMetric::mrl2) {
        std::vector<Trajectory> ref;
        for (const Index h : held) ref.push_back(data.trajectories[static_cast<std::size_t>(h)]);
        const Surrogate& s = vr.surrogate;
        const auto runs = run_test_set(model, [&s](const Vec& x) { return s.gradient(x); }, ref, o.simulation, 1);
        score = mrl2_error(ref, runs);
      } else {
        const SampleSet hs = data.flatten(held, false);
        double sum = 0.0;
        for (Index k = 0; k < hs.size(); ++k) {
          sum += residual(vr.surrogate, hs.points.col(k), hs.values(k), hs.gradients.col(k));
        }
        score = hs.size() ? sum / static_cast<double>(hs.size()) : 0.0;
      }
    } catch (const std::exception&) {
      score = std::numeric_limits<double>::quiet_NaN();
    }
    if (!std::isfinite(score)) score = std::numeric_limits<double>::quiet_NaN();
    rep.scores[static_cast<std::size_t>(g)][static_cast<std::size_t>(f)] = score;
  });

  double best = std::numeric_limits<double>::infinity();
  Index best_g = -1;
  for (Index g = 0; g < G; ++g) {
    const auto& row = rep.scores[static_cast<std::size_t>(g)];
    const bool ok = std::none_of(row.begin(), row.end(), [](double v) { return std::isnan(v); });
    const double m = ok ? std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size())
                        : std::numeric_limits<double>::quiet_NaN();
    rep.valid.push_back(ok ? 1 : 0);
    rep.mean.push_back(m);
    if (ok && m < best) {
      best = m;
      best_g = g;
    }
  }
  if (best_g < 0) throw std::runtime_error("cross_validate: every gamma was disqualified by failed folds");
  rep.selected_gamma = o.gammas[static_cast<std::size_t>(best_g)];
  return rep;
}

std::vector<CurveRow> report_curves(const ControlAffineModel& model,
                                    const std::vector<std::pair<Index, Surrogate>>& plain,
                                    const std::vector<std::pair<Index, Surrogate>>& structured, const Mat& Q,
                                    const std::vector<Trajectory>& test, const SimulationOptions& o,
                                    int threads) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double baseline =
      mrl2_error(test, run_test_set(model, [&Q](const Vec& x) { return quadratic_gradient(Q, x); }, test, o, threads));
  std::map<Index, CurveRow> rows;
  auto score = [&](const Surrogate& s) {
    return mrl2_error(test, run_test_set(model, [&s](const Vec& x) { return s.gradient(x); }, test, o, threads));
  };
  for (const auto& [n, s] : plain) {
    auto& r = rows.try_emplace(n, CurveRow{n, nan, nan, baseline}).first->second;
    r.mrl2_plain = score(s);
  }
  for (const auto& [n, s] : structured) {
    auto& r = rows.try_emplace(n, CurveRow{n, nan, nan, baseline}).first->second;
    r.mrl2_structured = score(s);
  }
  std::vector<CurveRow> out;
  for (const auto& [n, r] : rows) out.push_back(r);
  return out;
}

std::string curves_csv(const std::vector<CurveRow>& rows) {
  std::ostringstream os;
  os << std::setprecision(10) << "n_centers,mrl2_plain,mrl2_structured,mrl2_quadratic\n";
  for (const auto& r : rows) {
    os << r.centers << ',' << r.mrl2_plain << ',' << r.mrl2_structured << ',' << r.mrl2_quadratic << '\n';
  }
  return os.str();
}

}  // namespace hvf
