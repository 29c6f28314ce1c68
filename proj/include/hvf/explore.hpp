#pragma once

#include "hvf/models.hpp"
#include "hvf/openloop.hpp"
#include "hvf/vkoga.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace hvf {

/// Finite discretisation of the initial-state set, one state per column.
struct CandidateSet {
  Mat points;
  std::string provenance;

  Index size() const { return points.cols(); }
  Index dim() const { return points.rows(); }
};

/// Tensor grid with `per_dim` points per axis on [lo, hi]^N.
CandidateSet box_grid(Index dim, double lo, double hi, Index per_dim);
/// Halton points (bases 2, 3, 5, ...) on [lo, hi]^N, skipping the first
/// `skip` points of the sequence.
CandidateSet box_halton(Index dim, double lo, double hi, Index count, Index skip = 0);
/// Uniform random points on [lo, hi]^N.
CandidateSet box_random(Index dim, double lo, double hi, Index count, std::uint64_t seed);
/// a sin^2(b pi xi1) sin^2(c pi xi2) + d sin^2(e pi xi1^2) sin^2(f pi xi2) on the
/// grid nodes, with a, d on a uniform grid of `amplitudes` values in [lo, hi]
/// and b, c, e, f in {1, 2}. The zero state is left out.
CandidateSet nhe_family(const NheModel& model, Index amplitudes, double lo = -0.25, double hi = 0.5);

struct DatasetMeta {
  std::string model;
  double eps_tol_d = 0.0;
  /// Cover distance of the candidates when exploration ended.
  double eps_achieved = 0.0;
  /// max ||x|| over the candidates and max |v| + ||grad v|| over the samples.
  double c_max_a = 0.0;
  double c_max_v = 0.0;
  double max_hjb = 0.0;
  /// Cover distance at each selection, in order.
  std::vector<double> eps_history;
  std::vector<Index> selected;
  std::vector<Index> quarantined;
  std::vector<std::string> guess_sources;
  bool complete = true;
  std::string failure;
};

struct Dataset {
  std::vector<Trajectory> trajectories;
  DatasetMeta meta;

  Index samples() const;
  /// All (x, v, grad v) samples, with the origin (v = 0, grad v = 0) first
  /// when `with_origin` is set.
  SampleSet flatten(bool with_origin = true) const;
  /// Samples of the listed trajectories only.
  SampleSet flatten(const std::vector<Index>& which, bool with_origin = true) const;
};

/// Argmax over candidates of `min_dist`, skipping excluded ones; ties go to
/// the lowest index. Returns -1 if every candidate is excluded.
Index select_initial_state(const Vec& min_dist, const std::vector<char>& excluded);

/// Distance of every candidate to the nearest point of `cloud` (columns).
Vec cover_distances(const CandidateSet& candidates, const Mat& cloud);

/// At most `max_samples` samples chosen uniformly in arc length (first and
/// last always kept), then samples closer than `min_spacing` to the previously
/// kept one are dropped.
Trajectory thin_trajectory(const Trajectory& tr, Index max_samples, double min_spacing);

struct ExploreOptions {
  double eps_tol_d = 1e-3;
  Index max_traj = 100;
  Index max_samples = 60;
  double min_spacing = 1e-8;
  /// Per-sample bound |HJB residual| <= hjb_tol (1 + r(x)).
  double hjb_tol = 1e-6;
  /// Called after each accepted trajectory with its index.
  std::function<void(Index, const Trajectory&)> progress;
};

class ExplorationError : public std::runtime_error {
 public:
  ExplorationError(const std::string& what, Dataset partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const Dataset& partial() const { return partial_; }

 private:
  Dataset partial_;
};

/// Greedy cover-distance exploration. Selects the candidate farthest from all
/// dataset points (starting from {0}), solves its open-loop problem and adds
/// the thinned trajectory, until the cover distance is <= eps_tol_d or
/// max_traj trajectories exist. Candidates whose solve fails or violates the
/// HJB bound are quarantined.
Dataset run_exploration(const OpenLoopSolver& solver, const CandidateSet& candidates,
                        const ExploreOptions& options);

/// Farthest-point sampling of m candidates starting from seed_point.
std::vector<Index> geometric_greedy_testset(const CandidateSet& candidates, Index m, const Vec& seed_point);

/// max over samples of |HJB residual| / (1 + r(x)).
double max_hjb_violation(const ControlAffineModel& model, const Trajectory& tr);

std::string dataset_to_json(const Dataset& d);
Dataset dataset_from_json(const std::string& text);
void save_dataset(const Dataset& d, const std::string& path);
Dataset load_dataset(const std::string& path);
/// trajectory,t,x_1..x_N,v,dv_1..dv_N
std::string dataset_csv(const Dataset& d);

}  // namespace hvf
