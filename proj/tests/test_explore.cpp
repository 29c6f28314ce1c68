#include "common.hpp"
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace hvf;
using namespace testutil;

namespace {

CandidateSet from_points(const Mat& P) { return CandidateSet{P, "test"}; }

OpenLoopSolver planar_solver() {
  const auto m = planar_lqr();
  const auto L = m->linearization();
  return OpenLoopSolver(m, solve_are(L.A, L.B, L.cost, m->control_weight()).Q, OpenLoopConfig{});
}

}  // namespace

TEST_CASE("select initial state") {
  Mat corners(2, 4);
  corners << -1, 1, -1, 1, -1, -1, 1, 1;
  const auto c = from_points(corners);
  const Vec d = cover_distances(c, Mat::Zero(2, 1));
  const Index i = select_initial_state(d, std::vector<char>(4, 0));
  CHECK(i == 0);
  CHECK(d(i) == doctest::Approx(std::sqrt(2.0)));

  // a candidate at distance zero loses to any positive one
  Mat P(2, 3);
  P << 0.0, 0.1, 0.2, 0.0, 0.0, 0.0;
  const Vec dz = cover_distances(from_points(P), P.col(2));
  CHECK(select_initial_state(dz, std::vector<char>(3, 0)) == 0);

  const Vec one = cover_distances(from_points(Mat::Constant(2, 1, 0.3)), Mat::Zero(2, 1));
  CHECK(select_initial_state(one, {0}) == 0);
  CHECK(select_initial_state(one, {1}) == -1);
  CHECK(select_initial_state(d, {1, 0, 1, 1}) == 1);
}

TEST_CASE("geometric greedy test set") {
  std::mt19937_64 rng(1);
  const auto c = from_points(uniform(rng, 2, 40, -1, 1));
  const Vec seed = Vec::Zero(2);
  const auto one = geometric_greedy_testset(c, 1, seed);
  Index far = 0;
  for (Index j = 0; j < c.size(); ++j)
    if (c.points.col(j).norm() > c.points.col(far).norm()) far = j;
  CHECK(one == std::vector<Index>{far});

  auto all = geometric_greedy_testset(c, c.size(), seed);
  std::sort(all.begin(), all.end());
  for (Index j = 0; j < c.size(); ++j) CHECK(all[static_cast<std::size_t>(j)] == j);

  // 5 collinear points with a distant seed: endpoints, then the midpoint
  Mat L(1, 5);
  L << 0.0, 0.25, 0.5, 0.75, 1.0;
  const auto g = geometric_greedy_testset(from_points(L), 3, Vec::Constant(1, -10.0));
  CHECK(g == std::vector<Index>{4, 0, 2});
  // exhaustive farthest-point replay for other seeds
  for (double s : {-10.0, 0.0, 0.3, 0.5, 2.0}) {
    std::vector<double> cloud{s};
    std::vector<Index> ref;
    for (int k = 0; k < 3; ++k) {
      Index arg = -1;
      double best = -1.0;
      for (Index j = 0; j < 5; ++j) {
        if (std::find(ref.begin(), ref.end(), j) != ref.end()) continue;
        double m = 1e300;
        for (double c : cloud) m = std::min(m, std::abs(L(0, j) - c));
        if (m > best) best = m, arg = j;
      }
      ref.push_back(arg);
      cloud.push_back(L(0, arg));
    }
    CHECK(geometric_greedy_testset(from_points(L), 3, Vec::Constant(1, s)) == ref);
  }
  CHECK_THROWS_AS(geometric_greedy_testset(from_points(L), 6, Vec::Zero(1)), std::invalid_argument);
}

TEST_CASE("candidate sets") {
  const auto g = box_grid(2, -1, 1, 5);
  CHECK(g.size() == 25);
  CHECK(g.points.minCoeff() == -1.0);
  CHECK(g.points.maxCoeff() == 1.0);
  const auto h = box_halton(3, -1, 1, 100);
  CHECK(h.size() == 100);
  CHECK(h.points.cwiseAbs().maxCoeff() <= 1.0);
  const auto r1 = box_random(2, 0, 1, 10, 7), r2 = box_random(2, 0, 1, 10, 7);
  CHECK(r1.points == r2.points);
  const auto nhe = nhe_assemble(NheParameters{6});
  const auto f = nhe_family(*nhe, 3);
  CHECK(f.dim() == 36);
  CHECK(f.points.allFinite());
  for (Index j = 0; j < f.size(); ++j) CHECK(f.points.col(j).norm() > 0.0);
}

TEST_CASE("thinning keeps the ends and the minimum spacing") {
  Trajectory tr;
  const Index K = 500;
  tr.states.resize(1, K);
  tr.costates.resize(1, K);
  tr.values.resize(K);
  for (Index k = 0; k < K; ++k) {
    const double t = 0.02 * static_cast<double>(k);
    tr.times.push_back(t);
    tr.states(0, k) = std::exp(-t);
    tr.costates(0, k) = 2 * std::exp(-t);
    tr.values(k) = std::exp(-2 * t);
  }
  const auto th = thin_trajectory(tr, 60, 1e-3);
  CHECK(th.size() <= 60);
  CHECK(th.times.front() == 0.0);
  for (Index k = 1; k < th.size(); ++k) {
    CHECK((th.states.col(k) - th.states.col(k - 1)).norm() >= 1e-3);
    CHECK(th.times[static_cast<std::size_t>(k)] > th.times[static_cast<std::size_t>(k - 1)]);
  }
  const auto full = thin_trajectory(tr, 10000, 0.0);
  CHECK(full.size() == K);
  CHECK(full.times.back() == tr.times.back());
}

TEST_CASE("exploration on a linear model") {
  const auto solver = planar_solver();
  const auto cand = box_grid(2, -1, 1, 11);

  SUBCASE("loop guard") {
    ExploreOptions o;
    o.eps_tol_d = 2.0;
    const auto d = run_exploration(solver, cand, o);
    CHECK(d.trajectories.empty());
    CHECK(d.meta.eps_achieved == doctest::Approx(std::sqrt(2.0)));
    const auto s = d.flatten();
    CHECK(s.size() == 1);
    CHECK(s.points.norm() == 0.0);
  }

  SUBCASE("budget, eps history and sample invariants") {
    ExploreOptions o;
    o.eps_tol_d = 1e-6;
    o.max_traj = 6;
    const auto d = run_exploration(solver, cand, o);
    REQUIRE(d.trajectories.size() == 6);
    CHECK(d.meta.eps_history.front() == doctest::Approx(std::sqrt(2.0)));
    for (std::size_t i = 1; i < d.meta.eps_history.size(); ++i)
      CHECK(d.meta.eps_history[i] <= d.meta.eps_history[i - 1]);
    CHECK(d.meta.eps_achieved <= d.meta.eps_history.back());
    CHECK(d.meta.max_hjb <= o.hjb_tol);
    CHECK(d.meta.quarantined.empty());
    for (const auto& tr : d.trajectories) {
      CHECK(tr.size() <= o.max_samples);
      CHECK(max_hjb_violation(solver.model(), tr) <= 1e-6);
      for (Index k = 0; k < tr.size(); ++k) CHECK(tr.values(k) >= 0.0);
    }
    const auto s = d.flatten();
    CHECK(s.size() == d.samples() + 1);
    CHECK(d.flatten(false).size() == d.samples());
    CHECK(d.flatten(std::vector<Index>{0}, false).size() == d.trajectories[0].size());

    // each selected state starts its trajectory and was the farthest candidate
    Mat cloud = Mat::Zero(2, 1);
    for (std::size_t i = 0; i < d.meta.selected.size(); ++i) {
      const Vec dist = cover_distances(cand, cloud);
      std::vector<char> ex(static_cast<std::size_t>(cand.size()), 0);
      for (std::size_t j = 0; j < i; ++j) ex[static_cast<std::size_t>(d.meta.selected[j])] = 1;
      CHECK(select_initial_state(dist, ex) == d.meta.selected[i]);
      const auto& tr = d.trajectories[i];
      CHECK((tr.states.col(0) - cand.points.col(d.meta.selected[i])).norm() == 0.0);
      Mat grow(2, cloud.cols() + tr.size());
      grow << cloud, tr.states;
      cloud = grow;
    }
  }

  SUBCASE("all candidates quarantined") {
    ExploreOptions o;
    o.hjb_tol = 0.0;
    o.eps_tol_d = 1e-6;
    Mat P(2, 3);
    P << 0.5, -0.5, 0.2, 0.5, 0.1, -0.7;
    try {
      run_exploration(solver, from_points(P), o);
      FAIL("expected an exploration error");
    } catch (const ExplorationError& e) {
      CHECK(e.partial().meta.quarantined.size() == 3);
      CHECK_FALSE(e.partial().meta.complete);
      CHECK(e.partial().trajectories.empty());
    }
  }
}

TEST_CASE("dataset persistence") {
  const auto solver = planar_solver();
  ExploreOptions o;
  o.max_traj = 3;
  o.eps_tol_d = 1e-6;
  const auto d = run_exploration(solver, box_grid(2, -1, 1, 5), o);
  const auto e = dataset_from_json(dataset_to_json(d));
  REQUIRE(e.trajectories.size() == d.trajectories.size());
  for (std::size_t i = 0; i < d.trajectories.size(); ++i) {
    CHECK(e.trajectories[i].times == d.trajectories[i].times);
    CHECK(e.trajectories[i].states == d.trajectories[i].states);
    CHECK(e.trajectories[i].costates == d.trajectories[i].costates);
    CHECK(e.trajectories[i].values == d.trajectories[i].values);
  }
  CHECK(e.meta.eps_history == d.meta.eps_history);
  CHECK(e.meta.selected == d.meta.selected);
  CHECK(e.meta.guess_sources == d.meta.guess_sources);
  CHECK(e.meta.eps_achieved == d.meta.eps_achieved);
  CHECK(e.meta.model == d.meta.model);
  CHECK(dataset_to_json(e) == dataset_to_json(d));

  const auto path = (std::filesystem::temp_directory_path() / "hvf_dataset_test.json").string();
  save_dataset(d, path);
  CHECK(dataset_to_json(load_dataset(path)) == dataset_to_json(d));
  std::remove(path.c_str());

  const Dataset empty;
  CHECK(dataset_from_json(dataset_to_json(empty)).trajectories.empty());

  std::string text = dataset_to_json(d);
  text.replace(text.find("hvf.dataset/1"), 13, "hvf.dataset/9");
  CHECK_THROWS_AS(dataset_from_json(text), FormatError);
  CHECK_THROWS_AS(dataset_from_json("{\"schema\": "), FormatError);
  CHECK_THROWS_AS(load_dataset("/nonexistent/d.json"), std::runtime_error);

  const std::string csv = dataset_csv(d);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == d.samples() + 1);
}
