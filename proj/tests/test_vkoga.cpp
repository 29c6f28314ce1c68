#include "common.hpp"
#include "doctest.h"

#include <cmath>
#include <limits>
#include <algorithm>
#include <set>

using namespace hvf;
using namespace testutil;

namespace {

SampleSet amp_samples(std::mt19937_64& rng, Index P, double lo = -0.8, double hi = 0.8) {
  AmpParameters A;
  SampleSet s;
  s.points = uniform(rng, 2, P, lo, hi);
  s.values.resize(P);
  s.gradients.resize(2, P);
  for (Index j = 0; j < P; ++j) {
    s.values(j) = amp_true_value(A, s.points.col(j));
    s.gradients.col(j) = amp_true_gradient(A, s.points.col(j));
  }
  return s;
}

}  // namespace

TEST_CASE("residual of the zero surrogate") {
  AmpParameters P;
  const Surrogate zero(KernelSpec{"wendland_c4", 2, 1.0, false}, Mat(2, 0), HermiteCoefficients::zero(2, 0),
                       Variant::plain);
  const Vec x = (Vec(2) << 1, 0).finished();
  const double r = residual(zero, x, amp_true_value(P, x), amp_true_gradient(P, x));
  const double C = P.value_constant();
  CHECK(r == doctest::Approx(C * (std::exp(1.0) - 1.0) + 2.0 * C * std::exp(1.0)).epsilon(1e-12));
  CHECK(r == doctest::Approx(2269.7).epsilon(1e-4));
}

TEST_CASE("first selection is the largest data norm") {
  std::mt19937_64 rng(1);
  const SampleSet s = amp_samples(rng, 30);
  VkogaOptions o;
  o.max_centers = 1;
  const auto r = run_vkoga(s, KernelSpec{"wendland_c4", 2, 0.8, false}, Variant::plain, std::nullopt, o);
  Index best = 0;
  double bv = -1;
  for (Index j = 0; j < s.size(); ++j) {
    const double v = std::abs(s.values(j)) + s.gradients.col(j).norm();
    if (v > bv) bv = v, best = j;
  }
  REQUIRE(r.trace.chosen.size() == 1);
  CHECK(r.trace.chosen[0] == best);
  CHECK(r.trace.residuals[0] == doctest::Approx(bv));
}

TEST_CASE("selection replays a brute-force greedy with dense solves") {
  std::mt19937_64 rng(2);
  const SampleSet s = amp_samples(rng, 5);
  const KernelSpec spec{"wendland_c4", 2, 0.9, false};
  VkogaOptions o;
  o.max_centers = 5;
  o.fit.cg_tol = 1e-13;
  const auto r = run_vkoga(s, spec, Variant::plain, std::nullopt, o);

  const Kernel k(spec);
  std::vector<Index> chosen;
  for (int it = 0; it < 5; ++it) {
    Mat X(2, static_cast<Index>(chosen.size()));
    for (std::size_t c = 0; c < chosen.size(); ++c) X.col(static_cast<Index>(c)) = s.points.col(chosen[c]);
    Surrogate cur(spec, Mat(2, 0), HermiteCoefficients::zero(2, 0), Variant::plain);
    if (!chosen.empty()) {
      Vec vv(X.cols());
      Mat gg(2, X.cols());
      for (std::size_t c = 0; c < chosen.size(); ++c) {
        vv(static_cast<Index>(c)) = s.values(chosen[c]);
        gg.col(static_cast<Index>(c)) = s.gradients.col(chosen[c]);
      }
      const Vec coef = dense_solve(dense_M(k, X), assemble_rhs(X, vv, gg, Variant::plain));
      cur = Surrogate(spec, X, HermiteCoefficients::unstack(coef, 2), Variant::plain);
    }
    Index arg = -1;
    double best = -1;
    for (Index j = 0; j < s.size(); ++j) {
      if (std::find(chosen.begin(), chosen.end(), j) != chosen.end()) continue;
      const double res = residual(cur, s.points.col(j), s.values(j), s.gradients.col(j));
      if (res > best) best = res, arg = j;
    }
    chosen.push_back(arg);
  }
  REQUIRE(r.trace.chosen.size() == chosen.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) CHECK(r.trace.chosen[i] == chosen[i]);
}

TEST_CASE("infinite tolerance gives an empty surrogate") {
  std::mt19937_64 rng(3);
  const SampleSet s = amp_samples(rng, 10);
  VkogaOptions o;
  o.eps_tol_f = std::numeric_limits<double>::infinity();
  const Mat Q = Mat::Identity(2, 2);
  const auto r = run_vkoga(s, KernelSpec{"wendland_c4", 2, 1.0, true}, Variant::structured, Q, o);
  CHECK(r.surrogate.num_centers() == 0);
  CHECK(r.trace.chosen.empty());
  CHECK(r.trace.stop_reason == "tolerance");
  const Vec x = (Vec(2) << 0.3, 0.4).finished();
  CHECK(eval(r.surrogate, x) == doctest::Approx(0.25));
}

TEST_CASE("greedy invariants") {
  std::mt19937_64 rng(4);
  const SampleSet s = amp_samples(rng, 60);
  AmpParameters P;
  const Mat Q = 2.0 * P.value_constant() * Mat::Identity(2, 2);
  for (Variant var : {Variant::plain, Variant::structured}) {
    VkogaOptions o;
    o.max_centers = 25;
    const KernelSpec spec{"wendland_c4", 2, 0.7, var == Variant::structured};
    const auto r = run_vkoga(s, spec, var, var == Variant::structured ? std::optional<Mat>(Q) : std::nullopt, o);
    const double scale = s.values.cwiseAbs().maxCoeff() + s.gradients.colwise().norm().maxCoeff();
    std::set<Index> distinct(r.trace.chosen.begin(), r.trace.chosen.end());
    CHECK(distinct.size() == r.trace.chosen.size());
    CHECK(r.trace.cg_iterations.size() == r.trace.chosen.size());
    CHECK(r.surrogate.num_centers() == static_cast<Index>(r.trace.chosen.size()));
    for (const Index c : r.trace.chosen) {
      CHECK(residual(r.surrogate, s.points.col(c), s.values(c), s.gradients.col(c)) <= 10 * o.fit.cg_tol * scale);
    }
    // argmax consistency, replayed on per-iteration checkpoints
    VkogaOptions oc = o;
    oc.max_centers = 8;
    for (Index c = 1; c <= 8; ++c) oc.checkpoints.push_back(c);
    const auto rc = run_vkoga(s, spec, var, var == Variant::structured ? std::optional<Mat>(Q) : std::nullopt, oc);
    REQUIRE(rc.checkpoints.size() == 8);
    for (std::size_t i = 1; i < 8; ++i) {
      const Surrogate& prev = rc.checkpoints[i - 1].second;
      const Index ch = rc.trace.chosen[i];
      const double at = residual(prev, s.points.col(ch), s.values(ch), s.gradients.col(ch));
      CHECK(rc.trace.residuals[i] == doctest::Approx(at).epsilon(1e-12));
      for (Index j = 0; j < s.size(); ++j) {
        if (std::find(rc.trace.chosen.begin(), rc.trace.chosen.begin() + static_cast<long>(i), j) !=
            rc.trace.chosen.begin() + static_cast<long>(i))
          continue;
        CHECK(residual(prev, s.points.col(j), s.values(j), s.gradients.col(j)) <= at * (1 + 1e-12));
      }
    }
    const auto again = run_vkoga(s, spec, var, var == Variant::structured ? std::optional<Mat>(Q) : std::nullopt, o);
    CHECK(again.trace.chosen == r.trace.chosen);
  }
}

TEST_CASE("checkpoints and stop reasons") {
  std::mt19937_64 rng(5);
  const SampleSet s = amp_samples(rng, 20);
  VkogaOptions o;
  o.max_centers = 100;
  o.checkpoints = {2, 5};
  const auto r = run_vkoga(s, KernelSpec{"wendland_c4", 2, 0.8, false}, Variant::plain, std::nullopt, o);
  REQUIRE(r.checkpoints.size() >= 2);
  CHECK(r.checkpoints[0].first == 2);
  CHECK(r.checkpoints[0].second.num_centers() == 2);
  CHECK(r.checkpoints[1].second.num_centers() == 5);
  CHECK(r.trace.stop_reason == "exhausted");
  CHECK(r.surrogate.num_centers() == 20);
  const std::string csv = trace_csv(r.trace);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 21);
}

TEST_CASE("usable samples drop duplicates and the structured origin") {
  SampleSet s;
  s.points = Mat::Zero(2, 4);
  s.points.col(1) << 0.5, 0.5;
  s.points.col(2) << 0.5, 0.5;
  s.points.col(3) << -0.5, 0.1;
  s.values = (Vec(4) << 0, 1, 1, 2).finished();
  s.gradients = Mat::Ones(2, 4);
  CHECK(usable_samples(s, Variant::plain) == std::vector<Index>{0, 1, 3});
  CHECK(usable_samples(s, Variant::structured) == std::vector<Index>{1, 3});
}
