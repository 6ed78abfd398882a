#include "caai/vps/simulator.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>

using namespace caai::vps;
using caai::conceptual::AdaptionCommand;

namespace {

// Hand-written plant formulas with the default constants, independent of
// the simulator code.
struct Oracle {
  double r = 20, u = 0.15, B = 50, t0 = 30, tc = 5, th = 0.5, e0 = 0.05, e1 = 0.002, P = 200;
  double f1(double x) const { return e0 + e1 * (t0 + tc * x); }
  double f2(double x) const { return t0 + tc * x + th * r * x; }
  double f3(double x) const { return r * x * (1 - u) >= B ? r * x : r * x + P; }
};

GroundTruthConfig quiet() {
  GroundTruthConfig c;
  c.unpopped_sd = 0.0;
  return c;
}

double grid_argmin(const ObjectiveWeights& w, const GroundTruthConfig& cfg, int n) {
  double best_x = 0, best = 1e300;
  for (int i = 0; i < n; ++i) {
    const double x = 1.0 + 9.0 * i / (n - 1);
    const double y = aggregate(expected_batch(cfg, x), w);
    if (y < best) best = y, best_x = x;
  }
  return best_x;
}

}  // namespace

TEST_CASE("batch examples with no noise") {
  Simulator sim(quiet(), {1, 10}, 5.0);
  auto r = sim.run_batch(5.0);
  CHECK(r.cycle == 1);
  CHECK(r.x_used == 5.0);
  CHECK(r.popped == doctest::Approx(85.0));
  CHECK(r.box_filled);
  CHECK(r.f3 == doctest::Approx(100.0));
  CHECK(r.f1 == doctest::Approx(Oracle{}.f1(5.0)));
  CHECK(r.f2 == doctest::Approx(Oracle{}.f2(5.0)));

  auto s = sim.run_batch(2.0);
  CHECK(s.popped == doctest::Approx(34.0));
  CHECK_FALSE(s.box_filled);
  CHECK(s.f3 == doctest::Approx(40.0 + 200.0));
  CHECK(sim.cycle() == 2);
}

TEST_CASE("out-of-bounds batch consumes no cycle") {
  Simulator sim(quiet(), {1, 10}, 5.0);
  CHECK_THROWS_AS(sim.run_batch(0.5), SimulatorError);
  CHECK_THROWS_AS(sim.run_batch(10.01), SimulatorError);
  CHECK(sim.cycle() == 0);
  CHECK(sim.run_batch(10.0).cycle == 1);
}

TEST_CASE("objectives match the oracle over the range") {
  const Oracle o;
  for (int i = 0; i <= 90; ++i) {
    const double x = 1.0 + 0.1 * i;
    const auto b = expected_batch(quiet(), x);
    CAPTURE(x);
    CHECK(b.f1 == doctest::Approx(o.f1(x)).epsilon(1e-12));
    CHECK(b.f2 == doctest::Approx(o.f2(x)).epsilon(1e-12));
    CHECK(b.f3 == doctest::Approx(o.f3(x)).epsilon(1e-12));
    CHECK(b.box_filled == (b.popped >= 50.0));
    CHECK(b.f1 >= 0);
  }
}

TEST_CASE("aggregate examples") {
  ObjectiveWeights w;
  w.ranges = {{{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}}};
  BatchResult b;
  b.f1 = 0.3, b.f2 = 0.6, b.f3 = 0.9;
  CHECK(aggregate(b, w) == doctest::Approx(0.6));
  b.f1 = b.f2 = b.f3 = 1.0;
  CHECK(aggregate(b, w) == doctest::Approx(1.0));

  const double eps = 1e-9;
  w.w = {1 - 2 * eps, eps, eps};
  b.f1 = 0.0;
  CHECK(aggregate(b, w) == doctest::Approx(0.0).epsilon(1e-8));

  w.w = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(aggregate(b, w), SimulatorError);
  w.w = {1.0, 0.0, 0.0};
  CHECK_THROWS_AS(aggregate(b, w), SimulatorError);
}

TEST_CASE("aggregate is affine per objective and symmetric in the triples") {
  ObjectiveWeights w;
  w.w = {0.2, 0.3, 0.5};
  w.ranges = {{{0.0, 2.0}, {10.0, 30.0}, {-1.0, 4.0}}};
  BatchResult b;
  b.f1 = 0.7, b.f2 = 12.0, b.f3 = 3.0;
  const double y = aggregate(b, w);
  BatchResult shifted = b;
  shifted.f2 += 4.0;
  CHECK(aggregate(shifted, w) - y == doctest::Approx(0.3 * 4.0 / 20.0));

  ObjectiveWeights p;
  p.w = {0.5, 0.2, 0.3};
  p.ranges = {{w.ranges[2], w.ranges[0], w.ranges[1]}};
  BatchResult q;
  q.f1 = b.f3, q.f2 = b.f1, q.f3 = b.f2;
  CHECK(aggregate(q, p) == doctest::Approx(y).epsilon(1e-14));
}

TEST_CASE("default normalization ranges are grid extremes") {
  const auto w = make_weights({1.0 / 3, 1.0 / 3, 1.0 / 3}, quiet(), {1, 10});
  const Oracle o;
  double lo3 = 1e300, hi3 = -1e300;
  for (int i = 0; i < 1000; ++i) {
    const double x = 1.0 + 9.0 * i / 999;
    lo3 = std::min(lo3, o.f3(x));
    hi3 = std::max(hi3, o.f3(x));
  }
  CHECK(w.ranges[0].first == doctest::Approx(o.f1(1.0)));
  CHECK(w.ranges[0].second == doctest::Approx(o.f1(10.0)));
  CHECK(w.ranges[1].second == doctest::Approx(o.f2(10.0)));
  CHECK(w.ranges[2].first == doctest::Approx(lo3));
  CHECK(w.ranges[2].second == doctest::Approx(hi3));
}

TEST_CASE("ground truth equals the noise-free batch") {
  const auto w = make_weights({1.0 / 3, 1.0 / 3, 1.0 / 3}, quiet(), {1, 10});
  Simulator sim(quiet(), {1, 10}, 1.0);
  for (double x : {1.0, 2.5, 2.95, 4.0, 9.9}) {
    const double truth = sim.ground_truth_objective(x, w);
    CHECK(truth == aggregate(sim.run_batch(x), w));
  }
  CHECK_THROWS_AS(sim.ground_truth_objective(0.0, w), SimulatorError);

  // Noise never enters the ground truth.
  Simulator noisy(GroundTruthConfig{}, {1, 10}, 1.0);
  CHECK(noisy.ground_truth_objective(3.0, w) == sim.ground_truth_objective(3.0, w));
}

TEST_CASE("grid argmin is the first grid point that fills the box") {
  const auto cfg = quiet();
  const auto w = make_weights({1.0 / 3, 1.0 / 3, 1.0 / 3}, cfg, {1, 10});
  double expected = 0;
  for (int i = 0; i < 1000; ++i) {
    const double x = 1.0 + 9.0 * i / 999;
    if (20.0 * x * 0.85 >= 50.0) {
      expected = x;
      break;
    }
  }
  CHECK(grid_argmin(w, cfg, 1000) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::abs(grid_argmin(w, cfg, 10000) - expected) < 9.0 / 999);

  // Monotone above the threshold.
  double prev = -1e300;
  for (int i = 0; i < 200; ++i) {
    const double x = 2.95 + (10.0 - 2.95) * i / 199;
    const double y = aggregate(expected_batch(cfg, x), w);
    CHECK(y > prev);
    prev = y;
  }
}

TEST_CASE("f3 jumps by the penalty at the fill threshold") {
  const double xt = 50.0 / (20.0 * 0.85);
  const double below = expected_batch(quiet(), xt - 1e-9).f3;
  const double at = expected_batch(quiet(), xt + 1e-12).f3;
  CHECK(below - at == doctest::Approx(200.0).epsilon(1e-6));
}

TEST_CASE("adaption endpoint") {
  Simulator sim(quiet(), {1, 10}, 5.0);
  auto ack = sim.apply_adaption(AdaptionCommand{"x", 3.2, 0, "p"});
  CHECK(ack.accepted);
  CHECK(sim.run_batch().x_used == 3.2);
  CHECK(sim.apply_adaption(AdaptionCommand{"x", 10.0, 1, "p"}).accepted);
  auto bad = sim.apply_adaption(AdaptionCommand{"x", 10.1, 1, "p"});
  CHECK_FALSE(bad.accepted);
  CHECK(bad.reason.find("bounds") != std::string::npos);
  CHECK_FALSE(sim.apply_adaption(AdaptionCommand{"speed", 2.0, 1, "p"}).accepted);
  CHECK_FALSE(sim.apply_adaption(AdaptionCommand{"x", std::nan(""), 1, "p"}).accepted);
  CHECK(sim.rejected_adaptions() == 3);
  CHECK(sim.current_x() == 10.0);
}

TEST_CASE("drift injection") {
  Simulator sim(quiet(), {1, 10}, 5.0);
  sim.inject_drift(10, "u", 0.30);
  double before = 0;
  for (int c = 1; c <= 12; ++c) {
    auto b = sim.run_batch();
    if (c == 9) before = b.popped;
    if (c >= 10) CHECK(b.popped / before == doctest::Approx(0.70 / 0.85));
  }
  CHECK(sim.config_at(9).unpopped_mean == 0.15);
  CHECK(sim.config_at(10).unpopped_mean == 0.30);
  CHECK_THROWS_AS(sim.inject_drift(20, "color", 1.0), SimulatorError);
  CHECK_THROWS_AS(sim.inject_drift(12, "u", 0.2), SimulatorError);
  CHECK_THROWS_AS(sim.inject_drift(20, "u", 1.5), SimulatorError);
  sim.inject_drift(20, "r", 25.0);
  sim.inject_drift(20, "B", 60.0);
  CHECK(sim.config_at(20).feed_rate == 25.0);
  CHECK(sim.config_at(20).box_requirement == 60.0);

  GroundTruthConfig scheduled = quiet();
  scheduled.drift = {{3, DriftField::unpopped_mean, 0.5}};
  Simulator s2(scheduled, {1, 10}, 5.0);
  s2.run_batch();
  s2.run_batch();
  CHECK(s2.run_batch().popped == doctest::Approx(50.0));
}

TEST_CASE("seeded noise is reproducible and clipped") {
  GroundTruthConfig cfg;
  cfg.unpopped_sd = 0.3;
  cfg.seed = 42;
  Simulator a(cfg, {1, 10}, 4.0), b(cfg, {1, 10}, 4.0);
  cfg.seed = 43;
  Simulator c(cfg, {1, 10}, 4.0);
  bool differs = false;
  for (int i = 0; i < 200; ++i) {
    const double x = 1.0 + (i % 10);
    auto ra = a.run_batch(x), rb = b.run_batch(x), rc = c.run_batch(x);
    CHECK(ra.popped == rb.popped);
    CHECK(ra.f3 == rb.f3);
    differs = differs || ra.popped != rc.popped;
    const double corn = 20.0 * x;
    CHECK(ra.popped >= corn * 0.05 - 1e-12);
    CHECK(ra.popped <= corn + 1e-12);
    CHECK(ra.box_filled == (ra.popped >= 50.0));
  }
  CHECK(differs);
}

TEST_CASE("configuration invariants") {
  auto bad = [](auto mutate) {
    GroundTruthConfig c;
    mutate(c);
    return c;
  };
  CHECK_THROWS_AS(bad([](auto& c) { c.unpopped_mean = 1.0; }).validate(), SimulatorError);
  CHECK_THROWS_AS(bad([](auto& c) { c.unpopped_sd = -0.1; }).validate(), SimulatorError);
  CHECK_THROWS_AS(bad([](auto& c) { c.feed_rate = 0.0; }).validate(), SimulatorError);
  CHECK_THROWS_AS(bad([](auto& c) { c.shortfall_penalty = 0.0; }).validate(), SimulatorError);
  CHECK_THROWS_AS(Simulator(GroundTruthConfig{}, {5, 5}, 5.0), SimulatorError);
  CHECK_THROWS_AS(Simulator(GroundTruthConfig{}, {1, 10}, 11.0), SimulatorError);
  CHECK_THROWS_AS(parse_drift_field("color"), SimulatorError);
  CHECK(parse_drift_field("unpopped_mean") == DriftField::unpopped_mean);
}
