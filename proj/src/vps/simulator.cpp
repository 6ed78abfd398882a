#include "caai/vps/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace caai::vps {

DriftField parse_drift_field(std::string_view name) {
  if (name == "u" || name == "unpopped_mean") return DriftField::unpopped_mean;
  if (name == "r" || name == "feed_rate") return DriftField::feed_rate;
  if (name == "B" || name == "box_requirement") return DriftField::box_requirement;
  throw SimulatorError("unknown drift field '" + std::string(name) + "'");
}

void GroundTruthConfig::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw SimulatorError(std::string(what) + " must be positive");
  };
  positive(feed_rate, "feed_rate");
  positive(box_requirement, "box_requirement");
  positive(base_time, "base_time");
  positive(time_per_second, "time_per_second");
  positive(handling_time_per_gram, "handling_time_per_gram");
  positive(base_energy, "base_energy");
  positive(energy_per_second, "energy_per_second");
  positive(shortfall_penalty, "shortfall_penalty");
  if (!(unpopped_mean >= 0.0 && unpopped_mean < 1.0))
    throw SimulatorError("unpopped_mean must lie in [0, 1)");
  if (!(unpopped_sd >= 0.0)) throw SimulatorError("unpopped_sd must be >= 0");
}

void ObjectiveWeights::validate() const {
  double sum = 0.0;
  for (double wi : w) {
    if (!(wi > 0.0)) throw SimulatorError("objective weights must be positive");
    sum += wi;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw SimulatorError("objective weights must sum to 1");
  for (const auto& [lo, hi] : ranges)
    if (!(hi > lo)) throw SimulatorError("normalization range needs hi > lo");
}

double aggregate(const BatchResult& result, const ObjectiveWeights& weights) {
  weights.validate();
  const auto f = result.objectives();
  double y = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto [lo, hi] = weights.ranges[i];
    y += weights.w[i] * (f[i] - lo) / (hi - lo);
  }
  return y;
}

namespace {

BatchResult evaluate(const GroundTruthConfig& cfg, double x, double unpopped) {
  BatchResult r;
  r.x_used = x;
  const double corn = cfg.feed_rate * x;
  const double runtime = cfg.base_time + cfg.time_per_second * x;
  r.popped = corn * (1.0 - unpopped);
  r.box_filled = r.popped >= cfg.box_requirement;
  r.f1 = cfg.base_energy + cfg.energy_per_second * runtime;
  r.f2 = runtime + cfg.handling_time_per_gram * corn;
  r.f3 = r.box_filled ? corn : corn + cfg.shortfall_penalty;
  return r;
}

void apply(GroundTruthConfig& cfg, const DriftEvent& d) {
  switch (d.field) {
    case DriftField::unpopped_mean: cfg.unpopped_mean = d.value; break;
    case DriftField::feed_rate: cfg.feed_rate = d.value; break;
    case DriftField::box_requirement: cfg.box_requirement = d.value; break;
  }
}

}  // namespace

BatchResult expected_batch(const GroundTruthConfig& cfg, double x) {
  return evaluate(cfg, x, cfg.unpopped_mean);
}

ObjectiveWeights make_weights(const std::array<double, 3>& w,
                              const GroundTruthConfig& cfg, Bounds bounds,
                              int grid_points) {
  if (grid_points < 2) throw SimulatorError("grid needs at least 2 points");
  ObjectiveWeights out;
  out.w = w;
  std::array<double, 3> lo, hi;
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  for (int i = 0; i < grid_points; ++i) {
    const double x = bounds.lo + bounds.width() * i / (grid_points - 1);
    const auto f = expected_batch(cfg, x).objectives();
    for (std::size_t k = 0; k < 3; ++k) {
      lo[k] = std::min(lo[k], f[k]);
      hi[k] = std::max(hi[k], f[k]);
    }
  }
  for (std::size_t k = 0; k < 3; ++k) out.ranges[k] = {lo[k], hi[k]};
  out.validate();
  return out;
}

Simulator::Simulator(GroundTruthConfig cfg, Bounds bounds, double initial_x)
    : base_(std::move(cfg)), bounds_(bounds), x_(initial_x), rng_(base_.seed) {
  base_.validate();
  if (!(bounds_.lo < bounds_.hi)) throw SimulatorError("bounds need lo < hi");
  if (!bounds_.contains(x_)) throw SimulatorError("initial x out of bounds");
  for (const auto& d : base_.drift) {
    if (d.cycle < 1) throw SimulatorError("drift cycle must be >= 1");
    drift_.push_back(d);
  }
  std::stable_sort(drift_.begin(), drift_.end(),
                   [](const DriftEvent& a, const DriftEvent& b) { return a.cycle < b.cycle; });
  base_.drift.clear();
}

GroundTruthConfig Simulator::config_at(int cycle) const {
  GroundTruthConfig cfg = base_;
  for (const auto& d : drift_)
    if (d.cycle <= cycle) apply(cfg, d);
  return cfg;
}

BatchResult Simulator::run_locked(double x) {
  if (!bounds_.contains(x)) {
    std::ostringstream msg;
    msg << "x=" << x << " outside [" << bounds_.lo << ", " << bounds_.hi << "]";
    throw SimulatorError(msg.str());
  }
  const int cycle = cycle_ + 1;
  const GroundTruthConfig cfg = config_at(cycle);
  double u = cfg.unpopped_mean;
  if (cfg.unpopped_sd > 0.0) {
    std::normal_distribution<double> noise(cfg.unpopped_mean, cfg.unpopped_sd);
    u = std::clamp(noise(rng_), 0.0, 0.95);
  }
  BatchResult r = evaluate(cfg, x, u);
  r.cycle = cycle;
  cycle_ = cycle;
  return r;
}

BatchResult Simulator::run_batch(double x) {
  std::lock_guard lock(mutex_);
  return run_locked(x);
}

BatchResult Simulator::run_batch() {
  std::lock_guard lock(mutex_);
  return run_locked(x_);
}

double Simulator::ground_truth_objective(double x, const ObjectiveWeights& weights) const {
  std::lock_guard lock(mutex_);
  if (!bounds_.contains(x)) throw SimulatorError("ground truth queried out of bounds");
  return aggregate(expected_batch(config_at(cycle_), x), weights);
}

AdaptionAck Simulator::apply_adaption(const conceptual::AdaptionCommand& command) {
  std::lock_guard lock(mutex_);
  AdaptionAck ack;
  ack.cycle = cycle_;
  ack.x = command.value;
  if (command.parameter != "x") {
    ++rejected_;
    ack.reason = "unknown parameter '" + command.parameter + "'";
    return ack;
  }
  if (!std::isfinite(command.value) || !bounds_.contains(command.value)) {
    ++rejected_;
    std::ostringstream msg;
    msg << "bounds violation: x=" << command.value << " outside [" << bounds_.lo << ", "
        << bounds_.hi << "]";
    ack.reason = msg.str();
    return ack;
  }
  x_ = command.value;
  ack.accepted = true;
  return ack;
}

void Simulator::inject_drift(int cycle, DriftField field, double value) {
  std::lock_guard lock(mutex_);
  if (cycle <= cycle_)
    throw SimulatorError("drift cycle " + std::to_string(cycle) + " is not in the future");
  GroundTruthConfig probe = config_at(cycle);
  apply(probe, DriftEvent{cycle, field, value});
  probe.validate();
  auto pos = std::upper_bound(drift_.begin(), drift_.end(), cycle,
                              [](int c, const DriftEvent& d) { return c < d.cycle; });
  drift_.insert(pos, DriftEvent{cycle, field, value});
}

void Simulator::inject_drift(int cycle, std::string_view field, double value) {
  inject_drift(cycle, parse_drift_field(field), value);
}

int Simulator::cycle() const {
  std::lock_guard lock(mutex_);
  return cycle_;
}

double Simulator::current_x() const {
  std::lock_guard lock(mutex_);
  return x_;
}

int Simulator::rejected_adaptions() const {
  std::lock_guard lock(mutex_);
  return rejected_;
}

}  // namespace caai::vps
