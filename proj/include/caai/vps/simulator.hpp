#pragma once

#include "caai/conceptual/adaption_command.hpp"

#include <array>
#include <cstdint>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace caai::vps {

class SimulatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Bounds {
  double lo = 1.0;
  double hi = 10.0;

  bool contains(double x) const { return x >= lo && x <= hi; }
  double width() const { return hi - lo; }
};

enum class DriftField { unpopped_mean, feed_rate, box_requirement };

/// "u"/"unpopped_mean", "r"/"feed_rate", "B"/"box_requirement".
DriftField parse_drift_field(std::string_view name);

struct DriftEvent {
  int cycle = 0;
  DriftField field = DriftField::unpopped_mean;
  double value = 0.0;
};

/// Process parameters of the dosing and popping stage. Units: grams,
/// seconds, kWh.
struct GroundTruthConfig {
  double feed_rate = 20.0;           // g corn per second of conveyor runtime
  double unpopped_mean = 0.15;
  double unpopped_sd = 0.03;
  double box_requirement = 50.0;     // g popped corn per box
  double base_time = 30.0;           // s
  double time_per_second = 5.0;      // s of processing per s of runtime
  double handling_time_per_gram = 0.5;
  double base_energy = 0.05;         // kWh
  double energy_per_second = 0.002;  // kWh per s of processing
  double shortfall_penalty = 200.0;  // g-equivalent
  std::uint64_t seed = 1;
  std::vector<DriftEvent> drift;

  void validate() const;
};

struct BatchResult {
  int cycle = 0;
  double x_used = 0.0;
  double f1 = 0.0;  // energy, kWh
  double f2 = 0.0;  // processing time, s
  double f3 = 0.0;  // corn consumed per filled box, g
  double popped = 0.0;
  bool box_filled = false;

  std::array<double, 3> objectives() const { return {f1, f2, f3}; }
};

/// Weighted-sum scalarization with per-objective min-max normalization.
struct ObjectiveWeights {
  std::array<double, 3> w{1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::array<std::pair<double, double>, 3> ranges{};

  void validate() const;
};

double aggregate(const BatchResult& result, const ObjectiveWeights& weights);

/// Evaluates the three objectives at x with the yield fixed to its mean.
BatchResult expected_batch(const GroundTruthConfig& cfg, double x);

/// Normalization ranges as min/max of each objective over an equidistant
/// grid on the bounds, noise-free.
ObjectiveWeights make_weights(const std::array<double, 3>& w,
                              const GroundTruthConfig& cfg, Bounds bounds,
                              int grid_points = 1000);

struct AdaptionAck {
  bool accepted = false;
  double x = 0.0;
  int cycle = 0;
  std::string reason;
};

/// Popcorn dosing plant. Batches and adaptions are serialized.
class Simulator {
 public:
  Simulator(GroundTruthConfig cfg, Bounds bounds, double initial_x);

  /// Runs one batch at x. Out-of-bounds x throws and consumes no cycle.
  BatchResult run_batch(double x);
  /// Runs one batch at the currently applied setting.
  BatchResult run_batch();

  double ground_truth_objective(double x, const ObjectiveWeights& weights) const;

  AdaptionAck apply_adaption(const conceptual::AdaptionCommand& command);

  /// Schedules a change that takes effect from batch `cycle` on.
  void inject_drift(int cycle, DriftField field, double value);
  void inject_drift(int cycle, std::string_view field, double value);

  int cycle() const;
  double current_x() const;
  Bounds bounds() const { return bounds_; }
  /// Adaption commands refused by the plant's own bounds check.
  int rejected_adaptions() const;
  /// Process parameters in force for batch `cycle`.
  GroundTruthConfig config_at(int cycle) const;

 private:
  BatchResult run_locked(double x);

  mutable std::mutex mutex_;
  GroundTruthConfig base_;
  Bounds bounds_;
  double x_;
  int cycle_ = 0;
  int rejected_ = 0;
  std::vector<DriftEvent> drift_;
  std::mt19937_64 rng_;
};

}  // namespace caai::vps
