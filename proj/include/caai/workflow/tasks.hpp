#pragma once

#include "caai/bus/broker.hpp"
#include "caai/cognition/cognition.hpp"
#include "caai/conceptual/experience.hpp"
#include "caai/conceptual/knowledge.hpp"
#include "caai/conceptual/report.hpp"
#include "caai/smbo/loop.hpp"
#include "caai/vps/simulator.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Module tasks of one workflow run. Each task owns its subscriptions and
// talks to the others only through the broker; step() handles whatever is
// available and reports whether it did any work.
namespace caai::workflow {

class Task {
 public:
  virtual ~Task() = default;
  virtual std::string_view name() const = 0;
  virtual bool step() = 0;
};

/// Noise-free objective at x under the process parameters of a cycle.
using TruthFn = std::function<double(double x, int cycle)>;

/// raw-data -> preprocessed-data: scalarizes the three objectives.
class PreprocessorTask final : public Task {
 public:
  PreprocessorTask(bus::Broker& broker, vps::ObjectiveWeights weights);
  std::string_view name() const override { return "preprocessor"; }
  bool step() override;

 private:
  bus::Broker& broker_;
  vps::ObjectiveWeights weights_;
  bus::Subscriber raw_;
};

/// One candidate pipeline: keeps its own history from preprocessed-data and,
/// from the end of the initial design on, fits, searches and publishes
/// model-ready and optimization-result for every cycle.
class PipelineTask final : public Task {
 public:
  PipelineTask(bus::Broker& broker, cognition::PipelineSpec spec, smbo::Interval bounds,
               int n_initial, std::uint64_t seed, TruthFn truth);
  std::string_view name() const override { return spec_.id; }
  bool step() override;

  const smbo::SmboState& state() const { return state_; }

 private:
  bus::Broker& broker_;
  cognition::PipelineSpec spec_;
  int n_initial_;
  std::uint64_t seed_;
  TruthFn truth_;
  smbo::SmboState state_;
  bus::Subscriber data_;
  bus::Subscriber requests_;
};

/// Collects optimization results per cycle and runs the cognition phase
/// machine once every active pipeline has reported.
class CognitionTask final : public Task {
 public:
  CognitionTask(bus::Broker& broker, cognition::Cognition cognition, int first_cycle,
                int repetition);
  std::string_view name() const override { return "cognition"; }
  bool step() override;

  const cognition::Cognition& cognition() const { return cognition_; }
  const std::vector<cognition::CycleDecision>& decisions() const { return decisions_; }
  const std::vector<conceptual::ExperienceEntry>& experience() const { return experience_; }

 private:
  void process(int cycle, const std::vector<cognition::PipelinePerformance>& perf);

  bus::Broker& broker_;
  cognition::Cognition cognition_;
  int next_cycle_;
  int repetition_;
  bus::Subscriber results_;
  std::map<int, std::vector<cognition::PipelinePerformance>> pending_;
  std::vector<cognition::CycleDecision> decisions_;
  std::vector<conceptual::ExperienceEntry> experience_;
};

/// Vets the driving pipeline's candidate against the knowledge base and
/// publishes one adaption-decision per cycle. A refused candidate leaves
/// the plant at its current setting.
class BusinessLogicTask final : public Task {
 public:
  BusinessLogicTask(bus::Broker& broker, conceptual::KnowledgeBase kb);
  std::string_view name() const override { return "business-logic"; }
  bool step() override;

 private:
  bus::Broker& broker_;
  conceptual::KnowledgeBase kb_;
  bus::Subscriber selected_;
  bus::Subscriber results_;
  bus::Subscriber data_;
  std::map<std::pair<int, std::string>, std::pair<double, double>> candidates_;  // x, predicted
  std::map<int, double> observed_;
};

/// Translates adaption decisions into plant commands and acknowledges each.
class AdaptionTask final : public Task {
 public:
  AdaptionTask(bus::Broker& broker, vps::Simulator& plant);
  std::string_view name() const override { return "adaption"; }
  bool step() override;

  int commands_sent() const { return sent_; }

 private:
  bus::Broker& broker_;
  vps::Simulator& plant_;
  bus::Subscriber decisions_;
  int sent_ = 0;
};

/// Single writer of the run's CycleRecords. Gathers everything it needs
/// from the bus and assembles the rows in finalize().
class ReportTask final : public Task {
 public:
  ReportTask(bus::Broker& broker, std::vector<std::string> pipeline_ids);
  std::string_view name() const override { return "report"; }
  bool step() override;

  conceptual::ReportLog finalize(int n_cycles) const;

  const std::vector<int>& drift_cycles() const { return drift_cycles_; }
  const std::vector<int>& recalibration_cycles() const { return recalibration_cycles_; }
  const std::vector<std::string>& texts() const { return texts_; }

  /// Decision of one cycle and the plant's answer to it.
  struct Adaption {
    std::string pipeline_id;
    bool issued = false;
    bool accepted = false;
    double value = 0.0;
    double predicted = 0.0;
    double reference = 0.0;  // observed objective the gain was measured against
  };
  const std::map<int, Adaption>& adaptions() const { return adaptions_; }

 private:
  struct Observation {
    double x = 0.0;
    double y = 0.0;
  };
  struct Result {
    double x_candidate = 0.0;
    double predicted = 0.0;
    double cpu_ms = 0.0;
    std::uint64_t bytes = 0;
    double error = 0.0;
  };

  bus::Broker& broker_;
  std::vector<std::string> pipeline_ids_;
  std::vector<bus::Subscriber> subs_;
  std::map<int, Observation> observations_;
  std::map<std::pair<int, std::string>, Result> results_;
  std::map<int, std::string> drivers_;
  std::map<int, std::string> drifts_;
  std::map<int, Adaption> adaptions_;
  std::vector<int> drift_cycles_;
  std::vector<int> recalibration_cycles_;
  std::vector<std::string> texts_;
};

}  // namespace caai::workflow
