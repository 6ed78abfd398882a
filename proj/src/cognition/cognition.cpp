#include "caai/cognition/cognition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

namespace caai::cognition {

std::vector<PipelineSpec> init_candidates(const conceptual::Goal& goal,
                                          const conceptual::KnowledgeBase& kb) {
  const auto entries = conceptual::feasible_algorithms(goal, kb);
  std::vector<PipelineSpec> specs;
  for (const auto& e : entries)
    for (const auto& s : e.setups) {
      PipelineSpec p;
      p.id = s.id;
      p.goal = goal.kind;
      p.setup = s;
      p.setup.model.algorithm = e.algorithm;
      p.consumer_group = "pipeline-" + s.id;
      specs.push_back(std::move(p));
    }
  if (specs.empty()) throw CognitionError("unsupported goal '" + goal.kind + "'");
  std::set<std::string> groups;
  for (const auto& p : specs)
    if (!groups.insert(p.consumer_group).second)
      throw CognitionError("pipeline id '" + p.id + "' is not unique");
  return specs;
}

void SelectionPolicy::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw CognitionError("alpha must lie in [0, 1]");
}

std::vector<RankedPipeline> score(const std::vector<PipelinePerformance>& perf,
                                  const SelectionPolicy& policy) {
  policy.validate();
  if (perf.empty()) throw CognitionError("cannot score an empty set of records");
  for (const auto& p : perf) {
    if (p.cycle != perf.front().cycle) throw CognitionError("records span several cycles");
    // A surrogate may predict slightly below zero, so the optimum is only
    // required to be finite.
    if (!(p.prediction_error >= 0.0) || !(p.cpu_seconds >= 0.0) ||
        !std::isfinite(p.predicted_optimum) || !std::isfinite(p.prediction_error))
      throw CognitionError("invalid performance record for " + p.pipeline_id);
  }

  auto span_of = [&](auto member) {
    auto [lo, hi] = std::minmax_element(perf.begin(), perf.end(), [&](const auto& a, const auto& b) {
      return a.*member < b.*member;
    });
    return std::pair{(*lo).*member, (*hi).*member};
  };
  const auto [e_lo, e_hi] = span_of(&PipelinePerformance::prediction_error);
  const auto [o_lo, o_hi] = span_of(&PipelinePerformance::predicted_optimum);
  auto norm = [](double v, double lo, double hi) { return hi > lo ? (v - lo) / (hi - lo) : 0.0; };

  std::vector<RankedPipeline> out;
  out.reserve(perf.size());
  for (const auto& p : perf)
    out.push_back({p.pipeline_id,
                   policy.alpha * norm(p.prediction_error, e_lo, e_hi) +
                       (1.0 - policy.alpha) * norm(p.predicted_optimum, o_lo, o_hi),
                   p.cpu_seconds, p.model_bytes});
  std::sort(out.begin(), out.end(), [](const RankedPipeline& a, const RankedPipeline& b) {
    return std::tie(a.score, a.cpu_seconds, a.model_bytes, a.pipeline_id) <
           std::tie(b.score, b.cpu_seconds, b.model_bytes, b.pipeline_id);
  });
  return out;
}

std::string select_pipeline(const std::vector<RankedPipeline>& ranking) {
  if (ranking.empty()) throw CognitionError("empty ranking");
  return ranking.front().pipeline_id;
}

void DriftConfig::validate() const {
  if (window < 3) throw CognitionError("drift window must be >= 3");
  if (!(ratio > 1.0)) throw CognitionError("drift ratio must be > 1");
}

double median(std::vector<double> v) {
  if (v.empty()) throw CognitionError("median of an empty set");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  if (v.size() % 2) return v[mid];
  const double upper = v[mid];
  const double lower = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lower + upper);
}

DriftDetector::DriftDetector(DriftConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void DriftDetector::reset() {
  baseline_.reset();
  errors_.clear();
}

void DriftDetector::observe(double prediction_error) {
  errors_.push_back(prediction_error);
  if (!baseline_ && errors_.size() == cfg_.window)
    // A perfect model would give a zero baseline that any error exceeds.
    baseline_ = std::max(median(errors_), 1e-12);
}

bool detect_drift(const DriftDetector& detector, const std::vector<double>& recent_errors) {
  const auto base = detector.baseline();
  const std::size_t w = detector.config().window;
  if (!base || recent_errors.size() < w) return false;
  std::vector<double> last(recent_errors.end() - static_cast<std::ptrdiff_t>(w), recent_errors.end());
  return median(std::move(last)) > detector.config().ratio * *base;
}

std::string_view to_string(Phase p) {
  return p == Phase::initialization ? "initialization" : "operation";
}

void CognitionConfig::validate() const {
  policy.validate();
  drift.validate();
  if (phase1_cycles < 1) throw CognitionError("phase1_cycles must be >= 1");
  if (recalibration_window && *recalibration_window < 2)
    throw CognitionError("recalibration window must be >= 2");
}

Cognition::Cognition(std::vector<PipelineSpec> candidates, CognitionConfig cfg)
    : candidates_(std::move(candidates)), cfg_(cfg), detector_(cfg.drift) {
  cfg_.validate();
  if (candidates_.empty()) throw CognitionError("no candidate pipelines");
}

CycleDecision Cognition::on_cycle(int cycle, const std::vector<PipelinePerformance>& perf) {
  if (perf.size() != candidates_.size())
    throw CognitionError("expected one record per candidate at cycle " + std::to_string(cycle));
  for (const auto& c : candidates_)
    if (std::none_of(perf.begin(), perf.end(),
                     [&](const PipelinePerformance& p) { return p.pipeline_id == c.id; }))
      throw CognitionError("no record for pipeline " + c.id);

  CycleDecision d;
  d.cycle = cycle;
  d.phase = phase_;
  d.ranking = score(perf, cfg_.policy);

  if (phase_ == Phase::initialization) {
    phase_history_.insert(phase_history_.end(), perf.begin(), perf.end());
    d.driver = select_pipeline(d.ranking);
    if (++phase_cycles_ >= cfg_.phase1_cycles) {
      std::map<std::string, std::vector<const PipelinePerformance*>> by_id;
      for (const auto& p : phase_history_) by_id[p.pipeline_id].push_back(&p);
      std::vector<PipelinePerformance> summary;
      for (const auto& c : candidates_) {
        const auto& rows = by_id[c.id];
        auto med = [&](auto member) {
          std::vector<double> v;
          for (const auto* r : rows) v.push_back(static_cast<double>(r->*member));
          return median(std::move(v));
        };
        summary.push_back({c.id, cycle, med(&PipelinePerformance::prediction_error),
                           med(&PipelinePerformance::predicted_optimum),
                           med(&PipelinePerformance::cpu_seconds),
                           static_cast<std::uint64_t>(
                               std::llround(med(&PipelinePerformance::model_bytes)))});
      }
      d.ranking = score(summary, cfg_.policy);
      selected_ = select_pipeline(d.ranking);
      d.selected = selected_;
      d.driver = *selected_;
      phase_ = Phase::operation;
      detector_.reset();
    }
    return d;
  }

  const auto it = std::find_if(perf.begin(), perf.end(),
                               [&](const PipelinePerformance& p) { return p.pipeline_id == *selected_; });
  detector_.observe(it->prediction_error);
  d.driver = *selected_;
  if (cfg_.monitor_drift && detect_drift(detector_, detector_.errors())) {
    const auto& errs = detector_.errors();
    d.drift = true;
    d.drift_median = median({errs.end() - static_cast<std::ptrdiff_t>(cfg_.drift.window), errs.end()});
    d.drift_baseline = *detector_.baseline();
    d.recalibrated = true;
    recalibrate();
  }
  return d;
}

std::vector<PipelineSpec> Cognition::recalibrate() {
  ++recalibrations_;
  phase_ = Phase::initialization;
  phase_cycles_ = 0;
  phase_history_.clear();
  selected_.reset();
  detector_.reset();
  if (cfg_.recalibration_window)
    for (auto& c : candidates_) c.forgetting_window = cfg_.recalibration_window;
  return candidates_;
}

}  // namespace caai::cognition
