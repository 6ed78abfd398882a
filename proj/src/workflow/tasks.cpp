#include "caai/workflow/tasks.hpp"

#include "caai/util/seed.hpp"
#include "caai/workflow/topics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace caai::workflow {

using bus::int_field;
using bus::real_field;
using bus::text_field;

namespace {

constexpr std::size_t kBatch = 64;

std::int64_t as_int(bool b) { return b ? 1 : 0; }

}  // namespace

PreprocessorTask::PreprocessorTask(bus::Broker& broker, vps::ObjectiveWeights weights)
    : broker_(broker),
      weights_(weights),
      raw_(broker.subscribe(topics::raw_data, "preprocessor", "0")) {}

bool PreprocessorTask::step() {
  auto msgs = broker_.poll(raw_, kBatch);
  for (const auto& m : msgs) {
    vps::BatchResult r;
    r.cycle = static_cast<int>(int_field(m.payload, "cycle"));
    r.x_used = real_field(m.payload, "x");
    r.f1 = real_field(m.payload, "f1");
    r.f2 = real_field(m.payload, "f2");
    r.f3 = real_field(m.payload, "f3");
    broker_.publish(topics::preprocessed_data,
                    {{"cycle", std::int64_t{r.cycle}},
                     {"x", r.x_used},
                     {"y", vps::aggregate(r, weights_)}});
  }
  return !msgs.empty();
}

PipelineTask::PipelineTask(bus::Broker& broker, cognition::PipelineSpec spec, smbo::Interval bounds,
                           int n_initial, std::uint64_t seed, TruthFn truth)
    : broker_(broker),
      spec_(std::move(spec)),
      n_initial_(n_initial),
      seed_(seed),
      truth_(std::move(truth)),
      data_(broker.subscribe(topics::preprocessed_data, spec_.consumer_group, "0")),
      requests_(broker.subscribe(topics::model_request, spec_.consumer_group, "0")) {
  state_.bounds = {bounds};
  state_.history.window = spec_.forgetting_window;
}

bool PipelineTask::step() {
  // Requests are applied before the next data point so that a re-calibration
  // issued for cycle c governs the fit on cycle c + 1.
  bool worked = false;
  for (const auto& m : broker_.poll(requests_, kBatch)) {
    const auto w = int_field(m.payload, "window");
    spec_.forgetting_window = w > 0 ? std::optional<std::size_t>(w) : std::nullopt;
    state_.history.window = spec_.forgetting_window;
    worked = true;
  }
  auto msgs = broker_.poll(data_, 1);
  if (msgs.empty()) return worked;
  const auto& p = msgs.front().payload;
  const int cycle = static_cast<int>(int_field(p, "cycle"));
  if (cycle != state_.cycle + 1)
    throw std::runtime_error("pipeline " + spec_.id + " expected cycle " +
                             std::to_string(state_.cycle + 1) + ", got " + std::to_string(cycle));
  const double x = real_field(p, "x");
  state_.record(std::span<const double>(&x, 1), real_field(p, "y"));
  if (state_.cycle < n_initial_) return true;

  const auto seed = util::derive_seed(seed_, {static_cast<std::uint64_t>(cycle)});
  smbo::Proposal proposal;
  try {
    proposal = smbo::propose(state_, spec_.setup.model, spec_.setup.infill, seed);
  } catch (const surrogates::SurrogateError&) {
    // The window can hold nothing but repeats of one setting; fall back to
    // the whole history for this cycle rather than stall the workflow.
    if (!state_.history.window) throw;
    smbo::SmboState full = state_;
    full.history.window.reset();
    proposal = smbo::propose(full, spec_.setup.model, spec_.setup.infill, seed);
  }
  const double candidate = proposal.x.front();
  const double error = std::abs(proposal.predicted - truth_(candidate, cycle));
  const auto bytes = static_cast<std::int64_t>(proposal.fit.model_bytes);
  broker_.publish(topics::model_ready,
                  {{"pipeline_id", spec_.id},
                   {"cycle", std::int64_t{cycle}},
                   {"n_points", static_cast<std::int64_t>(proposal.fit.n_points)},
                   {"model_bytes", bytes}},
                  spec_.id);
  broker_.publish(topics::optimization_result,
                  {{"pipeline_id", spec_.id},
                   {"cycle", std::int64_t{cycle}},
                   {"x_candidate", candidate},
                   {"predicted_optimum", proposal.predicted},
                   {"cpu_ms", proposal.fit.cpu_seconds * 1e3},
                   {"model_bytes", bytes},
                   {"pred_error", error}},
                  spec_.id);
  return true;
}

CognitionTask::CognitionTask(bus::Broker& broker, cognition::Cognition cognition, int first_cycle,
                             int repetition)
    : broker_(broker),
      cognition_(std::move(cognition)),
      next_cycle_(first_cycle),
      repetition_(repetition),
      results_(broker.subscribe(topics::optimization_result, "cognition", "0")) {}

bool CognitionTask::step() {
  auto msgs = broker_.poll(results_, kBatch);
  for (const auto& m : msgs) {
    const auto& p = m.payload;
    cognition::PipelinePerformance perf;
    perf.pipeline_id = text_field(p, "pipeline_id");
    perf.cycle = static_cast<int>(int_field(p, "cycle"));
    perf.prediction_error = real_field(p, "pred_error");
    perf.predicted_optimum = real_field(p, "predicted_optimum");
    perf.cpu_seconds = real_field(p, "cpu_ms") / 1e3;
    perf.model_bytes = static_cast<std::uint64_t>(int_field(p, "model_bytes"));
    if (perf.cycle < next_cycle_)
      throw std::runtime_error("late optimization result for cycle " + std::to_string(perf.cycle));
    pending_[perf.cycle].push_back(std::move(perf));
  }
  const std::size_t n = cognition_.candidates().size();
  for (auto it = pending_.find(next_cycle_); it != pending_.end() && it->second.size() == n;
       it = pending_.find(next_cycle_)) {
    // Arrival order differs between runs in concurrent mode.
    auto perf = std::move(it->second);
    std::sort(perf.begin(), perf.end(),
              [](const auto& a, const auto& b) { return a.pipeline_id < b.pipeline_id; });
    pending_.erase(it);
    process(next_cycle_++, perf);
  }
  return !msgs.empty();
}

void CognitionTask::process(int cycle, const std::vector<cognition::PipelinePerformance>& perf) {
  auto d = cognition_.on_cycle(cycle, perf);
  auto algorithm_of = [&](const std::string& id) {
    for (const auto& c : cognition_.candidates())
      if (c.id == id) return std::string(surrogates::to_string(c.setup.model.algorithm));
    return std::string();
  };
  const std::int64_t c = cycle;

  if (d.drift) {
    const auto window = cognition_.candidates().front().forgetting_window;
    const std::int64_t w = window ? static_cast<std::int64_t>(*window) : 0;
    broker_.publish(topics::drift_event, {{"cycle", c},
                                          {"pipeline_id", d.driver},
                                          {"median_error", d.drift_median},
                                          {"baseline", d.drift_baseline}});
    broker_.publish(topics::model_request, {{"cycle", c}, {"window", w}});
    broker_.publish(topics::recalibration_event,
                    {{"cycle", c}, {"count", std::int64_t{cognition_.recalibrations()}}, {"window", w}});
    std::ostringstream text;
    text << "cycle " << cycle << ": drift on " << d.driver << " (median error " << d.drift_median
         << " vs baseline " << d.drift_baseline << "), re-calibrating";
    broker_.publish(topics::reports, {{"cycle", c}, {"text", text.str()}});
    experience_.push_back({"recalibration", repetition_, cycle, d.driver, algorithm_of(d.driver),
                           d.drift_median, 0.0, "baseline " + std::to_string(d.drift_baseline)});
  }

  if (d.selected) {
    std::vector<double> errors, optima;
    for (const auto& h : cognition_.phase_history())
      if (h.pipeline_id == *d.selected) {
        errors.push_back(h.prediction_error);
        optima.push_back(h.predicted_optimum);
      }
    const double med_err = cognition::median(errors);
    const double med_opt = cognition::median(optima);
    std::ostringstream text;
    text << "cycle " << cycle << ": selected " << *d.selected << " (" << algorithm_of(*d.selected)
         << "), median error " << med_err << ", median predicted optimum " << med_opt;
    broker_.publish(topics::reports, {{"cycle", c}, {"text", text.str()}});
    experience_.push_back({"selection", repetition_, cycle, *d.selected, algorithm_of(*d.selected),
                           med_err, med_opt, ""});
  }

  broker_.publish(topics::pipeline_selected,
                  {{"cycle", c},
                   {"pipeline_id", d.driver},
                   {"phase", std::string(cognition::to_string(d.phase))},
                   {"selection", as_int(d.selected.has_value())},
                   {"score", d.ranking.front().score}});
  decisions_.push_back(std::move(d));
}

BusinessLogicTask::BusinessLogicTask(bus::Broker& broker, conceptual::KnowledgeBase kb)
    : broker_(broker),
      kb_(std::move(kb)),
      selected_(broker.subscribe(topics::pipeline_selected, "business-logic", "0")),
      results_(broker.subscribe(topics::optimization_result, "business-logic", "0")),
      data_(broker.subscribe(topics::preprocessed_data, "business-logic", "0")) {}

bool BusinessLogicTask::step() {
  auto msgs = broker_.poll(selected_, 1);
  if (msgs.empty()) return false;
  // Everything the cognition saw for this cycle was published before its
  // selection, so draining now is complete.
  for (auto batch = broker_.poll(results_, kBatch); !batch.empty(); batch = broker_.poll(results_, kBatch))
    for (const auto& m : batch)
      candidates_[{static_cast<int>(int_field(m.payload, "cycle")), text_field(m.payload, "pipeline_id")}] =
          {real_field(m.payload, "x_candidate"), real_field(m.payload, "predicted_optimum")};
  for (auto batch = broker_.poll(data_, kBatch); !batch.empty(); batch = broker_.poll(data_, kBatch))
    for (const auto& m : batch)
      observed_[static_cast<int>(int_field(m.payload, "cycle"))] = real_field(m.payload, "y");

  const auto& p = msgs.front().payload;
  const int cycle = static_cast<int>(int_field(p, "cycle"));
  const std::string driver = text_field(p, "pipeline_id");
  const auto cand = candidates_.find({cycle, driver});
  const auto obs = observed_.find(cycle);
  if (cand == candidates_.end() || obs == observed_.end())
    throw std::runtime_error("business logic has no candidate of " + driver + " for cycle " +
                             std::to_string(cycle));
  const auto [x, predicted] = cand->second;
  const double reference = obs->second;

  bus::Payload out{{"cycle", std::int64_t{cycle}},
                   {"pipeline_id", driver},
                   {"value", x},
                   {"predicted", predicted},
                   {"reference", reference}};
  const auto check = conceptual::check_constraints(x, kb_);
  if (!check.ok) {
    out["issued"] = std::int64_t{0};
    out["reason"] = "constraint violation: " + check.reason;
  } else {
    const auto decision = conceptual::decide_adaption(reference, x, predicted, kb_, cycle, driver);
    out["issued"] = as_int(decision.command.has_value());
    out["reason"] = decision.reason;
  }
  broker_.publish(topics::adaption_decision, std::move(out));

  candidates_.erase(candidates_.begin(), candidates_.upper_bound({cycle, std::string(1, '\x7f')}));
  observed_.erase(observed_.begin(), observed_.upper_bound(cycle));
  return true;
}

AdaptionTask::AdaptionTask(bus::Broker& broker, vps::Simulator& plant)
    : broker_(broker),
      plant_(plant),
      decisions_(broker.subscribe(topics::adaption_decision, "adaption", "0")) {}

bool AdaptionTask::step() {
  auto msgs = broker_.poll(decisions_, 1);
  if (msgs.empty()) return false;
  const auto& p = msgs.front().payload;
  const std::int64_t cycle = int_field(p, "cycle");
  bus::Payload ack{{"cycle", cycle}};
  if (int_field(p, "issued") != 0) {
    const conceptual::AdaptionCommand cmd{"x", real_field(p, "value"), static_cast<int>(cycle),
                                          text_field(p, "pipeline_id")};
    const auto res = plant_.apply_adaption(cmd);
    ++sent_;
    ack["accepted"] = as_int(res.accepted);
    ack["x"] = plant_.current_x();
    ack["reason"] = res.reason;
  } else {
    ack["accepted"] = std::int64_t{0};
    ack["x"] = plant_.current_x();
    ack["reason"] = "no command: " + text_field(p, "reason");
  }
  broker_.publish(topics::adaption_ack, std::move(ack));
  return true;
}

ReportTask::ReportTask(bus::Broker& broker, std::vector<std::string> pipeline_ids)
    : broker_(broker), pipeline_ids_(std::move(pipeline_ids)) {
  for (const char* t : {topics::preprocessed_data, topics::optimization_result,
                        topics::pipeline_selected, topics::drift_event,
                        topics::recalibration_event, topics::adaption_decision,
                        topics::adaption_ack, topics::reports})
    subs_.push_back(broker.subscribe(t, "report", "0"));
}

bool ReportTask::step() {
  bool worked = false;
  for (const auto& sub : subs_) {
    for (const auto& m : broker_.poll(sub, kBatch)) {
      worked = true;
      const auto& p = m.payload;
      const int cycle = static_cast<int>(int_field(p, "cycle"));
      if (m.topic == topics::preprocessed_data) {
        observations_[cycle] = {real_field(p, "x"), real_field(p, "y")};
      } else if (m.topic == topics::optimization_result) {
        results_[{cycle, text_field(p, "pipeline_id")}] = {
            real_field(p, "x_candidate"), real_field(p, "predicted_optimum"), real_field(p, "cpu_ms"),
            static_cast<std::uint64_t>(int_field(p, "model_bytes")), real_field(p, "pred_error")};
      } else if (m.topic == topics::pipeline_selected) {
        drivers_[cycle] = text_field(p, "pipeline_id");
      } else if (m.topic == topics::drift_event) {
        drifts_[cycle] = text_field(p, "pipeline_id");
        drift_cycles_.push_back(cycle);
      } else if (m.topic == topics::recalibration_event) {
        recalibration_cycles_.push_back(cycle);
      } else if (m.topic == topics::adaption_decision) {
        auto& a = adaptions_[cycle];
        a.pipeline_id = text_field(p, "pipeline_id");
        a.issued = int_field(p, "issued") != 0;
        a.value = real_field(p, "value");
        a.predicted = real_field(p, "predicted");
        a.reference = real_field(p, "reference");
      } else if (m.topic == topics::adaption_ack) {
        adaptions_[cycle].accepted = int_field(p, "accepted") != 0;
      } else if (m.topic == topics::reports) {
        texts_.push_back(text_field(p, "text"));
      }
    }
  }
  return worked;
}

conceptual::ReportLog ReportTask::finalize(int n_cycles) const {
  conceptual::ReportLog log;
  for (int c = 1; c <= n_cycles; ++c) {
    const auto obs = observations_.find(c);
    if (obs == observations_.end())
      throw conceptual::ReportError("no observation for cycle " + std::to_string(c));
    const auto drv = drivers_.find(c);
    const auto dft = drifts_.find(c);
    const auto ada = adaptions_.find(c);
    for (const auto& id : pipeline_ids_) {
      conceptual::CycleRecord r;
      r.cycle = c;
      r.pipeline_id = id;
      r.x = obs->second.x;
      r.y = obs->second.y;
      if (auto res = results_.find({c, id}); res != results_.end()) {
        r.predicted_optimum = res->second.predicted;
        r.pred_error = res->second.error;
        r.cpu_ms = res->second.cpu_ms;
        r.model_bytes = res->second.bytes;
      }
      r.selected = drv != drivers_.end() && drv->second == id;
      r.adapted = r.selected && ada != adaptions_.end() && ada->second.accepted;
      r.drift = dft != drifts_.end() && dft->second == id;
      log.record_cycle(std::move(r));
    }
  }
  return log;
}

}  // namespace caai::workflow
