#include "caai/workflow/runner.hpp"

#include "caai/util/seed.hpp"
#include "caai/workflow/tasks.hpp"
#include "caai/workflow/topics.hpp"

#include <atomic>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

namespace caai::workflow {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) h = (h ^ ch) * 0x100000001b3ULL;
  return h;
}

struct Run {
  const ExperimentConfig& cfg;
  bus::Broker broker;
  vps::Simulator plant;
  std::vector<double> design;
  std::unique_ptr<ReportTask> report;
  CognitionTask* cognition = nullptr;
  AdaptionTask* adaption = nullptr;
  std::vector<std::unique_ptr<Task>> tasks;  // fixed stepping order, report last
  bus::Subscriber acks;

  Run(const ExperimentConfig& c, Mode mode, const vps::GroundTruthConfig& plant_cfg)
      : cfg(c),
        broker(mode == Mode::deterministic ? bus::logical_clock() : bus::system_clock()),
        plant(plant_cfg, c.plant_bounds, c.initial_x) {}

  void run_batch(int cycle) {
    if (cycle <= static_cast<int>(design.size())) {
      const auto ack = plant.apply_adaption({"x", design[cycle - 1], cycle - 1, "design"});
      if (!ack.accepted) throw RuntimeFailure("design point refused by the plant: " + ack.reason);
    }
    const auto r = plant.run_batch();
    broker.publish(topics::raw_data, {{"cycle", std::int64_t{r.cycle}},
                                      {"x", r.x_used},
                                      {"f1", r.f1},
                                      {"f2", r.f2},
                                      {"f3", r.f3},
                                      {"popped", r.popped},
                                      {"box_filled", std::int64_t{r.box_filled ? 1 : 0}}});
  }

  bool round() {
    bool worked = false;
    for (auto& t : tasks) worked = t->step() || worked;
    return worked;
  }

  void drain() {
    while (round()) {
    }
  }

  bool ack_for(int cycle) {
    auto msgs = broker.poll(acks, 1);
    if (msgs.empty()) return false;
    const auto got = bus::int_field(msgs.front().payload, "cycle");
    if (got != cycle)
      throw RuntimeFailure("acknowledgement for cycle " + std::to_string(got) + " while waiting for " +
                           std::to_string(cycle));
    return true;
  }
};

RepetitionResult run_candidates(const ExperimentConfig& cfg,
                                const std::vector<cognition::PipelineSpec>& candidates,
                                cognition::CognitionConfig cog_cfg, int rep, std::uint64_t seed,
                                const RunOptions& opts) {
  vps::GroundTruthConfig plant_cfg = cfg.simulator;
  plant_cfg.seed = util::derive_seed(seed, {1});
  Run run(cfg, opts.mode, plant_cfg);
  topics::setup_bus(run.broker, cfg.schema_dir);

  const auto weights = vps::make_weights(cfg.weights, cfg.simulator, cfg.plant_bounds);
  const smbo::Interval space = cfg.knowledge.bounds.at("x");
  smbo::DesignSpec design = cfg.design;
  design.seed = util::derive_seed(seed, {2});
  run.design = smbo::generate_design(design, space);

  const vps::Simulator& plant = run.plant;
  TruthFn truth = [&plant, weights](double x, int cycle) {
    return vps::aggregate(vps::expected_batch(plant.config_at(cycle), x), weights);
  };

  std::vector<std::string> ids;
  run.tasks.push_back(std::make_unique<PreprocessorTask>(run.broker, weights));
  for (const auto& spec : candidates) {
    ids.push_back(spec.id);
    run.tasks.push_back(std::make_unique<PipelineTask>(run.broker, spec, space, cfg.design.n_initial,
                                                       util::derive_seed(seed, {3, fnv1a(spec.id)}),
                                                       truth));
  }
  auto cog = std::make_unique<CognitionTask>(
      run.broker, cognition::Cognition(candidates, cog_cfg), cfg.design.n_initial, rep);
  run.cognition = cog.get();
  run.tasks.push_back(std::move(cog));
  run.tasks.push_back(std::make_unique<BusinessLogicTask>(run.broker, cfg.knowledge));
  auto ada = std::make_unique<AdaptionTask>(run.broker, run.plant);
  run.adaption = ada.get();
  run.tasks.push_back(std::move(ada));
  auto report = std::make_unique<ReportTask>(run.broker, ids);
  ReportTask* report_ptr = report.get();
  run.tasks.push_back(std::move(report));
  run.acks = run.broker.subscribe(topics::adaption_ack, "runner", "0");

  const int n_init = cfg.design.n_initial;
  if (opts.mode == Mode::deterministic) {
    for (int c = 1; c <= cfg.n_cycles; ++c) {
      run.run_batch(c);
      run.drain();
      if (c >= n_init && !run.ack_for(c))
        throw RuntimeFailure("cycle " + std::to_string(c) + " stalled without an adaption decision");
    }
  } else {
    std::atomic<bool> stop{false};
    std::mutex failure_mutex;
    std::exception_ptr failure;
    std::vector<std::thread> threads;
    for (auto& t : run.tasks) {
      Task* task = t.get();
      threads.emplace_back([&, task] {
        while (!stop.load()) {
          try {
            if (!task->step()) std::this_thread::sleep_for(std::chrono::microseconds(50));
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            stop = true;
          }
        }
      });
    }
    auto failed = [&] {
      std::lock_guard lock(failure_mutex);
      return failure != nullptr;
    };
    try {
      for (int c = 1; c <= cfg.n_cycles && !failed(); ++c) {
        run.run_batch(c);
        if (c < n_init) continue;
        const auto deadline = Clock::now() + opts.cycle_timeout;
        while (!failed() && !run.ack_for(c)) {
          if (Clock::now() > deadline)
            throw RuntimeFailure("cycle " + std::to_string(c) + " timed out");
          std::this_thread::sleep_for(std::chrono::microseconds(50));
        }
      }
    } catch (...) {
      stop = true;
      for (auto& th : threads) th.join();
      throw;
    }
    stop = true;
    for (auto& th : threads) th.join();
    if (failure) std::rethrow_exception(failure);
    run.drain();
  }

  RepetitionResult res;
  res.report = report_ptr->finalize(cfg.n_cycles);
  res.bus_stats = run.broker.all_stats();
  res.experience = run.cognition->experience();
  res.drift_cycles = report_ptr->drift_cycles();
  res.recalibration_cycles = report_ptr->recalibration_cycles();
  res.report_texts = report_ptr->texts();
  res.rejected_adaptions = run.plant.rejected_adaptions();
  res.commands_sent = run.adaption->commands_sent();
  for (const auto& [cycle, a] : report_ptr->adaptions()) {
    if (!a.issued) continue;
    if (!conceptual::check_constraints(a.value, cfg.knowledge).ok) ++res.commands_outside_bounds;
    if (a.reference - a.predicted < cfg.knowledge.min_improvement) ++res.commands_below_threshold;
  }
  return res;
}

void merge_into(RepetitionResult& into, RepetitionResult&& from) {
  for (auto& r : from.report.records()) into.report.record_cycle(std::move(r));
  std::map<std::string, bus::TopicStats*> by_topic;
  for (auto& s : into.bus_stats) by_topic[s.topic] = &s;
  for (const auto& s : from.bus_stats) {
    if (auto it = by_topic.find(s.topic); it != by_topic.end()) {
      it->second->appends += s.appends;
      it->second->rejections += s.rejections;
    } else {
      into.bus_stats.push_back(s);
    }
  }
  for (auto& e : from.experience) into.experience.push_back(std::move(e));
  for (int c : from.drift_cycles) into.drift_cycles.push_back(c);
  for (int c : from.recalibration_cycles) into.recalibration_cycles.push_back(c);
  for (auto& t : from.report_texts) into.report_texts.push_back(std::move(t));
  into.rejected_adaptions += from.rejected_adaptions;
  into.commands_outside_bounds += from.commands_outside_bounds;
  into.commands_sent += from.commands_sent;
  into.commands_below_threshold += from.commands_below_threshold;
}

}  // namespace

std::uint64_t repetition_seed(const ExperimentConfig& cfg, int rep, std::uint64_t offset) {
  return cfg.seeds.at(static_cast<std::size_t>(rep)) + offset;
}

RepetitionResult run_repetition(const ExperimentConfig& cfg, int rep, const RunOptions& opts) {
  cfg.validate();
  const std::uint64_t seed = repetition_seed(cfg, rep, opts.seed_offset);
  conceptual::Goal goal;
  goal.kind = cfg.goal;
  const auto candidates = cognition::init_candidates(goal, cfg.knowledge);

  if (cfg.experiment == Experiment::workflow)
    return run_candidates(cfg, candidates, cfg.cognition, rep, seed, opts);

  cognition::CognitionConfig single = cfg.cognition;
  single.monitor_drift = false;
  RepetitionResult merged;
  for (const auto& spec : candidates)
    merge_into(merged, run_candidates(cfg, {spec}, single, rep, seed, opts));
  return merged;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out << text;
  if (!out) throw RuntimeFailure("write failed for " + path.string());
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                          const RunOptions& opts) {
  cfg.validate();
  RunSummary summary;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw RuntimeFailure("cannot create " + out_dir.string() + ": " + ec.message());
  try {
    std::vector<std::string> reports;
    std::map<std::string, bus::TopicStats> stats;
    for (int rep = 0; rep < cfg.n_repetitions; ++rep) {
      auto res = run_repetition(cfg, rep, opts);
      std::ostringstream csv;
      res.report.write_csv(csv);
      reports.push_back(csv.str());
      char name[32];
      std::snprintf(name, sizeof name, "rep_%02d.csv", rep + 1);
      const auto path = out_dir / name;
      summary.files.push_back(path);
      write_text(path, reports.back());
      for (const auto& s : res.bus_stats) {
        auto [it, fresh] = stats.try_emplace(s.topic, s);
        if (!fresh) {
          it->second.appends += s.appends;
          it->second.rejections += s.rejections;
        }
      }
      summary.repetitions.push_back(std::move(res));
    }
    summary.files.push_back(out_dir / "aggregate.csv");
    write_text(summary.files.back(), aggregate_csv(reports));

    std::ostringstream st;
    st << "topic,bus_class,appends,rejections\n";
    for (const auto& [topic, s] : stats)
      st << topic << ',' << bus::to_string(s.bus_class) << ',' << s.appends << ',' << s.rejections << '\n';
    summary.files.push_back(out_dir / "bus_stats.csv");
    write_text(summary.files.back(), st.str());
  } catch (...) {
    for (const auto& f : summary.files) std::filesystem::remove(f, ec);
    throw;
  }
  // Appended last so that a failed run leaves the log untouched.
  conceptual::ExperienceLog log(out_dir / "experience.jsonl");
  std::ofstream(log.path(), std::ios::binary | std::ios::app);  // exists even when nothing happened
  for (const auto& r : summary.repetitions)
    for (const auto& e : r.experience) log.append(e);
  return summary;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) return out;
    start = pos + 1;
  }
}

double parse_number(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw AggregateError("not a number: '" + s + "'");
  return v;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string aggregate_csv(const std::vector<std::string>& reports) {
  if (reports.empty()) throw AggregateError("no repetition files");
  // (cycle, pipeline) -> four value columns, one entry per repetition
  std::map<std::pair<int, std::string>, std::array<std::vector<double>, 4>> cells;
  for (const auto& text : reports) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != conceptual::kReportHeader)
      throw AggregateError("header mismatch: '" + line + "'");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = split(line);
      if (f.size() != 11) throw AggregateError("malformed row: '" + line + "'");
      if (f[5].empty()) continue;  // initial design, no model yet
      auto& cell = cells[{static_cast<int>(parse_number(f[0])), f[1]}];
      cell[0].push_back(parse_number(f[3]));
      cell[1].push_back(parse_number(f[5]));
      cell[2].push_back(parse_number(f[6]));
      cell[3].push_back(parse_number(f[7]));
    }
  }
  std::string out = std::string(kAggregateHeader) + "\n";
  for (const auto& [key, cell] : cells) {
    out += std::to_string(key.first) + "," + key.second;
    for (const auto& v : cell) out += "," + conceptual::format_double(median_of(v));
    out += "\n";
  }
  return out;
}

std::string aggregate_files(const std::vector<std::filesystem::path>& files) {
  std::vector<std::string> texts;
  for (const auto& p : files) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw AggregateError("cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    texts.push_back(ss.str());
  }
  return aggregate_csv(texts);
}

}  // namespace caai::workflow
