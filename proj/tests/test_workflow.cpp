#include "csv_util.hpp"

#include "caai/cognition/cognition.hpp"
#include "caai/workflow/config.hpp"
#include "caai/workflow/runner.hpp"
#include "caai/workflow/tasks.hpp"
#include "caai/workflow/topics.hpp"

#include "doctest.h"

#include "json.hpp"

#include <filesystem>
#include <set>

using namespace caai::workflow;
using caai::test::drop_column;
using caai::test::parse_csv;
using caai::test::slurp;
using nlohmann::json;

namespace {

const std::filesystem::path kSource = CAAI_SOURCE_DIR;

json default_json() { return json::parse(slurp(kSource / "config/default.json")); }

ExperimentConfig from_json(const json& j) { return parse_config(j.dump(), kSource / "config"); }

ExperimentConfig small(int cycles = 10, int reps = 2) {
  auto j = default_json();
  j["n_cycles"] = cycles;
  j["n_repetitions"] = reps;
  j["seeds"] = json::array();
  for (int r = 1; r <= reps; ++r) j["seeds"].push_back(r);
  return from_json(j);
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("caai_workflow_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string csv_of(const RepetitionResult& r) {
  std::ostringstream out;
  r.report.write_csv(out);
  return out.str();
}

}  // namespace

TEST_CASE("repository configurations load") {
  for (const char* name : {"default.json", "drift.json", "benchmark.json"}) {
    CAPTURE(name);
    const auto cfg = load_config(kSource / "config" / name);
    CHECK(cfg.n_cycles == 20);
    CHECK(cfg.n_repetitions == 10);
    CHECK(cfg.seeds.size() == 10);
    CHECK(cfg.design.n_initial == 5);
    CHECK(cfg.plant_bounds.lo == 1.0);
    CHECK(cfg.plant_bounds.hi == 10.0);
  }
  const auto drift = load_config(kSource / "config/drift.json");
  REQUIRE(drift.simulator.drift.size() == 1);
  CHECK(drift.simulator.drift[0].cycle == 12);
  CHECK(drift.cognition.phase1_cycles == 2);
  CHECK(load_config(kSource / "config/benchmark.json").experiment == Experiment::benchmark);
}

TEST_CASE("configuration errors") {
  auto bad = [](auto mutate) {
    auto j = default_json();
    mutate(j);
    return j;
  };
  CHECK_THROWS_AS(from_json(bad([](json& j) { j["n_cycles"] = 3; })), ConfigError);
  CHECK_THROWS_AS(from_json(bad([](json& j) { j["seeds"] = {1, 2}; })), ConfigError);
  CHECK_THROWS_AS(from_json(bad([](json& j) { j["colour"] = "red"; })), ConfigError);
  CHECK_THROWS_AS(from_json(bad([](json& j) { j["simulator"]["speed"] = 1; })), ConfigError);
  CHECK_THROWS_AS(from_json(bad([](json& j) { j["weights"] = {0.5, 0.5, 0.5}; })), ConfigError);
  CHECK_THROWS_AS(from_json(bad([](json& j) { j["weights"] = {1.0, 0.0, 0.0}; })), ConfigError);
  CHECK_THROWS_AS(from_json(bad([](json& j) { j["weights"] = {0.5, 0.5}; })), ConfigError);
  CHECK_THROWS_AS(from_json(bad([](json& j) {
                    j["simulator"]["drift"] = {{{"cycle", 25}, {"field", "u"}, {"value", 0.3}}};
                  })),
                  ConfigError);
  CHECK_THROWS_AS(from_json(bad([](json& j) {
                    j["simulator"]["drift"] = {{{"cycle", 5}, {"field", "colour"}, {"value", 0.3}}};
                  })),
                  ConfigError);
  CHECK_THROWS_AS(from_json(bad([](json& j) { j["mode"] = "fast"; })), ConfigError);
  CHECK_THROWS_AS(from_json(bad([](json& j) { j["experiment"] = "both"; })), ConfigError);
  CHECK_THROWS_AS(from_json(bad([](json& j) { j["design"]["kind"] = "sobol"; })), ConfigError);
  CHECK_THROWS_AS(from_json(bad([](json& j) { j["simulator"]["initial_x"] = 11; })), ConfigError);
  CHECK_THROWS_AS(from_json(bad([](json& j) { j["selection"]["alpha"] = 2; })), ConfigError);
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(load_config(kSource / "config/missing.json"), ConfigError);
  CHECK(parse_mode("conc") == Mode::concurrent);
  CHECK(to_string(Mode::deterministic) == "det");

  // n_cycles equal to the design size is the smallest valid run.
  CHECK_NOTHROW(from_json(bad([](json& j) { j["n_cycles"] = 5; })));
}

TEST_CASE("schema files match the built-in schemas") {
  const auto dir = kSource / "schemas";
  for (const auto& s : topics::default_schemas()) {
    CAPTURE(s.topic);
    const auto file = caai::bus::parse_schema_json(slurp(dir / (s.topic + ".json")));
    CHECK(file.topic == s.topic);
    REQUIRE(file.fields.size() == s.fields.size());
    for (std::size_t i = 0; i < s.fields.size(); ++i) {
      CHECK(file.fields[i].name == s.fields[i].name);
      CHECK(file.fields[i].kind == s.fields[i].kind);
      CHECK(file.fields[i].required == s.fields[i].required);
    }
  }
  caai::bus::Broker b(caai::bus::logical_clock());
  topics::setup_bus(b, dir);
  for (const auto& t : topics::topic_table()) CHECK(b.schema_versions(t.name) == 1);

  caai::bus::Broker empty(caai::bus::logical_clock());
  const auto nothing = scratch("noschemas");
  std::filesystem::create_directories(nothing);
  CHECK_THROWS(topics::setup_bus(empty, nothing));
  std::filesystem::remove_all(nothing);
}

TEST_CASE("aggregation takes per-cell medians") {
  const std::string h = caai::conceptual::kReportHeader;
  auto rep = [&](double y) {
    return h + "\n1,p,1,0.5,,,,,0,0,0\n5,p,2," + caai::conceptual::format_double(y) +
           ",0.1,0.2,1.5,100,1,1,0\n";
  };
  const auto agg = aggregate_csv({rep(1), rep(2), rep(100)});
  CHECK(agg == std::string(kAggregateHeader) + "\n5,p,2,0.2,1.5,100\n");
  CHECK(aggregate_csv({rep(0.25)}) == std::string(kAggregateHeader) + "\n5,p,0.25,0.2,1.5,100\n");
  CHECK(aggregate_csv({rep(1), rep(3)}).find("5,p,2,") != std::string::npos);

  CHECK_THROWS_AS(aggregate_csv({}), AggregateError);
  CHECK_THROWS_AS(aggregate_csv({"cycle,y\n1,2\n"}), AggregateError);
  CHECK_THROWS_AS(aggregate_csv({h + "\n5,p,2,1\n"}), AggregateError);
  CHECK_THROWS_AS(aggregate_csv({h + "\n5,p,2,1,0.1,zero,1,1,1,1,0\n"}), AggregateError);
  CHECK_THROWS_AS(aggregate_files({kSource / "no_such.csv"}), AggregateError);
}

TEST_CASE("a repetition reports every pipeline in every cycle") {
  const auto cfg = small(12, 1);
  const auto res = run_repetition(cfg, 0);
  const auto rows = res.report.records();
  CHECK(rows.size() == 4 * 12);
  std::set<std::string> ids;
  for (const auto& r : rows) ids.insert(r.pipeline_id);
  REQUIRE(ids.size() == 4);
  for (int c = 1; c <= 12; ++c)
    for (const auto& id : ids) {
      CAPTURE(c);
      const auto* r = res.report.find(c, id);
      REQUIRE(r != nullptr);
      CHECK(r->x.has_value());
      CHECK(r->pred_error.has_value() == (c >= cfg.design.n_initial));
    }
  // Exactly one driving pipeline per modelled cycle.
  for (int c = cfg.design.n_initial; c <= 12; ++c) {
    int selected = 0;
    for (const auto& id : ids) selected += res.report.find(c, id)->selected ? 1 : 0;
    CHECK(selected == 1);
  }
  CHECK(res.commands_outside_bounds == 0);
  CHECK(res.rejected_adaptions == 0);
  CHECK(res.commands_below_threshold == 0);
  for (const auto& s : res.bus_stats) CHECK(s.rejections == 0);

  const auto agg = parse_csv(aggregate_csv({csv_of(res)}));
  CHECK(agg.size() == 1 + 4 * (12 - 5 + 1));
  CHECK(agg[1][0] == "5");
}

TEST_CASE("deterministic runs repeat exactly and concurrent runs agree") {
  auto cfg = small(14, 1);
  const auto a = csv_of(run_repetition(cfg, 0));
  const auto b = csv_of(run_repetition(cfg, 0));
  CHECK(drop_column(a, "cpu_ms") == drop_column(b, "cpu_ms"));

  RunOptions conc;
  conc.mode = Mode::concurrent;
  const auto c = csv_of(run_repetition(cfg, 0, conc));
  CHECK(drop_column(c, "cpu_ms") == drop_column(a, "cpu_ms"));

  RunOptions shifted;
  shifted.seed_offset = 100;
  CHECK(drop_column(csv_of(run_repetition(cfg, 0, shifted)), "cpu_ms") != drop_column(a, "cpu_ms"));
}

TEST_CASE("every pipeline group receives the full data stream") {
  caai::bus::Broker broker(caai::bus::logical_clock());
  topics::setup_bus(broker, std::nullopt);
  const auto specs = caai::cognition::init_candidates({}, caai::conceptual::default_knowledge_base());
  std::vector<std::unique_ptr<PipelineTask>> tasks;
  TruthFn truth = [](double x, int) { return (x - 4) * (x - 4) / 81; };
  for (const auto& s : specs)
    tasks.push_back(std::make_unique<PipelineTask>(broker, s, caai::smbo::Interval{1, 10}, 5, 3, truth));
  for (int c = 1; c <= 7; ++c) {
    const double x = 1 + 1.3 * c;
    broker.publish(topics::preprocessed_data,
                   {{"cycle", std::int64_t{c}}, {"x", x}, {"y", truth(x, c)}});
  }
  for (bool worked = true; worked;) {
    worked = false;
    for (auto& t : tasks) worked = t->step() || worked;
  }
  for (const auto& t : tasks) {
    CHECK(t->state().history.size() == 7);
    CHECK(t->state().cycle == 7);
  }
  CHECK(broker.log_size(topics::optimization_result) == 4 * 3);
  CHECK(broker.log_size(topics::model_ready) == 4 * 3);
}

TEST_CASE("benchmark mode runs each setup on its own plant") {
  auto j = default_json();
  j["experiment"] = "benchmark";
  j["n_cycles"] = 8;
  j["n_repetitions"] = 1;
  j["seeds"] = {3};
  const auto res = run_repetition(from_json(j), 0);
  const auto rows = res.report.records();
  CHECK(rows.size() == 4 * 8);
  CHECK(res.drift_cycles.empty());
  // Each replica is driven by its own pipeline in every modelled cycle.
  for (const auto& r : rows)
    if (r.cycle >= 5) CHECK(r.selected);
}

TEST_CASE("run_experiment writes its outputs") {
  const auto dir = scratch("outputs");
  const auto cfg = small(9, 3);
  const auto summary = run_experiment(cfg, dir);
  for (const char* f : {"rep_01.csv", "rep_02.csv", "rep_03.csv", "aggregate.csv", "bus_stats.csv",
                        "experience.jsonl"})
    CHECK(std::filesystem::exists(dir / f));
  CHECK_FALSE(std::filesystem::exists(dir / "rep_04.csv"));
  CHECK(summary.repetitions.size() == 3);

  std::vector<std::filesystem::path> reps{dir / "rep_01.csv", dir / "rep_02.csv", dir / "rep_03.csv"};
  CHECK(slurp(dir / "aggregate.csv") == aggregate_files(reps));
  CHECK(parse_csv(slurp(dir / "aggregate.csv")).size() == 1 + 4 * (9 - 5 + 1));

  const auto stats = parse_csv(slurp(dir / "bus_stats.csv"));
  REQUIRE(stats.size() == 1 + topics::topic_table().size());
  for (std::size_t i = 1; i < stats.size(); ++i) CHECK(stats[i][3] == "0");

  const auto lines = slurp(dir / "experience.jsonl");
  run_experiment(cfg, dir);
  CHECK(slurp(dir / "experience.jsonl").rfind(lines, 0) == 0);
  std::filesystem::remove_all(dir);
}
