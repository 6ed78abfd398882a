#include "caai/conceptual/knowledge.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace caai::conceptual {

using nlohmann::json;

void KnowledgeBase::validate() const {
  for (const auto& [goal, entries] : goals)
    for (const auto& e : entries) {
      if (e.setups.empty())
        throw KnowledgeError("algorithm " + std::string(surrogates::to_string(e.algorithm)) +
                             " of goal '" + goal + "' lists no setup");
      for (const auto& s : e.setups) {
        if (s.id.empty()) throw KnowledgeError("setup id must be non-empty");
        s.infill.validate();
      }
    }
  std::set<std::string> ids;
  for (const auto& [goal, entries] : goals)
    for (const auto& e : entries)
      for (const auto& s : e.setups)
        if (!ids.insert(goal + "/" + s.id).second)
          throw KnowledgeError("duplicate setup id '" + s.id + "'");
  for (const auto& [name, b] : bounds)
    if (!(b.lo < b.hi)) throw KnowledgeError("bounds of '" + name + "' are not well-ordered");
  if (!(max_corn_g > 0.0) || !(feed_rate_g_per_s > 0.0))
    throw KnowledgeError("constraints must be positive");
  if (!(min_improvement >= 0.0)) throw KnowledgeError("min_improvement must be >= 0");
}

KnowledgeBase default_knowledge_base() {
  KnowledgeBase kb;
  AlgorithmEntry kriging;
  kriging.algorithm = surrogates::Algorithm::kriging;
  AlgorithmSetup ka;
  ka.id = "kriging-a";
  ka.model.algorithm = surrogates::Algorithm::kriging;
  AlgorithmSetup kb_setup = ka;
  kb_setup.id = "kriging-b";
  kb_setup.model.kriging.nugget_min = 1e-4;
  kb_setup.infill.criterion = smbo::InfillCriterion::expected_improvement;
  kriging.setups = {ka, kb_setup};

  AlgorithmEntry forest;
  forest.algorithm = surrogates::Algorithm::random_forest;
  AlgorithmSetup fa;
  fa.id = "rf-a";
  fa.model.algorithm = surrogates::Algorithm::random_forest;
  AlgorithmSetup fb = fa;
  fb.id = "rf-b";
  fb.model.forest.n_trees = 50;
  fb.model.forest.min_leaf = 5;
  forest.setups = {fa, fb};

  kb.goals["optimization"] = {kriging, forest};
  kb.bounds["x"] = smbo::Interval{1.0, 10.0};
  return kb;
}

namespace {

AlgorithmSetup parse_setup(const json& j, surrogates::Algorithm algorithm) {
  AlgorithmSetup s;
  s.id = j.at("id").get<std::string>();
  s.model.algorithm = algorithm;
  auto& k = s.model.kriging;
  k.nugget_min = j.value("nugget_min", k.nugget_min);
  k.nugget_max = j.value("nugget_max", k.nugget_max);
  if (j.contains("log10_theta_range")) {
    k.log10_theta_lo = j["log10_theta_range"].at(0).get<double>();
    k.log10_theta_hi = j["log10_theta_range"].at(1).get<double>();
  }
  k.theta_grid = j.value("theta_grid", k.theta_grid);
  k.refine_steps = j.value("refine_steps", k.refine_steps);
  auto& f = s.model.forest;
  f.n_trees = j.value("n_trees", f.n_trees);
  f.min_leaf = j.value("min_leaf", f.min_leaf);
  auto& in = s.infill;
  if (j.contains("infill")) in.criterion = smbo::parse_infill_criterion(j["infill"].get<std::string>());
  in.n_starts = j.value("n_starts", in.n_starts);
  in.max_iter = j.value("max_iter", in.max_iter);
  in.initial_step = j.value("initial_step", in.initial_step);
  in.shrink = j.value("shrink", in.shrink);
  in.tolerance = j.value("tolerance", in.tolerance);
  return s;
}

json setup_json(const AlgorithmSetup& s) {
  json j;
  j["id"] = s.id;
  if (s.model.algorithm == surrogates::Algorithm::kriging) {
    j["nugget_min"] = s.model.kriging.nugget_min;
    j["nugget_max"] = s.model.kriging.nugget_max;
    j["log10_theta_range"] = {s.model.kriging.log10_theta_lo, s.model.kriging.log10_theta_hi};
    j["theta_grid"] = s.model.kriging.theta_grid;
    j["refine_steps"] = s.model.kriging.refine_steps;
  } else {
    j["n_trees"] = s.model.forest.n_trees;
    j["min_leaf"] = s.model.forest.min_leaf;
  }
  j["infill"] = std::string(smbo::to_string(s.infill.criterion));
  j["n_starts"] = s.infill.n_starts;
  j["max_iter"] = s.infill.max_iter;
  j["initial_step"] = s.infill.initial_step;
  j["shrink"] = s.infill.shrink;
  j["tolerance"] = s.infill.tolerance;
  return j;
}

}  // namespace

KnowledgeBase parse_knowledge_base(const std::string& json_text) {
  KnowledgeBase kb;
  try {
    const json j = json::parse(json_text);
    for (const auto& [goal, entries] : j.at("goals").items()) {
      auto& list = kb.goals[goal];
      for (const auto& e : entries) {
        AlgorithmEntry entry;
        entry.algorithm = surrogates::parse_algorithm(e.at("algorithm").get<std::string>());
        for (const auto& s : e.at("setups")) entry.setups.push_back(parse_setup(s, entry.algorithm));
        list.push_back(std::move(entry));
      }
    }
    for (const auto& [name, range] : j.at("bounds").items())
      kb.bounds[name] = smbo::Interval{range.at(0).get<double>(), range.at(1).get<double>()};
    if (j.contains("constraints")) {
      const auto& c = j["constraints"];
      kb.max_corn_g = c.value("max_corn_g", kb.max_corn_g);
      kb.feed_rate_g_per_s = c.value("feed_rate_g_per_s", kb.feed_rate_g_per_s);
    }
    kb.min_improvement = j.value("min_improvement", kb.min_improvement);
  } catch (const json::exception& e) {
    throw KnowledgeError(std::string("knowledge base: ") + e.what());
  } catch (const std::runtime_error& e) {
    throw KnowledgeError(std::string("knowledge base: ") + e.what());
  }
  kb.validate();
  return kb;
}

KnowledgeBase load_knowledge_base(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw KnowledgeError("cannot read knowledge base " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_knowledge_base(ss.str());
}

std::string to_json(const KnowledgeBase& kb) {
  json j;
  j["goals"] = json::object();
  for (const auto& [goal, entries] : kb.goals) {
    json list = json::array();
    for (const auto& e : entries) {
      json setups = json::array();
      for (const auto& s : e.setups) setups.push_back(setup_json(s));
      list.push_back({{"algorithm", std::string(surrogates::to_string(e.algorithm))},
                      {"setups", setups}});
    }
    j["goals"][goal] = list;
  }
  j["bounds"] = json::object();
  for (const auto& [name, b] : kb.bounds) j["bounds"][name] = {b.lo, b.hi};
  j["constraints"] = {{"max_corn_g", kb.max_corn_g}, {"feed_rate_g_per_s", kb.feed_rate_g_per_s}};
  j["min_improvement"] = kb.min_improvement;
  return j.dump(2);
}

std::vector<AlgorithmEntry> feasible_algorithms(const Goal& goal, const KnowledgeBase& kb) {
  auto it = kb.goals.find(goal.kind);
  if (it == kb.goals.end()) return {};
  return it->second;
}

ConstraintCheck check_constraints(double x, const KnowledgeBase& kb) {
  auto it = kb.bounds.find("x");
  if (it == kb.bounds.end()) return {false, "no bounds for parameter x"};
  if (!std::isfinite(x) || x < it->second.lo || x > it->second.hi) {
    std::ostringstream msg;
    msg << "x=" << x << " outside [" << it->second.lo << ", " << it->second.hi << "]";
    return {false, msg.str()};
  }
  if (kb.feed_rate_g_per_s * x > kb.max_corn_g) return {false, "too much corn"};
  return {true, {}};
}

AdaptionDecision decide_adaption(double current_best_y, double candidate_x, double predicted_y,
                                 const KnowledgeBase& kb, int cycle,
                                 const std::string& pipeline_id) {
  const double gain = current_best_y - predicted_y;
  AdaptionDecision d;
  if (gain >= kb.min_improvement) {
    d.command = AdaptionCommand{"x", candidate_x, cycle, pipeline_id};
    d.reason = "predicted improvement " + std::to_string(gain);
  } else {
    d.reason = "predicted improvement " + std::to_string(gain) + " below minimum " +
               std::to_string(kb.min_improvement);
  }
  return d;
}

}  // namespace caai::conceptual
