#pragma once

#include "caai/conceptual/adaption_command.hpp"
#include "caai/smbo/design.hpp"
#include "caai/smbo/infill.hpp"
#include "caai/surrogates/model_setup.hpp"
#include "caai/vps/simulator.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace caai::conceptual {

class KnowledgeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One hyperparameter setup of an algorithm, e.g. "kriging-a".
struct AlgorithmSetup {
  std::string id;
  surrogates::ModelSetup model;
  smbo::InfillSpec infill;
};

struct AlgorithmEntry {
  surrogates::Algorithm algorithm = surrogates::Algorithm::kriging;
  std::vector<AlgorithmSetup> setups;
};

struct Goal {
  std::string kind = "optimization";
  vps::ObjectiveWeights weights;
  std::string direction = "minimize";
};

/// Static algorithm topology and plant limits.
struct KnowledgeBase {
  /// goal kind -> algorithms in declaration order
  std::map<std::string, std::vector<AlgorithmEntry>> goals;
  /// parameter name -> admissible range (inclusive)
  std::map<std::string, smbo::Interval> bounds;
  double max_corn_g = 200.0;
  double feed_rate_g_per_s = 20.0;
  double min_improvement = 0.0;

  void validate() const;
};

/// Two Kriging and two random-forest setups for "optimization".
KnowledgeBase default_knowledge_base();

/// Keys: goals, bounds, constraints, min_improvement.
KnowledgeBase parse_knowledge_base(const std::string& json_text);
KnowledgeBase load_knowledge_base(const std::filesystem::path& path);
std::string to_json(const KnowledgeBase& kb);

/// Empty for an unknown goal kind.
std::vector<AlgorithmEntry> feasible_algorithms(const Goal& goal, const KnowledgeBase& kb);

struct ConstraintCheck {
  bool ok = true;
  std::string reason;
};

ConstraintCheck check_constraints(double x, const KnowledgeBase& kb);

struct AdaptionDecision {
  std::optional<AdaptionCommand> command;
  std::string reason;
};

/// Issues a command iff the predicted gain over the current best reaches the
/// knowledge base's minimum improvement. The candidate must already have
/// passed check_constraints.
AdaptionDecision decide_adaption(double current_best_y, double candidate_x, double predicted_y,
                                 const KnowledgeBase& kb, int cycle,
                                 const std::string& pipeline_id);

}  // namespace caai::conceptual
