#pragma once

#include "caai/cognition/cognition.hpp"
#include "caai/conceptual/knowledge.hpp"
#include "caai/smbo/design.hpp"
#include "caai/vps/simulator.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace caai::workflow {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode { deterministic, concurrent };
Mode parse_mode(std::string_view s);  // "det" | "conc"
std::string_view to_string(Mode m);

/// workflow: candidates compete for one plant under the cognition.
/// benchmark: every setup drives its own plant replica, same seeds.
enum class Experiment { workflow, benchmark };
Experiment parse_experiment(std::string_view s);
std::string_view to_string(Experiment e);

struct ExperimentConfig {
  vps::GroundTruthConfig simulator;
  vps::Bounds plant_bounds;
  double initial_x = 1.0;
  std::array<double, 3> weights{1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::string goal = "optimization";
  smbo::DesignSpec design;
  conceptual::KnowledgeBase knowledge = conceptual::default_knowledge_base();
  cognition::CognitionConfig cognition;
  int n_cycles = 20;
  int n_repetitions = 10;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir = "out";
  Mode mode = Mode::deterministic;
  Experiment experiment = Experiment::workflow;
  /// Schemas are loaded from here when set, otherwise the built-in ones.
  std::optional<std::filesystem::path> schema_dir;

  void validate() const;
};

/// Relative paths inside the document resolve against `base_dir`.
ExperimentConfig parse_config(const std::string& json_text,
                              const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace caai::workflow
