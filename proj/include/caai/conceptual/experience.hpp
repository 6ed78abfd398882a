#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace caai::conceptual {

/// Learned meta-knowledge: which pipeline won, or why the cognition
/// re-calibrated, under which process conditions.
struct ExperienceEntry {
  std::string event;  // "selection" | "recalibration"
  int repetition = 0;
  int cycle = 0;
  std::string pipeline_id;
  std::string algorithm;
  double median_pred_error = 0.0;
  double median_predicted_optimum = 0.0;
  std::string note;

  bool operator==(const ExperienceEntry&) const = default;
};

std::string to_json_line(const ExperienceEntry& e);
ExperienceEntry parse_experience_line(const std::string& line);

/// Append-only JSON-lines file. Existing content is never rewritten.
class ExperienceLog {
 public:
  explicit ExperienceLog(std::filesystem::path path) : path_(std::move(path)) {}

  void append(const ExperienceEntry& e) const;
  std::vector<ExperienceEntry> read_all() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace caai::conceptual
