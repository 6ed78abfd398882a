#include "caai/conceptual/experience.hpp"

#include "caai/conceptual/knowledge.hpp"

#include "json.hpp"

#include <fstream>

namespace caai::conceptual {

using nlohmann::json;

std::string to_json_line(const ExperienceEntry& e) {
  json j = {{"event", e.event},
            {"repetition", e.repetition},
            {"cycle", e.cycle},
            {"pipeline_id", e.pipeline_id},
            {"algorithm", e.algorithm},
            {"median_pred_error", e.median_pred_error},
            {"median_predicted_optimum", e.median_predicted_optimum},
            {"note", e.note}};
  return j.dump();
}

ExperienceEntry parse_experience_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    ExperienceEntry e;
    e.event = j.at("event").get<std::string>();
    e.repetition = j.at("repetition").get<int>();
    e.cycle = j.at("cycle").get<int>();
    e.pipeline_id = j.at("pipeline_id").get<std::string>();
    e.algorithm = j.value("algorithm", "");
    e.median_pred_error = j.value("median_pred_error", 0.0);
    e.median_predicted_optimum = j.value("median_predicted_optimum", 0.0);
    e.note = j.value("note", "");
    return e;
  } catch (const json::exception& ex) {
    throw KnowledgeError(std::string("experience entry: ") + ex.what());
  }
}

void ExperienceLog::append(const ExperienceEntry& e) const {
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw KnowledgeError("cannot append to " + path_.string());
  out << to_json_line(e) << '\n';
}

std::vector<ExperienceEntry> ExperienceLog::read_all() const {
  std::vector<ExperienceEntry> out;
  std::ifstream in(path_);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(parse_experience_line(line));
  return out;
}

}  // namespace caai::conceptual
