#pragma once

#include "caai/bus/broker.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace caai::workflow::topics {

inline constexpr const char* raw_data = "raw-data";
inline constexpr const char* preprocessed_data = "preprocessed-data";
inline constexpr const char* adaption_ack = "adaption-ack";
inline constexpr const char* model_request = "model-request";
inline constexpr const char* model_ready = "model-ready";
inline constexpr const char* optimization_result = "optimization-result";
inline constexpr const char* pipeline_selected = "pipeline-selected";
inline constexpr const char* drift_event = "drift-event";
inline constexpr const char* recalibration_event = "recalibration-event";
inline constexpr const char* adaption_decision = "adaption-decision";
inline constexpr const char* reports = "reports";

struct TopicDef {
  std::string name;
  bus::BusClass bus_class;
};

const std::vector<TopicDef>& topic_table();

/// Built-in schema for every topic of the table.
std::vector<bus::Schema> default_schemas();

/// Creates every topic and registers its schema, from `schema_dir` when
/// given, otherwise the built-in set. Throws if a topic is left without one.
void setup_bus(bus::Broker& broker, const std::optional<std::filesystem::path>& schema_dir);

}  // namespace caai::workflow::topics
