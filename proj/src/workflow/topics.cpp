#include "caai/workflow/topics.hpp"

namespace caai::workflow::topics {

using bus::BusClass;
using bus::FieldKind;
using bus::FieldSpec;

const std::vector<TopicDef>& topic_table() {
  static const std::vector<TopicDef> table = {
      {raw_data, BusClass::data},
      {preprocessed_data, BusClass::data},
      {adaption_ack, BusClass::data},
      {model_request, BusClass::analytics},
      {model_ready, BusClass::analytics},
      {optimization_result, BusClass::analytics},
      {pipeline_selected, BusClass::analytics},
      {drift_event, BusClass::analytics},
      {recalibration_event, BusClass::analytics},
      {adaption_decision, BusClass::analytics},
      {reports, BusClass::knowledge},
  };
  return table;
}

std::vector<bus::Schema> default_schemas() {
  const FieldSpec cycle{"cycle", FieldKind::integer, true};
  const FieldSpec pipeline{"pipeline_id", FieldKind::text, true};
  auto real = [](const char* n) { return FieldSpec{n, FieldKind::real, true}; };
  auto integer = [](const char* n) { return FieldSpec{n, FieldKind::integer, true}; };
  auto text = [](const char* n, bool required = true) { return FieldSpec{n, FieldKind::text, required}; };

  return {
      {raw_data, 1, {cycle, real("x"), real("f1"), real("f2"), real("f3"), real("popped"), integer("box_filled")}},
      {preprocessed_data, 1, {cycle, real("x"), real("y")}},
      {adaption_ack, 1, {cycle, integer("accepted"), real("x"), text("reason", false)}},
      {model_request, 1, {cycle, integer("window")}},
      {model_ready, 1, {pipeline, cycle, integer("n_points"), integer("model_bytes")}},
      {optimization_result, 1,
       {pipeline, cycle, real("x_candidate"), real("predicted_optimum"), real("cpu_ms"),
        integer("model_bytes"), real("pred_error")}},
      {pipeline_selected, 1, {cycle, pipeline, text("phase"), integer("selection"), real("score")}},
      {drift_event, 1, {cycle, pipeline, real("median_error"), real("baseline")}},
      {recalibration_event, 1, {cycle, integer("count"), integer("window")}},
      {adaption_decision, 1,
       {cycle, pipeline, integer("issued"), real("value"), real("predicted"), real("reference"),
        text("reason")}},
      {reports, 1, {cycle, text("text")}},
  };
}

void setup_bus(bus::Broker& broker, const std::optional<std::filesystem::path>& schema_dir) {
  for (const auto& t : topic_table()) broker.create_topic(t.name, t.bus_class);
  if (schema_dir) {
    bus::load_schema_dir(broker, *schema_dir);
  } else {
    for (auto& s : default_schemas()) broker.register_schema(s.topic, std::move(s.fields));
  }
  for (const auto& t : topic_table())
    if (broker.schema_versions(t.name) == 0)
      throw bus::BusError(bus::BusError::Code::no_schema, "no schema for topic " + t.name);
}

}  // namespace caai::workflow::topics
