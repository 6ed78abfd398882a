#include "caai/bus/message.hpp"

#include <set>

namespace caai::bus {

std::string_view to_string(BusClass c) {
  switch (c) {
    case BusClass::data: return "data";
    case BusClass::analytics: return "analytics";
    case BusClass::knowledge: return "knowledge";
  }
  return "data";
}

std::string_view to_string(FieldKind k) {
  switch (k) {
    case FieldKind::integer: return "integer";
    case FieldKind::real: return "float";
    case FieldKind::text: return "text";
    case FieldKind::timestamp: return "timestamp";
    case FieldKind::real_array: return "float-array";
  }
  return "float";
}

BusClass parse_bus_class(std::string_view s) {
  if (s == "data") return BusClass::data;
  if (s == "analytics") return BusClass::analytics;
  if (s == "knowledge") return BusClass::knowledge;
  throw BusError(BusError::Code::invalid_argument,
                 "unknown bus class '" + std::string(s) + "'");
}

FieldKind parse_field_kind(std::string_view s) {
  if (s == "integer") return FieldKind::integer;
  if (s == "float") return FieldKind::real;
  if (s == "text") return FieldKind::text;
  if (s == "timestamp") return FieldKind::timestamp;
  if (s == "float-array") return FieldKind::real_array;
  throw BusError(BusError::Code::malformed_schema,
                 "unknown field kind '" + std::string(s) + "'");
}

FieldKind kind_of(const Value& v) {
  switch (v.index()) {
    case 0: return FieldKind::integer;
    case 1: return FieldKind::real;
    case 2: return FieldKind::text;
    case 3: return FieldKind::timestamp;
    default: return FieldKind::real_array;
  }
}

std::string validate(const Schema& schema, const Payload& payload) {
  std::set<std::string_view> known;
  for (const auto& f : schema.fields) {
    known.insert(f.name);
    auto it = payload.find(f.name);
    if (it == payload.end()) {
      if (f.required) return "missing required field '" + f.name + "'";
      continue;
    }
    if (kind_of(it->second) != f.kind)
      return "field '" + f.name + "' expected " + std::string(to_string(f.kind)) +
             ", got " + std::string(to_string(kind_of(it->second)));
  }
  for (const auto& [name, _] : payload)
    if (!known.count(name)) return "undeclared field '" + name + "'";
  return {};
}

}  // namespace caai::bus
