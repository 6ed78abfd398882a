#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace caai::bus {

/// Bus class of a topic. Only recorded for reporting.
enum class BusClass { data, analytics, knowledge };

enum class FieldKind { integer, real, text, timestamp, real_array };

std::string_view to_string(BusClass c);
std::string_view to_string(FieldKind k);
BusClass parse_bus_class(std::string_view s);
/// Accepts the wire names "integer", "float", "text", "timestamp", "float-array".
FieldKind parse_field_kind(std::string_view s);

struct Timestamp {
  std::int64_t nanos = 0;
  auto operator<=>(const Timestamp&) const = default;
};

using Value = std::variant<std::int64_t, double, std::string, Timestamp,
                           std::vector<double>>;
using Payload = std::map<std::string, Value, std::less<>>;

FieldKind kind_of(const Value& v);

struct FieldSpec {
  std::string name;
  FieldKind kind = FieldKind::real;
  bool required = true;
};

struct Schema {
  std::string topic;
  int version = 0;
  std::vector<FieldSpec> fields;
};

struct Message {
  std::string topic;
  std::optional<std::string> key;
  Payload payload;
  Timestamp produced_at;
  std::uint64_t offset = 0;
  int schema_version = 0;
};

class BusError : public std::runtime_error {
 public:
  enum class Code {
    duplicate_topic,
    unknown_topic,
    malformed_schema,
    no_schema,
    schema_violation,
    duplicate_member,
    stale_handle,
    invalid_argument,
  };

  BusError(Code code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

/// Returns an empty string when the payload conforms, otherwise the reason.
std::string validate(const Schema& schema, const Payload& payload);

/// Typed payload access; throws BusError(schema_violation) on a missing
/// field or kind mismatch.
template <typename T>
const T& field(const Payload& p, std::string_view name) {
  auto it = p.find(name);
  if (it == p.end())
    throw BusError(BusError::Code::schema_violation,
                   "missing field '" + std::string(name) + "'");
  const T* v = std::get_if<T>(&it->second);
  if (!v)
    throw BusError(BusError::Code::schema_violation,
                   "field '" + std::string(name) + "' has unexpected kind");
  return *v;
}

inline double real_field(const Payload& p, std::string_view name) {
  return field<double>(p, name);
}
inline std::int64_t int_field(const Payload& p, std::string_view name) {
  return field<std::int64_t>(p, name);
}
inline const std::string& text_field(const Payload& p, std::string_view name) {
  return field<std::string>(p, name);
}

}  // namespace caai::bus
