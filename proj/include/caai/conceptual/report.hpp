#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace caai::conceptual {

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kReportHeader =
    "cycle,pipeline_id,x,y,predicted_optimum,pred_error,cpu_ms,model_bytes,selected,adapted,drift";

/// One row per (cycle, pipeline). Model fields stay empty for cycles that
/// belong to the initial design.
struct CycleRecord {
  int cycle = 0;
  std::string pipeline_id;
  std::optional<double> x;
  std::optional<double> y;
  std::optional<double> predicted_optimum;
  std::optional<double> pred_error;
  std::optional<double> cpu_ms;
  std::optional<std::uint64_t> model_bytes;
  bool selected = false;
  bool adapted = false;
  bool drift = false;
};

/// Shortest round-trip decimal form.
std::string format_double(double v);

std::string to_csv_row(const CycleRecord& r);

/// Single-writer run log keyed by (cycle, pipeline_id).
class ReportLog {
 public:
  /// Throws ReportError on a duplicate key.
  void record_cycle(CycleRecord record);

  bool contains(int cycle, const std::string& pipeline_id) const;
  const CycleRecord* find(int cycle, const std::string& pipeline_id) const;
  std::size_t size() const { return records_.size(); }

  /// Sorted by (cycle, pipeline_id).
  std::vector<CycleRecord> records() const;

  void write_csv(std::ostream& out) const;
  void export_report(const std::filesystem::path& path) const;

 private:
  std::map<std::pair<int, std::string>, CycleRecord> records_;
};

}  // namespace caai::conceptual
