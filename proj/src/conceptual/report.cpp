#include "caai/conceptual/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

namespace caai::conceptual {

std::string format_double(double v) {
  if (v == 0.0) return "0";  // folds -0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

std::string to_csv_row(const CycleRecord& r) {
  std::string s = std::to_string(r.cycle);
  s += ',';
  s += r.pipeline_id;
  for (const auto* v : {&r.x, &r.y, &r.predicted_optimum, &r.pred_error, &r.cpu_ms}) {
    s += ',';
    s += opt(*v);
  }
  s += ',';
  if (r.model_bytes) s += std::to_string(*r.model_bytes);
  s += r.selected ? ",1" : ",0";
  s += r.adapted ? ",1" : ",0";
  s += r.drift ? ",1" : ",0";
  return s;
}

void ReportLog::record_cycle(CycleRecord record) {
  if (record.pipeline_id.empty()) throw ReportError("pipeline id must be non-empty");
  if (record.pipeline_id.find_first_of(",\n\"") != std::string::npos)
    throw ReportError("pipeline id '" + record.pipeline_id + "' is not CSV-safe");
  auto key = std::make_pair(record.cycle, record.pipeline_id);
  if (records_.count(key))
    throw ReportError("duplicate record for cycle " + std::to_string(record.cycle) +
                      ", pipeline " + record.pipeline_id);
  records_.emplace(std::move(key), std::move(record));
}

bool ReportLog::contains(int cycle, const std::string& pipeline_id) const {
  return records_.count({cycle, pipeline_id}) > 0;
}

const CycleRecord* ReportLog::find(int cycle, const std::string& pipeline_id) const {
  auto it = records_.find({cycle, pipeline_id});
  return it == records_.end() ? nullptr : &it->second;
}

std::vector<CycleRecord> ReportLog::records() const {
  std::vector<CycleRecord> out;
  out.reserve(records_.size());
  for (const auto& [key, r] : records_) out.push_back(r);
  return out;
}

void ReportLog::write_csv(std::ostream& out) const {
  out << kReportHeader << '\n';
  for (const auto& [key, r] : records_) out << to_csv_row(r) << '\n';
}

void ReportLog::export_report(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ReportError("cannot write " + path.string());
  write_csv(out);
  if (!out) throw ReportError("write failed for " + path.string());
}

}  // namespace caai::conceptual
