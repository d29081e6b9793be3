#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slope/stats.hpp"

namespace slope::harness {

//! One method evaluation on one replicate's logged data.
struct RunRecord {
  std::string condition_id;
  std::string method;
  long replicate = 0;
  std::uint64_t seed = 0;
  double estimate = 0.0;
  double truth = 0.0;
  double sq_error = 0.0;
  std::optional<double> chosen_param;  // bandwidth or false horizon, when applicable
  long wall_ms = 0;
};

std::string record_csv_header();
std::string to_csv_line(const RunRecord& record);

//! Lenient reader: skips malformed lines (torn writes in partial files).
std::vector<RunRecord> read_records_csv(const std::string& path);
void write_records_csv(const std::string& path, const std::vector<RunRecord>& records);

//! Collect per-(condition, method) replicate squared errors, ordered by
//! replicate index; condition and method order follows first appearance.
std::vector<stats::ConditionResult> group_condition_results(const std::vector<RunRecord>& records);

}  // namespace slope::harness
