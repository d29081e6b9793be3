#include "slope/records.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "slope/config.hpp"

namespace slope::harness {

std::string record_csv_header() {
  return "condition_id,method,replicate,seed,estimate,truth,sq_error,chosen_param,wall_ms";
}

std::string to_csv_line(const RunRecord& r) {
  std::string line;
  line.reserve(128);
  line += r.condition_id;
  line += ',';
  line += r.method;
  line += ',';
  line += std::to_string(r.replicate);
  line += ',';
  line += std::to_string(r.seed);
  line += ',';
  line += format_double(r.estimate);
  line += ',';
  line += format_double(r.truth);
  line += ',';
  line += format_double(r.sq_error);
  line += ',';
  if (r.chosen_param) line += format_double(*r.chosen_param);
  line += ',';
  line += std::to_string(r.wall_ms);
  return line;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_record(const std::string& line, RunRecord& r) {
  std::vector<std::string> f = split_csv(line);
  if (f.size() != 9) return false;
  r.condition_id = f[0];
  r.method = f[1];
  try {
    r.replicate = std::stol(f[2]);
    r.seed = std::stoull(f[3]);
    r.wall_ms = std::stol(f[8]);
  } catch (const std::exception&) {
    return false;
  }
  if (!parse_double(f[4], r.estimate) || !parse_double(f[5], r.truth) ||
      !parse_double(f[6], r.sq_error)) {
    return false;
  }
  if (f[7].empty()) {
    r.chosen_param.reset();
  } else {
    double v = 0.0;
    if (!parse_double(f[7], v)) return false;
    r.chosen_param = v;
  }
  return true;
}

}  // namespace

std::vector<RunRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("records: cannot open " + path);
  std::vector<RunRecord> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first && line == record_csv_header()) {
      first = false;
      continue;
    }
    first = false;
    if (line.empty()) continue;
    RunRecord r;
    if (parse_record(line, r)) out.push_back(std::move(r));
  }
  return out;
}

void write_records_csv(const std::string& path, const std::vector<RunRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("records: cannot write " + path);
  out << record_csv_header() << '\n';
  for (const RunRecord& r : records) out << to_csv_line(r) << '\n';
}

std::vector<stats::ConditionResult> group_condition_results(
    const std::vector<RunRecord>& records) {
  std::vector<stats::ConditionResult> out;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (const RunRecord& r : records) {
    auto key = std::make_pair(r.condition_id, r.method);
    auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(key, out.size());
      out.push_back({r.condition_id, r.method, {r.sq_error}});
    } else {
      out[it->second].sq_errors.push_back(r.sq_error);
    }
  }
  return out;
}

}  // namespace slope::harness
