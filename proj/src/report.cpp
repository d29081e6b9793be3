#include "slope/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "slope/config.hpp"
#include "slope/stats.hpp"

namespace slope::harness {

ReportKind parse_report_kind(const std::string& name) {
  if (name == "ecdf") return ReportKind::ecdf;
  if (name == "pairwise") return ReportKind::pairwise;
  if (name == "learning_curve") return ReportKind::learning_curve;
  if (name == "summary_table") return ReportKind::summary_table;
  throw std::invalid_argument("report: unknown kind '" + name + "'");
}

namespace {

long samples_of(const std::string& condition_id) {
  std::size_t pos = condition_id.rfind(";n=");
  if (pos == std::string::npos) {
    throw std::invalid_argument("report: condition id lacks a sample-size field: " + condition_id);
  }
  return std::stol(condition_id.substr(pos + 3));
}

std::string render_ecdf(const std::vector<RunRecord>& records) {
  auto series = stats::normalized_mse_ecdf(group_condition_results(records));
  std::ostringstream out;
  out << "method,x,y\n";
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      out << s.method << ',' << format_double(x) << ',' << format_double(y) << '\n';
    }
  }
  return out.str();
}

std::string render_pairwise(const std::vector<RunRecord>& records, double alpha) {
  stats::PairwiseMatrix matrix = stats::pairwise_matrix(group_condition_results(records), alpha);
  std::ostringstream out;
  out << "method";
  for (const std::string& m : matrix.methods) out << ',' << m;
  out << '\n';
  for (std::size_t i = 0; i < matrix.methods.size(); ++i) {
    out << matrix.methods[i];
    for (double v : matrix.fractions[i]) out << ',' << format_double(v);
    out << '\n';
  }
  out << "column_mean";
  for (double v : matrix.column_means) out << ',' << format_double(v);
  out << '\n';
  return out.str();
}

std::string render_learning_curve(const std::vector<RunRecord>& records) {
  // Pool replicate squared errors by (sample size, method). Intended for
  // configs whose conditions differ only in n.
  std::map<long, std::map<std::string, std::vector<double>>> grouped;
  std::vector<std::string> method_order;
  for (const RunRecord& r : records) {
    auto& bucket = grouped[samples_of(r.condition_id)][r.method];
    if (bucket.empty() &&
        std::find(method_order.begin(), method_order.end(), r.method) == method_order.end()) {
      method_order.push_back(r.method);
    }
    bucket.push_back(r.sq_error);
  }
  std::ostringstream out;
  out << "n,method,mse,se2\n";
  for (const auto& [n, by_method] : grouped) {
    for (const std::string& method : method_order) {
      auto it = by_method.find(method);
      if (it == by_method.end()) continue;
      const std::vector<double>& errs = it->second;
      double mean = 0.0;
      for (double v : errs) mean += v;
      mean /= static_cast<double>(errs.size());
      double ss = 0.0;
      for (double v : errs) ss += (v - mean) * (v - mean);
      double se = errs.size() > 1
                      ? std::sqrt(ss / static_cast<double>(errs.size() - 1) /
                                  static_cast<double>(errs.size()))
                      : 0.0;
      out << n << ',' << method << ',' << format_double(mean) << ',' << format_double(2.0 * se)
          << '\n';
    }
  }
  return out.str();
}

std::string render_summary(const std::vector<RunRecord>& records) {
  struct Cell {
    std::vector<double> sq_errors;
    double param_sum = 0.0;
    long param_count = 0;
  };
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  std::vector<std::pair<std::pair<std::string, std::string>, Cell>> cells;
  for (const RunRecord& r : records) {
    auto key = std::make_pair(r.condition_id, r.method);
    auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(key, cells.size());
      cells.push_back({key, {}});
      it = index.find(key);
    }
    Cell& cell = cells[it->second].second;
    cell.sq_errors.push_back(r.sq_error);
    if (r.chosen_param) {
      cell.param_sum += *r.chosen_param;
      cell.param_count += 1;
    }
  }
  std::ostringstream out;
  out << "condition_id,method,replicates,mse,mean_chosen_param\n";
  for (const auto& [key, cell] : cells) {
    double mean = 0.0;
    for (double v : cell.sq_errors) mean += v;
    mean /= static_cast<double>(cell.sq_errors.size());
    out << key.first << ',' << key.second << ',' << cell.sq_errors.size() << ','
        << format_double(mean) << ',';
    if (cell.param_count > 0) out << format_double(cell.param_sum / cell.param_count);
    out << '\n';
  }
  return out.str();
}

}  // namespace

std::string render_report(const std::vector<RunRecord>& records, ReportKind kind, double alpha) {
  if (records.empty()) throw std::invalid_argument("report: no records");
  switch (kind) {
    case ReportKind::ecdf: return render_ecdf(records);
    case ReportKind::pairwise: return render_pairwise(records, alpha);
    case ReportKind::learning_curve: return render_learning_curve(records);
    case ReportKind::summary_table: return render_summary(records);
  }
  throw std::logic_error("report: unreachable");
}

void write_report(const std::vector<RunRecord>& records, ReportKind kind,
                  const std::string& out_path, double alpha) {
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw std::runtime_error("report: cannot write " + out_path);
  out << render_report(records, kind, alpha);
}

}  // namespace slope::harness
