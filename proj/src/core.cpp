#include "slope/core.hpp"

#include <algorithm>
#include <stdexcept>

namespace slope {

namespace {

void check_bundle(const EstimatorBundle& bundle) {
  if (bundle.entries.empty()) {
    throw std::invalid_argument("estimator bundle must contain at least one entry");
  }
  for (const auto& e : bundle.entries) {
    if (e.cnf < 0.0) {
      throw std::invalid_argument("confidence half-widths must be nonnegative");
    }
  }
}

}  // namespace

std::vector<double> EstimatorBundle::estimates() const {
  std::vector<double> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.estimate);
  return out;
}

std::vector<double> EstimatorBundle::cnfs() const {
  std::vector<double> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.cnf);
  return out;
}

std::vector<Interval> build_intervals(const EstimatorBundle& bundle) {
  check_bundle(bundle);
  std::vector<Interval> out;
  out.reserve(bundle.size());
  for (const auto& e : bundle.entries) {
    out.push_back({e.estimate - 2.0 * e.cnf, e.estimate + 2.0 * e.cnf});
  }
  return out;
}

std::vector<double> enforce_monotone_cnf(const std::vector<double>& raw) {
  if (raw.empty()) {
    throw std::invalid_argument("enforce_monotone_cnf: empty input");
  }
  for (double v : raw) {
    if (v < 0.0) throw std::invalid_argument("enforce_monotone_cnf: negative width");
  }
  std::vector<double> out(raw.size());
  double running = 0.0;
  for (std::size_t i = raw.size(); i-- > 0;) {
    running = std::max(running, raw[i]);
    out[i] = running;
  }
  return out;
}

SelectionResult select(const EstimatorBundle& bundle) {
  check_bundle(bundle);
  for (std::size_t i = 0; i + 1 < bundle.size(); ++i) {
    if (bundle.entries[i + 1].cnf > bundle.entries[i].cnf) {
      throw std::invalid_argument("select: cnf sequence must be nonincreasing");
    }
  }

  SelectionResult result;
  result.intervals = build_intervals(bundle);

  double lo = result.intervals[0].lo;
  double hi = result.intervals[0].hi;
  result.running_intersection.push_back({lo, hi});
  std::size_t chosen = 1;
  for (std::size_t i = 1; i < result.intervals.size(); ++i) {
    lo = std::max(lo, result.intervals[i].lo);
    hi = std::min(hi, result.intervals[i].hi);
    if (lo > hi) break;  // closed intervals: equality still intersects
    result.running_intersection.push_back({lo, hi});
    chosen = i + 1;
  }
  result.chosen_index = chosen;
  result.chosen_estimate = bundle.entries[chosen - 1].estimate;
  return result;
}

double kappa_of(const std::vector<double>& cnf) {
  if (cnf.empty()) {
    throw std::invalid_argument("kappa_of: empty input");
  }
  for (double v : cnf) {
    if (v <= 0.0) throw std::invalid_argument("kappa_of: widths must be strictly positive");
  }
  double kappa = 1.0;
  for (std::size_t i = 0; i + 1 < cnf.size(); ++i) {
    kappa = std::min(kappa, cnf[i + 1] / cnf[i]);
  }
  return kappa;
}

double oracle_bound(const EstimatorBundle& bundle, const std::vector<double>& bias, double kappa) {
  check_bundle(bundle);
  if (kappa <= 0.0) {
    throw std::invalid_argument("oracle_bound: kappa must be positive");
  }
  if (bias.size() != bundle.size()) {
    throw std::invalid_argument("oracle_bound: bias length must match bundle size");
  }
  double best = bias[0] + bundle.entries[0].cnf;
  for (std::size_t i = 1; i < bundle.size(); ++i) {
    best = std::min(best, bias[i] + bundle.entries[i].cnf);
  }
  return 6.0 * (1.0 + 1.0 / kappa) * best;
}

OracleDiagnostics oracle_diagnostics(const EstimatorBundle& bundle, const std::vector<double>& bias,
                                     double kappa) {
  OracleDiagnostics diag;
  diag.kappa = kappa;
  diag.bias = bias;
  diag.bound = oracle_bound(bundle, bias, kappa);
  return diag;
}

}  // namespace slope
