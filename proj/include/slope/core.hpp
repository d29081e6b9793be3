#pragma once

#include <cstddef>
#include <vector>

namespace slope {

//! One candidate estimator: a point estimate and a confidence half-width.
//! The half-width bounds the estimate's deviation from its own expectation
//! (it does not account for bias).
struct EstimatorEntry {
  double estimate = 0.0;
  double cnf = 0.0;
};

//! Ordered candidate set. Index 1 carries the lowest presumed bias; the
//! selection rule requires nonincreasing cnf over the index (callers can run
//! raw widths through enforce_monotone_cnf first).
struct EstimatorBundle {
  std::vector<EstimatorEntry> entries;

  std::size_t size() const { return entries.size(); }
  std::vector<double> estimates() const;
  std::vector<double> cnfs() const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

struct SelectionResult {
  std::size_t chosen_index = 0;  // 1-based
  double chosen_estimate = 0.0;
  std::vector<Interval> intervals;             // one per candidate
  std::vector<Interval> running_intersection;  // prefix intersections up to chosen_index
};

//! Bookkeeping for the selection guarantee. bias(i) is a monotone upper bound
//! on each candidate's bias; the selection rule itself never reads it.
struct OracleDiagnostics {
  double kappa = 1.0;
  std::vector<double> bias;
  double bound = 0.0;
};

//! Intervals [estimate - 2 cnf, estimate + 2 cnf]; width exactly 4 cnf.
std::vector<Interval> build_intervals(const EstimatorBundle& bundle);

//! Suffix maximum: the smallest nonincreasing sequence dominating `raw`
//! pointwise. Inflates earlier widths, never deflates later ones, so a valid
//! deviation bound stays valid.
std::vector<double> enforce_monotone_cnf(const std::vector<double>& raw);

//! Largest index whose prefix interval intersection is nonempty. Intervals are
//! closed: touching endpoints count as intersecting, with no epsilon slack.
//! Throws std::invalid_argument when the cnf sequence is not nonincreasing.
SelectionResult select(const EstimatorBundle& bundle);

//! Largest kappa with kappa * cnf(i) <= cnf(i+1) for all i; 1 when M == 1.
//! Inputs must be strictly positive.
double kappa_of(const std::vector<double>& cnf);

//! 6 (1 + 1/kappa) * min_i { bias(i) + cnf(i) }.
double oracle_bound(const EstimatorBundle& bundle, const std::vector<double>& bias, double kappa);

OracleDiagnostics oracle_diagnostics(const EstimatorBundle& bundle, const std::vector<double>& bias,
                                     double kappa);

//! Which confidence half-widths an adaptive selector should use: closed-form
//! deviation bounds or twice the empirical standard error.
enum class CnfMode { theoretical, empirical };

}  // namespace slope
