#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace slope::stats {

//! Replicate squared errors for one (condition, method) pair.
struct ConditionResult {
  std::string condition_id;
  std::string method;
  std::vector<double> sq_errors;

  double mse() const;
};

//! Two-sided p-value for mean(a - b) = 0, Student t with n-1 degrees of
//! freedom. Degenerate zero-variance differences give p = 0 when the mean is
//! nonzero and p = 1 when every difference is zero.
double paired_t_test(std::span<const double> a, std::span<const double> b);

struct EcdfSeries {
  std::string method;
  std::vector<std::pair<double, double>> points;  // (normalized mse, cumulative fraction)
};

//! Per condition, divide each method's MSE by that condition's worst MSE; emit
//! each method's empirical CDF of the normalized values. Every condition must
//! carry every method.
std::vector<EcdfSeries> normalized_mse_ecdf(const std::vector<ConditionResult>& results);

struct PairwiseMatrix {
  std::vector<std::string> methods;
  std::vector<std::vector<double>> fractions;  // [i][j]: i significantly beats j
  std::vector<double> column_means;
};

//! fractions[i][j] = share of conditions where method i's replicate squared
//! errors beat method j's under a paired t-test at level alpha with
//! mse(i) < mse(j). Replicates must be seed-paired across methods.
PairwiseMatrix pairwise_matrix(const std::vector<ConditionResult>& results, double alpha = 0.05);

}  // namespace slope::stats
