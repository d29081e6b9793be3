#include "slope/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace slope::stats {

double ConditionResult::mse() const {
  if (sq_errors.empty()) throw std::invalid_argument("ConditionResult: no replicates");
  double sum = 0.0;
  for (double v : sq_errors) sum += v;
  return sum / static_cast<double>(sq_errors.size());
}

double paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired_t_test: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("paired_t_test: need at least two pairs");
  const double n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  if (ss == 0.0) return mean == 0.0 ? 1.0 : 0.0;
  double t = mean / std::sqrt(ss / (n - 1.0) / n);
  boost::math::students_t dist(n - 1.0);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

namespace {

struct Grouped {
  std::vector<std::string> methods;                       // first-appearance order
  std::vector<std::string> conditions;                    // first-appearance order
  // per condition: method index -> ConditionResult pointer
  std::vector<std::vector<const ConditionResult*>> cells;
};

Grouped group_by_condition(const std::vector<ConditionResult>& results) {
  Grouped g;
  std::map<std::string, std::size_t> method_index;
  std::map<std::string, std::size_t> condition_index;
  for (const ConditionResult& r : results) {
    if (!method_index.contains(r.method)) {
      method_index[r.method] = g.methods.size();
      g.methods.push_back(r.method);
    }
    if (!condition_index.contains(r.condition_id)) {
      condition_index[r.condition_id] = g.conditions.size();
      g.conditions.push_back(r.condition_id);
    }
  }
  g.cells.assign(g.conditions.size(),
                 std::vector<const ConditionResult*>(g.methods.size(), nullptr));
  for (const ConditionResult& r : results) {
    g.cells[condition_index[r.condition_id]][method_index[r.method]] = &r;
  }
  for (std::size_t c = 0; c < g.conditions.size(); ++c) {
    for (std::size_t m = 0; m < g.methods.size(); ++m) {
      if (g.cells[c][m] == nullptr) {
        throw std::invalid_argument("missing method '" + g.methods[m] + "' in condition '" +
                                    g.conditions[c] + "'");
      }
    }
  }
  return g;
}

}  // namespace

std::vector<EcdfSeries> normalized_mse_ecdf(const std::vector<ConditionResult>& results) {
  Grouped g = group_by_condition(results);
  std::vector<std::vector<double>> normalized(g.methods.size());
  for (std::size_t c = 0; c < g.conditions.size(); ++c) {
    double worst = 0.0;
    for (std::size_t m = 0; m < g.methods.size(); ++m) {
      worst = std::max(worst, g.cells[c][m]->mse());
    }
    for (std::size_t m = 0; m < g.methods.size(); ++m) {
      normalized[m].push_back(worst > 0.0 ? g.cells[c][m]->mse() / worst : 1.0);
    }
  }
  std::vector<EcdfSeries> out;
  for (std::size_t m = 0; m < g.methods.size(); ++m) {
    EcdfSeries series;
    series.method = g.methods[m];
    std::sort(normalized[m].begin(), normalized[m].end());
    double count = static_cast<double>(normalized[m].size());
    for (std::size_t k = 0; k < normalized[m].size(); ++k) {
      series.points.emplace_back(normalized[m][k], static_cast<double>(k + 1) / count);
    }
    out.push_back(std::move(series));
  }
  return out;
}

PairwiseMatrix pairwise_matrix(const std::vector<ConditionResult>& results, double alpha) {
  Grouped g = group_by_condition(results);
  const std::size_t m_count = g.methods.size();

  for (std::size_t c = 0; c < g.conditions.size(); ++c) {
    std::size_t reps = g.cells[c][0]->sq_errors.size();
    for (std::size_t m = 1; m < m_count; ++m) {
      if (g.cells[c][m]->sq_errors.size() != reps) {
        throw std::invalid_argument("pairwise_matrix: replicate counts differ within condition '" +
                                    g.conditions[c] + "'");
      }
    }
  }

  PairwiseMatrix out;
  out.methods = g.methods;
  out.fractions.assign(m_count, std::vector<double>(m_count, 0.0));
  for (std::size_t i = 0; i < m_count; ++i) {
    for (std::size_t j = 0; j < m_count; ++j) {
      if (i == j) continue;
      std::size_t wins = 0;
      for (std::size_t c = 0; c < g.conditions.size(); ++c) {
        const ConditionResult& a = *g.cells[c][i];
        const ConditionResult& b = *g.cells[c][j];
        double p = paired_t_test(a.sq_errors, b.sq_errors);
        if (p < alpha && a.mse() < b.mse()) ++wins;
      }
      out.fractions[i][j] = static_cast<double>(wins) / static_cast<double>(g.conditions.size());
    }
  }
  out.column_means.assign(m_count, 0.0);
  for (std::size_t j = 0; j < m_count; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m_count; ++i) sum += out.fractions[i][j];
    out.column_means[j] = sum / static_cast<double>(m_count);
  }
  return out;
}

}  // namespace slope::stats
