#include "slope/cb_ope.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace slope::cb {

double kernel_eval(Kernel kernel, double u) {
  double au = std::abs(u);
  if (au > 1.0) return 0.0;
  return kernel == Kernel::boxcar ? 0.5 : 0.75 * (1.0 - u * u);
}

double kernel_mass_in_unit(Kernel kernel, double t, double h) {
  if (h <= 0.0) throw std::invalid_argument("kernel_mass_in_unit: h must be positive");
  // Integrate K((a - t)/h)/h over a in [0,1]; substitute u = (a - t)/h.
  double u1 = std::max(-1.0, (0.0 - t) / h);
  double u2 = std::min(1.0, (1.0 - t) / h);
  if (u2 <= u1) return 0.0;
  if (kernel == Kernel::boxcar) return 0.5 * (u2 - u1);
  auto antiderivative = [](double u) { return 0.75 * (u - u * u * u / 3.0); };
  return antiderivative(u2) - antiderivative(u1);
}

std::vector<double> kernel_ips_terms(const CbDataset& data, const DeterministicPolicy& pi_t,
                                     double h, Kernel kernel) {
  if (h <= 0.0) throw std::invalid_argument("kernel_ips_terms: h must be positive");
  if (data.tuples.empty()) throw std::invalid_argument("kernel_ips_terms: empty dataset");
  std::vector<double> terms;
  terms.reserve(data.n());
  for (const CbTuple& tup : data.tuples) {
    if (tup.logging_density <= 0.0) {
      throw std::invalid_argument("kernel_ips_terms: logging density must be positive");
    }
    double t = pi_t.predict(tup.context);
    double k = kernel_eval(kernel, (t - tup.action) / h);
    if (k == 0.0) {
      terms.push_back(0.0);
      continue;
    }
    double mass = kernel_mass_in_unit(kernel, t, h);
    terms.push_back(k * tup.reward / (h * mass * tup.logging_density));
  }
  return terms;
}

double kernel_ips(const CbDataset& data, const DeterministicPolicy& pi_t, double h,
                  Kernel kernel) {
  std::vector<double> terms = kernel_ips_terms(data, pi_t, h, kernel);
  double sum = 0.0;
  for (double v : terms) sum += v;
  double est = sum / static_cast<double>(terms.size());
  return std::min(1.0, std::max(0.0, est));
}

double cnf_cb_theoretical(long n, double h, int m_estimators, double delta, double p_min) {
  if (n < 1) throw std::invalid_argument("cnf_cb_theoretical: n must be at least 1");
  if (h <= 0.0) throw std::invalid_argument("cnf_cb_theoretical: h must be positive");
  if (m_estimators < 1) throw std::invalid_argument("cnf_cb_theoretical: M must be at least 1");
  if (delta <= 0.0 || delta >= 1.0) {
    throw std::invalid_argument("cnf_cb_theoretical: delta must lie in (0,1)");
  }
  if (p_min <= 0.0 || p_min > 1.0) {
    throw std::invalid_argument("cnf_cb_theoretical: p_min must lie in (0,1]");
  }
  double log_term = std::log(2.0 * m_estimators / delta);
  double nh = static_cast<double>(n) * h * p_min;
  double value = std::sqrt(2.0 * log_term / nh) + 2.0 * log_term / (3.0 * nh);
  return std::min(value, 1.0);
}

double cnf_cb_empirical(const CbDataset& data, const DeterministicPolicy& pi_t, double h,
                        Kernel kernel) {
  if (data.n() < 2) throw std::invalid_argument("cnf_cb_empirical: need at least two samples");
  std::vector<double> terms = kernel_ips_terms(data, pi_t, h, kernel);
  double n = static_cast<double>(terms.size());
  double mean = 0.0;
  for (double v : terms) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : terms) ss += (v - mean) * (v - mean);
  double sd = std::sqrt(ss / (n - 1.0));
  return 2.0 * sd / std::sqrt(n);
}

BandwidthGrid BandwidthGrid::geometric(double gamma0, double gamma, int m) {
  if (gamma0 <= 0.0 || gamma0 > 1.0) {
    throw std::invalid_argument("BandwidthGrid: gamma0 must lie in (0,1]");
  }
  if (gamma <= 0.0 || gamma >= 1.0) {
    throw std::invalid_argument("BandwidthGrid: gamma must lie in (0,1)");
  }
  if (m < 1) throw std::invalid_argument("BandwidthGrid: need at least one bandwidth");
  BandwidthGrid grid;
  grid.gamma_ratio = gamma;
  grid.bandwidths.resize(static_cast<std::size_t>(m));
  for (int i = 1; i <= m; ++i) {
    grid.bandwidths[static_cast<std::size_t>(i - 1)] = gamma0 * std::pow(gamma, m - i);
  }
  return grid;
}

BandwidthGrid BandwidthGrid::from_list(std::vector<double> ascending) {
  if (ascending.empty()) throw std::invalid_argument("BandwidthGrid: empty bandwidth list");
  for (std::size_t i = 0; i < ascending.size(); ++i) {
    if (ascending[i] <= 0.0 || ascending[i] > 1.0) {
      throw std::invalid_argument("BandwidthGrid: bandwidths must lie in (0,1]");
    }
    if (i > 0 && ascending[i] <= ascending[i - 1]) {
      throw std::invalid_argument("BandwidthGrid: bandwidths must be strictly increasing");
    }
  }
  BandwidthGrid grid;
  grid.bandwidths = std::move(ascending);
  return grid;
}

BandwidthSelection slope_bandwidth(const CbDataset& data, const DeterministicPolicy& pi_t,
                                   const BandwidthGrid& grid, Kernel kernel, CnfMode cnf_mode,
                                   double delta, double p_min) {
  if (grid.bandwidths.empty()) throw std::invalid_argument("slope_bandwidth: empty grid");
  const int m = static_cast<int>(grid.size());

  std::vector<double> raw_cnf(grid.size());
  EstimatorBundle bundle;
  bundle.entries.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double h = grid.bandwidths[i];
    bundle.entries[i].estimate = kernel_ips(data, pi_t, h, kernel);
    // The empirical width is the full two-standard-error band; the selection
    // interval spans estimate +- 2 cnf, so halve it to make the interval
    // coincide with that band. The theoretical width is a deviation bound and
    // enters as is.
    raw_cnf[i] = cnf_mode == CnfMode::theoretical
                     ? cnf_cb_theoretical(static_cast<long>(data.n()), h, m, delta, p_min)
                     : 0.5 * cnf_cb_empirical(data, pi_t, h, kernel);
  }
  std::vector<double> cnf = enforce_monotone_cnf(raw_cnf);
  for (std::size_t i = 0; i < grid.size(); ++i) bundle.entries[i].cnf = cnf[i];

  BandwidthSelection out;
  out.selection = select(bundle);
  out.estimate = out.selection.chosen_estimate;
  out.chosen_h = grid.bandwidths[out.selection.chosen_index - 1];
  return out;
}

}  // namespace slope::cb
