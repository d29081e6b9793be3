#pragma once

#include <vector>

#include "slope/cb_sim.hpp"
#include "slope/core.hpp"

namespace slope::cb {

enum class Kernel { boxcar, epanechnikov };

//! boxcar: 0.5 on |u| <= 1; epanechnikov: 0.75 (1 - u^2) on |u| <= 1.
double kernel_eval(Kernel kernel, double u);

//! Mass of the h-scaled kernel centered at t that falls inside [0,1]; 1 in the
//! interior, < 1 near the boundary. Used to renormalize boundary-clipped
//! kernels instead of restricting the target policy to the interior.
double kernel_mass_in_unit(Kernel kernel, double t, double h);

//! Per-sample kernel importance-weighting terms
//!   K(|pi_T(x_i) - a_i| / h) r_i / (h Z_i pi_L(a_i))
//! with Z_i the boundary renormalizer for the sample's kernel placement.
std::vector<double> kernel_ips_terms(const CbDataset& data, const DeterministicPolicy& pi_t,
                                     double h, Kernel kernel);

//! Mean of the per-sample terms, clipped to [0,1].
double kernel_ips(const CbDataset& data, const DeterministicPolicy& pi_t, double h, Kernel kernel);

//! Bernstein-style deviation bound sqrt(2 log(2M/delta) / (n h p_min))
//!   + 2 log(2M/delta) / (3 n h p_min), capped at 1 (estimates are clipped to
//! [0,1], so 1 is always a valid half-width). Uniform logging has p_min = 1.
double cnf_cb_theoretical(long n, double h, int m_estimators, double delta, double p_min = 1.0);

//! Twice the standard error of the per-sample terms (n-1 variance denominator).
double cnf_cb_empirical(const CbDataset& data, const DeterministicPolicy& pi_t, double h,
                        Kernel kernel);

//! Candidate bandwidths sorted ascending, so index 1 is the smallest bandwidth
//! (lowest bias, widest confidence), matching the ordering select() expects.
struct BandwidthGrid {
  std::vector<double> bandwidths;
  double gamma_ratio = 0.0;  // set when built geometrically

  //! { gamma0 * gamma^(M-i) : i = 1..M }, ascending.
  static BandwidthGrid geometric(double gamma0, double gamma, int m);
  static BandwidthGrid from_list(std::vector<double> ascending);

  std::size_t size() const { return bandwidths.size(); }
};

struct BandwidthSelection {
  double estimate = 0.0;
  double chosen_h = 0.0;
  SelectionResult selection;
};

//! Evaluate the kernel estimator across the grid, attach confidence
//! half-widths, enforce monotonicity, and run interval-intersection selection.
BandwidthSelection slope_bandwidth(const CbDataset& data, const DeterministicPolicy& pi_t,
                                   const BandwidthGrid& grid, Kernel kernel, CnfMode cnf_mode,
                                   double delta = 0.05, double p_min = 1.0);

}  // namespace slope::cb
