#pragma once

#include <optional>
#include <vector>

#include "slope/core.hpp"
#include "slope/rl_env.hpp"

namespace slope::rl {

struct EnvDims {
  int num_obs = 0;
  int num_actions = 0;
  int horizon = 0;
  double gamma = 0.0;

  static EnvDims of(const TabularEnv& env) {
    return {env.num_obs, env.num_actions, env.horizon, env.gamma};
  }
};

//! Time-indexed tabular action-value model over observations. Models are
//! indexed by observation (not state), so partial observability shows up as
//! model bias rather than being assumed away.
class DirectModel {
 public:
  DirectModel(int num_obs, int horizon, int num_actions);
  explicit DirectModel(const EnvDims& dims) : DirectModel(dims.num_obs, dims.horizon, dims.num_actions) {}

  static DirectModel zero(const EnvDims& dims) { return DirectModel(dims); }

  double q(int obs, int t, int a) const { return table_[index(obs, t, a)]; }
  void set_q(int obs, int t, int a, double value) { table_[index(obs, t, a)] = value; }

  //! State value under the target policy: sum_a pi(a|obs,t) q(obs,t,a).
  double v(int obs, int t, const TabularPolicy& pi) const;

  int num_obs() const { return num_obs_; }
  int horizon() const { return horizon_; }
  int num_actions() const { return num_actions_; }

 private:
  int num_obs_;
  int horizon_;
  int num_actions_;
  std::vector<double> table_;

  std::size_t index(int obs, int t, int a) const;
};

//! Fitted Q evaluation: backward recursion with empirical means as the
//! regression step. Unvisited (obs, step, action) cells stay 0.
DirectModel fit_fqe(const std::vector<Trajectory>& trajectories, const TabularPolicy& pi_t,
                    const EnvDims& dims);

//! Lambda-return evaluation: per-trajectory lambda-mixed returns averaged per
//! (obs, step, action). lambda = 0 reduces to one-step bootstrapped targets,
//! lambda = 1 to full Monte-Carlo returns.
DirectModel fit_qpi_lambda(const std::vector<Trajectory>& trajectories, const TabularPolicy& pi_t,
                           double lambda, const EnvDims& dims);

//! Maximum-likelihood tabular model over observations (counted transitions,
//! mean rewards), evaluated for pi_t by exact backward induction in the
//! fitted model. Unvisited rows fall back to a uniform next-observation
//! distribution with zero reward.
DirectModel fit_mle_model(const std::vector<Trajectory>& trajectories, const TabularPolicy& pi_t,
                          const EnvDims& dims);

//! Step-wise importance sampling:
//!   1/n sum_i sum_h gamma^(h-1) rho_{i,h} r_{i,h}.
double ips(const std::vector<Trajectory>& trajectories, const TabularPolicy& pi_t, double gamma);

struct PartialDr {
  double estimate = 0.0;
  std::vector<double> per_trajectory;
};

//! Doubly robust partial importance weighting with false horizon eta:
//! importance-weight (with the model as control variate) through step eta,
//! then complete with the model's value at step eta+1. eta = 0 is the pure
//! direct-model estimate; eta = H with a zero model is exactly ips.
PartialDr partial_dr(const std::vector<Trajectory>& trajectories, const TabularPolicy& pi_t,
                     const DirectModel& model, int eta, double gamma);

//! Full-horizon doubly robust estimator with per-step self-normalization:
//! each step's weights are divided by their sample mean.
double wdr(const std::vector<Trajectory>& trajectories, const TabularPolicy& pi_t,
           const DirectModel& model, double gamma);

//! (gamma^eta - gamma^H) / (1 - gamma): worst-case bias of the eta-step
//! partial estimator; nonincreasing in eta.
double bias_bound(int eta, double gamma, int horizon);

struct WeightProfile {
  double p_max = 1.0;   // sup importance ratio
  double gamma = 0.0;
  double v_max = 0.0;   // (1 - gamma)^-1

  WeightProfile(double p_max_in, double gamma_in);
};

struct VarianceRange {
  double variance_bound = 0.0;
  double range_bound = 0.0;
};

//! 3 Vmax^2 (1 + sum_{h<=eta} gamma^(2(h-1)) pmax^h) and
//! 3 Vmax   (1 + sum_{h<=eta} gamma^(h-1)   pmax^h); both nondecreasing in eta.
VarianceRange variance_range_bounds(int eta, const WeightProfile& profile);

//! Bernstein bound for the n-trajectory average with Delta = log(2(H+1)/delta)
//! (union bound over the H+1 candidate horizons).
double cnf_rl_theoretical(long n, int eta, const WeightProfile& profile, double delta,
                          int horizon);

//! Twice the standard error of the per-trajectory values (n-1 denominator).
double cnf_rl_empirical(const std::vector<double>& per_trajectory_values);

//! Candidate index i = 1..H+1 maps to false horizon eta = H - i + 1, so i = 1
//! is full importance weighting and i = H+1 the pure direct-model estimate.
struct HorizonBundle {
  int horizon = 0;
  std::vector<double> estimates;                     // by candidate index
  std::vector<std::vector<double>> per_trajectory;   // by candidate index

  int eta_of(std::size_t index_1based) const { return horizon - static_cast<int>(index_1based) + 1; }
};

HorizonBundle build_horizon_bundle(const std::vector<Trajectory>& trajectories,
                                   const TabularPolicy& pi_t, const DirectModel& model,
                                   double gamma);

struct HorizonSelection {
  double estimate = 0.0;
  int chosen_eta = 0;
  SelectionResult selection;
};

//! Interval-intersection selection over the false-horizon family. The
//! theoretical confidence mode needs a WeightProfile.
HorizonSelection slope_horizon(const std::vector<Trajectory>& trajectories,
                               const TabularPolicy& pi_t, const DirectModel& model,
                               CnfMode cnf_mode, double delta, double gamma,
                               const std::optional<WeightProfile>& profile = std::nullopt);

}  // namespace slope::rl
