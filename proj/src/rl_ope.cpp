#include "slope/rl_ope.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace slope::rl {

namespace {

void check_data(const std::vector<Trajectory>& trajectories, int horizon, const char* what) {
  if (trajectories.empty()) {
    throw std::invalid_argument(std::string(what) + ": empty trajectory set");
  }
  for (const Trajectory& traj : trajectories) {
    if (static_cast<int>(traj.steps.size()) != horizon) {
      throw std::invalid_argument(std::string(what) + ": trajectory length differs from horizon");
    }
  }
}

double importance_ratio(const TabularPolicy& pi_t, const Step& step, int t, const char* what) {
  if (step.propensity <= 0.0) {
    throw std::invalid_argument(std::string(what) + ": logged propensity must be positive");
  }
  return pi_t.prob(step.obs, t, step.action) / step.propensity;
}

}  // namespace

DirectModel::DirectModel(int num_obs, int horizon, int num_actions)
    : num_obs_(num_obs), horizon_(horizon), num_actions_(num_actions) {
  if (num_obs < 1 || horizon < 1 || num_actions < 1) {
    throw std::invalid_argument("DirectModel: dimensions must be positive");
  }
  table_.assign(static_cast<std::size_t>(num_obs) * static_cast<std::size_t>(horizon) *
                    static_cast<std::size_t>(num_actions),
                0.0);
}

std::size_t DirectModel::index(int obs, int t, int a) const {
  return (static_cast<std::size_t>(obs) * static_cast<std::size_t>(horizon_) +
          static_cast<std::size_t>(t - 1)) *
             static_cast<std::size_t>(num_actions_) +
         static_cast<std::size_t>(a);
}

double DirectModel::v(int obs, int t, const TabularPolicy& pi) const {
  double value = 0.0;
  for (int a = 0; a < num_actions_; ++a) {
    double p = pi.prob(obs, t, a);
    if (p != 0.0) value += p * q(obs, t, a);
  }
  return value;
}

DirectModel fit_fqe(const std::vector<Trajectory>& trajectories, const TabularPolicy& pi_t,
                    const EnvDims& dims) {
  check_data(trajectories, dims.horizon, "fit_fqe");
  DirectModel model(dims);
  const std::size_t cells = static_cast<std::size_t>(dims.num_obs) * dims.num_actions;
  std::vector<double> sums(cells);
  std::vector<long> counts(cells);
  for (int t = dims.horizon; t >= 1; --t) {
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (const Trajectory& traj : trajectories) {
      const Step& step = traj.steps[static_cast<std::size_t>(t - 1)];
      double target = step.reward;
      if (t < dims.horizon) {
        target += dims.gamma * model.v(traj.steps[static_cast<std::size_t>(t)].obs, t + 1, pi_t);
      }
      std::size_t cell = static_cast<std::size_t>(step.obs) * dims.num_actions + step.action;
      sums[cell] += target;
      counts[cell] += 1;
    }
    for (int obs = 0; obs < dims.num_obs; ++obs) {
      for (int a = 0; a < dims.num_actions; ++a) {
        std::size_t cell = static_cast<std::size_t>(obs) * dims.num_actions + a;
        if (counts[cell] > 0) model.set_q(obs, t, a, sums[cell] / counts[cell]);
      }
    }
  }
  return model;
}

DirectModel fit_qpi_lambda(const std::vector<Trajectory>& trajectories, const TabularPolicy& pi_t,
                           double lambda, const EnvDims& dims) {
  if (lambda < 0.0 || lambda > 1.0) {
    throw std::invalid_argument("fit_qpi_lambda: lambda must lie in [0,1]");
  }
  check_data(trajectories, dims.horizon, "fit_qpi_lambda");
  DirectModel model(dims);
  const std::size_t cells = static_cast<std::size_t>(dims.num_obs) * dims.num_actions;
  std::vector<double> sums(cells);
  std::vector<long> counts(cells);
  std::vector<double> lambda_return(trajectories.size(), 0.0);  // value at step t+1
  for (int t = dims.horizon; t >= 1; --t) {
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
      const Step& step = trajectories[i].steps[static_cast<std::size_t>(t - 1)];
      double target = step.reward;
      if (t < dims.horizon) {
        int next_obs = trajectories[i].steps[static_cast<std::size_t>(t)].obs;
        double v_next = model.v(next_obs, t + 1, pi_t);
        target += dims.gamma * ((1.0 - lambda) * v_next + lambda * lambda_return[i]);
      }
      lambda_return[i] = target;
      std::size_t cell = static_cast<std::size_t>(step.obs) * dims.num_actions + step.action;
      sums[cell] += target;
      counts[cell] += 1;
    }
    for (int obs = 0; obs < dims.num_obs; ++obs) {
      for (int a = 0; a < dims.num_actions; ++a) {
        std::size_t cell = static_cast<std::size_t>(obs) * dims.num_actions + a;
        if (counts[cell] > 0) model.set_q(obs, t, a, sums[cell] / counts[cell]);
      }
    }
  }
  return model;
}

DirectModel fit_mle_model(const std::vector<Trajectory>& trajectories, const TabularPolicy& pi_t,
                          const EnvDims& dims) {
  check_data(trajectories, dims.horizon, "fit_mle_model");
  const int O = dims.num_obs;
  const int A = dims.num_actions;
  std::vector<long> trans(static_cast<std::size_t>(O) * A * O, 0);
  std::vector<long> trans_total(static_cast<std::size_t>(O) * A, 0);
  std::vector<double> reward_sum(static_cast<std::size_t>(O) * A, 0.0);
  std::vector<long> reward_count(static_cast<std::size_t>(O) * A, 0);

  for (const Trajectory& traj : trajectories) {
    for (int t = 1; t <= dims.horizon; ++t) {
      const Step& step = traj.steps[static_cast<std::size_t>(t - 1)];
      std::size_t cell = static_cast<std::size_t>(step.obs) * A + step.action;
      reward_sum[cell] += step.reward;
      reward_count[cell] += 1;
      if (t < dims.horizon) {
        int next_obs = traj.steps[static_cast<std::size_t>(t)].obs;
        trans[cell * O + next_obs] += 1;
        trans_total[cell] += 1;
      }
    }
  }

  auto p_hat = [&](std::size_t cell, int next) {
    return trans_total[cell] > 0
               ? static_cast<double>(trans[cell * O + next]) / trans_total[cell]
               : 1.0 / O;
  };
  auto r_hat = [&](std::size_t cell) {
    return reward_count[cell] > 0 ? reward_sum[cell] / reward_count[cell] : 0.0;
  };

  // Evaluate pi_t in the fitted model by backward induction.
  DirectModel model(dims);
  std::vector<double> v_next(static_cast<std::size_t>(O), 0.0);
  for (int t = dims.horizon; t >= 1; --t) {
    for (int obs = 0; obs < O; ++obs) {
      for (int a = 0; a < A; ++a) {
        std::size_t cell = static_cast<std::size_t>(obs) * A + a;
        double q = r_hat(cell);
        if (t < dims.horizon) {
          double next = 0.0;
          for (int o2 = 0; o2 < O; ++o2) next += p_hat(cell, o2) * v_next[o2];
          q += dims.gamma * next;
        }
        model.set_q(obs, t, a, q);
      }
    }
    for (int obs = 0; obs < O; ++obs) {
      v_next[static_cast<std::size_t>(obs)] = model.v(obs, t, pi_t);
    }
  }
  return model;
}

double ips(const std::vector<Trajectory>& trajectories, const TabularPolicy& pi_t, double gamma) {
  if (trajectories.empty()) throw std::invalid_argument("ips: empty trajectory set");
  double total = 0.0;
  for (const Trajectory& traj : trajectories) {
    double rho = 1.0;
    double gpow = 1.0;
    double value = 0.0;
    int t = 1;
    for (const Step& step : traj.steps) {
      rho *= importance_ratio(pi_t, step, t, "ips");
      value += gpow * (rho * step.reward);
      gpow *= gamma;
      ++t;
    }
    total += value;
  }
  return total / static_cast<double>(trajectories.size());
}

PartialDr partial_dr(const std::vector<Trajectory>& trajectories, const TabularPolicy& pi_t,
                     const DirectModel& model, int eta, double gamma) {
  const int H = model.horizon();
  if (eta < 0 || eta > H) throw std::invalid_argument("partial_dr: eta must lie in [0, H]");
  check_data(trajectories, H, "partial_dr");

  PartialDr out;
  out.per_trajectory.reserve(trajectories.size());
  double total = 0.0;
  for (const Trajectory& traj : trajectories) {
    double rho_prev = 1.0;
    double gpow = 1.0;
    double value = 0.0;
    for (int t = 1; t <= eta; ++t) {
      const Step& step = traj.steps[static_cast<std::size_t>(t - 1)];
      double rho = rho_prev * importance_ratio(pi_t, step, t, "partial_dr");
      double v_hat = model.v(step.obs, t, pi_t);
      double q_hat = model.q(step.obs, t, step.action);
      value += gpow * (rho_prev * v_hat + rho * (step.reward - q_hat));
      rho_prev = rho;
      gpow *= gamma;
    }
    if (eta < H) {
      int next_obs = traj.steps[static_cast<std::size_t>(eta)].obs;
      value += gpow * (rho_prev * model.v(next_obs, eta + 1, pi_t));
    }
    out.per_trajectory.push_back(value);
    total += value;
  }
  out.estimate = total / static_cast<double>(trajectories.size());
  return out;
}

double wdr(const std::vector<Trajectory>& trajectories, const TabularPolicy& pi_t,
           const DirectModel& model, double gamma) {
  const int H = model.horizon();
  check_data(trajectories, H, "wdr");
  const std::size_t n = trajectories.size();

  // Cumulative weights rho[i][h], h = 0..H, and their per-step sums.
  std::vector<std::vector<double>> rho(n, std::vector<double>(static_cast<std::size_t>(H) + 1, 1.0));
  std::vector<double> step_sum(static_cast<std::size_t>(H) + 1, 0.0);
  step_sum[0] = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int t = 1; t <= H; ++t) {
      const Step& step = trajectories[i].steps[static_cast<std::size_t>(t - 1)];
      rho[i][static_cast<std::size_t>(t)] =
          rho[i][static_cast<std::size_t>(t - 1)] * importance_ratio(pi_t, step, t, "wdr");
      step_sum[static_cast<std::size_t>(t)] += rho[i][static_cast<std::size_t>(t)];
    }
  }
  for (int t = 1; t <= H; ++t) {
    if (step_sum[static_cast<std::size_t>(t)] <= 0.0) {
      throw std::invalid_argument("wdr: all importance weights vanish at a step");
    }
  }

  double total = 0.0;
  double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double gpow = 1.0;
    double value = 0.0;
    for (int t = 1; t <= H; ++t) {
      const Step& step = trajectories[i].steps[static_cast<std::size_t>(t - 1)];
      double w_prev = rho[i][static_cast<std::size_t>(t - 1)] * dn / step_sum[static_cast<std::size_t>(t - 1)];
      double w = rho[i][static_cast<std::size_t>(t)] * dn / step_sum[static_cast<std::size_t>(t)];
      double v_hat = model.v(step.obs, t, pi_t);
      double q_hat = model.q(step.obs, t, step.action);
      value += gpow * (w_prev * v_hat + w * (step.reward - q_hat));
      gpow *= gamma;
    }
    total += value;
  }
  return total / dn;
}

double bias_bound(int eta, double gamma, int horizon) {
  if (eta < 0 || eta > horizon) throw std::invalid_argument("bias_bound: eta must lie in [0, H]");
  if (gamma <= 0.0 || gamma >= 1.0) throw std::invalid_argument("bias_bound: gamma must lie in (0,1)");
  return (std::pow(gamma, eta) - std::pow(gamma, horizon)) / (1.0 - gamma);
}

WeightProfile::WeightProfile(double p_max_in, double gamma_in) : p_max(p_max_in), gamma(gamma_in) {
  if (gamma <= 0.0 || gamma >= 1.0) {
    throw std::invalid_argument("WeightProfile: gamma must lie in (0,1)");
  }
  if (p_max < 0.0) throw std::invalid_argument("WeightProfile: p_max must be nonnegative");
  v_max = 1.0 / (1.0 - gamma);
}

VarianceRange variance_range_bounds(int eta, const WeightProfile& profile) {
  if (eta < 0) throw std::invalid_argument("variance_range_bounds: eta must be nonnegative");
  double var_sum = 0.0;
  double range_sum = 0.0;
  double g2 = 1.0;  // gamma^(2(h-1))
  double g1 = 1.0;  // gamma^(h-1)
  double p = 1.0;   // p_max^h
  for (int h = 1; h <= eta; ++h) {
    p *= profile.p_max;
    var_sum += g2 * p;
    range_sum += g1 * p;
    g2 *= profile.gamma * profile.gamma;
    g1 *= profile.gamma;
  }
  VarianceRange out;
  out.variance_bound = 3.0 * profile.v_max * profile.v_max * (1.0 + var_sum);
  out.range_bound = 3.0 * profile.v_max * (1.0 + range_sum);
  return out;
}

double cnf_rl_theoretical(long n, int eta, const WeightProfile& profile, double delta,
                          int horizon) {
  if (n < 1) throw std::invalid_argument("cnf_rl_theoretical: n must be at least 1");
  if (delta <= 0.0 || delta >= 1.0) {
    throw std::invalid_argument("cnf_rl_theoretical: delta must lie in (0,1)");
  }
  if (eta < 0 || eta > horizon) {
    throw std::invalid_argument("cnf_rl_theoretical: eta must lie in [0, H]");
  }
  VarianceRange bounds = variance_range_bounds(eta, profile);
  double log_term = std::log(2.0 * (horizon + 1) / delta);
  double dn = static_cast<double>(n);
  return std::sqrt(2.0 * bounds.variance_bound * log_term / dn) +
         2.0 * bounds.range_bound * log_term / (3.0 * dn);
}

double cnf_rl_empirical(const std::vector<double>& values) {
  if (values.size() < 2) {
    throw std::invalid_argument("cnf_rl_empirical: need at least two trajectories");
  }
  double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return 2.0 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

HorizonBundle build_horizon_bundle(const std::vector<Trajectory>& trajectories,
                                   const TabularPolicy& pi_t, const DirectModel& model,
                                   double gamma) {
  const int H = model.horizon();
  check_data(trajectories, H, "build_horizon_bundle");
  HorizonBundle bundle;
  bundle.horizon = H;
  bundle.estimates.reserve(static_cast<std::size_t>(H) + 1);
  bundle.per_trajectory.reserve(static_cast<std::size_t>(H) + 1);
  for (int i = 1; i <= H + 1; ++i) {
    PartialDr result = partial_dr(trajectories, pi_t, model, H - i + 1, gamma);
    bundle.estimates.push_back(result.estimate);
    bundle.per_trajectory.push_back(std::move(result.per_trajectory));
  }
  return bundle;
}

HorizonSelection slope_horizon(const std::vector<Trajectory>& trajectories,
                               const TabularPolicy& pi_t, const DirectModel& model,
                               CnfMode cnf_mode, double delta, double gamma,
                               const std::optional<WeightProfile>& profile) {
  if (cnf_mode == CnfMode::theoretical && !profile) {
    throw std::invalid_argument("slope_horizon: theoretical confidence needs a WeightProfile");
  }
  HorizonBundle bundle = build_horizon_bundle(trajectories, pi_t, model, gamma);
  const int H = bundle.horizon;
  const long n = static_cast<long>(trajectories.size());

  std::vector<double> raw_cnf(bundle.estimates.size());
  for (std::size_t idx = 0; idx < bundle.estimates.size(); ++idx) {
    int eta = bundle.eta_of(idx + 1);
    // Empirical mode: cnf_rl_empirical returns the full two-standard-error
    // band, and the selection interval spans estimate +- 2 cnf, so halve it
    // to place the interval exactly on that band.
    raw_cnf[idx] = cnf_mode == CnfMode::theoretical
                       ? cnf_rl_theoretical(n, eta, *profile, delta, H)
                       : 0.5 * cnf_rl_empirical(bundle.per_trajectory[idx]);
  }
  std::vector<double> cnf = enforce_monotone_cnf(raw_cnf);

  EstimatorBundle candidates;
  candidates.entries.resize(bundle.estimates.size());
  for (std::size_t idx = 0; idx < bundle.estimates.size(); ++idx) {
    candidates.entries[idx] = {bundle.estimates[idx], cnf[idx]};
  }

  HorizonSelection out;
  out.selection = select(candidates);
  out.estimate = out.selection.chosen_estimate;
  out.chosen_eta = bundle.eta_of(out.selection.chosen_index);
  return out;
}

}  // namespace slope::rl
