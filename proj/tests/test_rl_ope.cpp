#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "slope/rl_env.hpp"
#include "slope/rl_ope.hpp"

using namespace slope;
using namespace slope::rl;

namespace {

// Two-state chain with action-determined transitions and deterministic
// rewards; everything except (state 1, step 1) is reachable.
TabularEnv chain_env(int horizon) {
  TabularEnv env;
  env.num_states = 2;
  env.num_obs = 2;
  env.num_actions = 2;
  env.horizon = horizon;
  env.gamma = 0.9;
  env.obs_of = {0, 1};
  env.init_dist = {1.0, 0.0};
  auto zero_rows = std::vector<std::vector<double>>(2, std::vector<double>(2, 0.0));
  env.transition.assign(2, zero_rows);
  env.reward_mean.assign(2, zero_rows);
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < 2; ++a) {
      env.transition[s][a][a] = 1.0;
      for (int s2 = 0; s2 < 2; ++s2) {
        env.reward_mean[s][a][s2] = 0.1 + 0.2 * s + 0.3 * a + 0.15 * s2;
      }
    }
  }
  env.validate();
  return env;
}

DirectModel exact_model(const TabularEnv& env, const TabularPolicy& pi) {
  REQUIRE(env.fully_observed());
  std::vector<double> q = exact_q(env, pi);
  DirectModel model(EnvDims::of(env));
  for (int s = 0; s < env.num_states; ++s) {
    for (int t = 1; t <= env.horizon; ++t) {
      for (int a = 0; a < env.num_actions; ++a) {
        model.set_q(s, t, a,
                    q[(static_cast<std::size_t>(s) * env.horizon + (t - 1)) * env.num_actions + a]);
      }
    }
  }
  return model;
}

Trajectory make_traj(std::initializer_list<Step> steps) {
  Trajectory t;
  t.steps = steps;
  return t;
}

double discounted_return(const Trajectory& traj, double gamma, std::size_t from) {
  double g = 1.0;
  double total = 0.0;
  for (std::size_t h = from; h < traj.steps.size(); ++h) {
    total += g * traj.steps[h].reward;
    g *= gamma;
  }
  return total;
}

}  // namespace

TEST_CASE("fit_fqe on a single-step horizon is the per-cell mean reward") {
  TabularEnv env = chain_env(1);
  TabularPolicy pi = static_policy(env, 0.5);
  std::vector<Trajectory> data = {
      make_traj({{0, 0, 0.4, 0.5}}),
      make_traj({{0, 0, 0.6, 0.5}}),
      make_traj({{0, 1, 0.9, 0.5}}),
  };
  DirectModel model = fit_fqe(data, pi, EnvDims::of(env));
  CHECK(model.q(0, 1, 0) == doctest::Approx(0.5));
  CHECK(model.q(0, 1, 1) == doctest::Approx(0.9));
  CHECK(model.q(1, 1, 0) == doctest::Approx(0.0));  // unvisited cell defaults to 0
}

TEST_CASE("fqe and the mle model recover the chain's exact Q off-policy") {
  TabularEnv env = chain_env(4);
  TabularPolicy logging = static_policy(env, 0.5);
  TabularPolicy target = static_policy(env, 0.7);
  Rng rng = make_rng(700, "chain");
  std::vector<Trajectory> data = sample_trajectories(env, logging, 400, rng);
  std::vector<double> q_exact = exact_q(env, target);
  EnvDims dims = EnvDims::of(env);

  DirectModel fqe = fit_fqe(data, target, dims);
  DirectModel mle = fit_mle_model(data, target, dims);
  for (int s = 0; s < 2; ++s) {
    for (int t = 1; t <= 4; ++t) {
      if (s == 1 && t == 1) continue;  // unreachable from the start state
      for (int a = 0; a < 2; ++a) {
        double expected = q_exact[(static_cast<std::size_t>(s) * 4 + (t - 1)) * 2 + a];
        CHECK(fqe.q(s, t, a) == doctest::Approx(expected).epsilon(1e-9));
        CHECK(mle.q(s, t, a) == doctest::Approx(expected).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("lambda returns recover the exact Q when the future is deterministic") {
  // Lambda-mixed returns regress each trajectory's own realized future, so
  // finite-sample exactness needs that future pinned down: actions influence
  // neither transitions nor rewards (coverage still visits every action
  // cell), and a random start puts both states at every step.
  TabularEnv env = chain_env(4);
  env.init_dist = {0.5, 0.5};
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < 2; ++a) {
      env.transition[s][a] = {0.0, 0.0};
      env.transition[s][a][static_cast<std::size_t>(1 - s)] = 1.0;  // alternate
      for (int s2 = 0; s2 < 2; ++s2) {
        env.reward_mean[s][a][s2] = 0.1 + 0.2 * s + 0.15 * s2;
      }
    }
  }
  env.validate();
  TabularPolicy pi = static_policy(env, 0.5);
  Rng rng = make_rng(714, "chain_on_policy");
  std::vector<Trajectory> data = sample_trajectories(env, pi, 60, rng);
  std::vector<double> q_exact = exact_q(env, pi);
  EnvDims dims = EnvDims::of(env);
  for (double lambda : {0.0, 0.5, 1.0}) {
    DirectModel lam = fit_qpi_lambda(data, pi, lambda, dims);
    for (int s = 0; s < 2; ++s) {
      for (int t = 1; t <= 4; ++t) {
        for (int a = 0; a < 2; ++a) {
          double expected = q_exact[(static_cast<std::size_t>(s) * 4 + (t - 1)) * 2 + a];
          CHECK(lam.q(s, t, a) == doctest::Approx(expected).epsilon(1e-9));
        }
      }
    }
  }
}

TEST_CASE("lambda = 0 reproduces fqe and lambda = 1 regresses on returns") {
  TabularEnv env = chain_env(3);
  TabularPolicy logging = static_policy(env, 0.5);
  TabularPolicy target = static_policy(env, 0.8);
  Rng rng = make_rng(701, "lambda");
  std::vector<Trajectory> data = sample_trajectories(env, logging, 60, rng);
  EnvDims dims = EnvDims::of(env);

  DirectModel fqe = fit_fqe(data, target, dims);
  DirectModel lam0 = fit_qpi_lambda(data, target, 0.0, dims);
  for (int s = 0; s < 2; ++s) {
    for (int t = 1; t <= 3; ++t) {
      for (int a = 0; a < 2; ++a) {
        CHECK(lam0.q(s, t, a) == fqe.q(s, t, a));
      }
    }
  }

  // lambda = 1: targets are the trajectories' own discounted tails.
  DirectModel lam1 = fit_qpi_lambda(data, target, 1.0, dims);
  for (int s = 0; s < 2; ++s) {
    for (int t = 1; t <= 3; ++t) {
      for (int a = 0; a < 2; ++a) {
        double sum = 0.0;
        long count = 0;
        for (const Trajectory& traj : data) {
          const Step& step = traj.steps[static_cast<std::size_t>(t - 1)];
          if (step.obs == s && step.action == a) {
            sum += discounted_return(traj, env.gamma, static_cast<std::size_t>(t - 1));
            ++count;
          }
        }
        double expected = count > 0 ? sum / count : 0.0;
        CHECK(lam1.q(s, t, a) == doctest::Approx(expected).epsilon(1e-9));
      }
    }
  }

  CHECK_THROWS_AS(fit_qpi_lambda(data, target, 1.5, dims), std::invalid_argument);
}

TEST_CASE("mle model defaults unvisited rows to uniform transitions, zero reward") {
  TabularEnv env = chain_env(2);
  TabularPolicy target = static_policy(env, 0.5);
  // Only action 0 ever logged: cells with action 1 are unvisited.
  std::vector<Trajectory> data = {make_traj({{0, 0, 0.25, 1.0}, {0, 0, 0.25, 1.0}})};
  DirectModel model = fit_mle_model(data, target, EnvDims::of(env));
  // Unvisited (obs 1, action 1) at the last step: zero reward, no continuation.
  CHECK(model.q(1, 2, 1) == doctest::Approx(0.0));
  // Unvisited action at step 1 bootstraps through the uniform next-obs row.
  double v2_uniform = 0.5 * (model.v(0, 2, target) + model.v(1, 2, target));
  CHECK(model.q(1, 1, 1) == doctest::Approx(0.0 + env.gamma * v2_uniform));
}

TEST_CASE("mle model is biased on the hybrid env's aliased stage") {
  TabularEnv env = hybrid_env();
  auto [logging, target] = hybrid_policies(env);
  Rng rng = make_rng(702, "hybrid_bias");
  std::vector<Trajectory> data = sample_trajectories(env, logging, 4000, rng);
  DirectModel model = fit_mle_model(data, target, EnvDims::of(env));
  PartialDr dm = partial_dr(data, target, model, 0, env.gamma);
  double truth = exact_value(env, target);
  // The aliased first two steps fold three states into one observation; the
  // pure model estimate cannot converge to the truth.
  CHECK(std::abs(dm.estimate - truth) > 0.2);
}

TEST_CASE("ips hand cases") {
  TabularEnv env = chain_env(3);
  TabularPolicy logging = static_policy(env, 0.5);
  Rng rng = make_rng(703, "ips");
  std::vector<Trajectory> data = sample_trajectories(env, logging, 40, rng);

  // Matching policies: every weight is exactly 1.
  double mean_return = 0.0;
  for (const Trajectory& traj : data) mean_return += discounted_return(traj, env.gamma, 0);
  mean_return /= static_cast<double>(data.size());
  CHECK(ips(data, logging, env.gamma) == doctest::Approx(mean_return));

  // Single one-step trajectory with weight 2.
  TabularPolicy half = TabularPolicy::stationary({{0.5, 0.5}, {0.5, 0.5}});
  std::vector<Trajectory> one = {make_traj({{0, 0, 1.0, 0.25}})};
  CHECK(ips(one, half, 0.5) == doctest::Approx(2.0));

  // Target never plays the logged actions: estimate collapses to 0.
  TabularPolicy never = TabularPolicy::stationary({{0.0, 1.0}, {0.0, 1.0}});
  std::vector<Trajectory> logged_zero = {make_traj({{0, 0, 1.0, 0.5}, {0, 0, 1.0, 0.5}, {1, 0, 1.0, 0.5}})};
  CHECK(ips(logged_zero, never, env.gamma) == doctest::Approx(0.0));

  std::vector<Trajectory> bad = {make_traj({{0, 0, 1.0, 0.0}})};
  CHECK_THROWS_AS(ips(bad, half, 0.9), std::invalid_argument);
}

TEST_CASE("partial_dr reduces to ips with a zero model and to the model at eta 0") {
  TabularEnv env = graph_env();
  TabularPolicy logging = static_policy(env, 0.2);
  TabularPolicy target = static_policy(env, 0.8);
  Rng rng = make_rng(704, "reduction");
  DirectModel zero = DirectModel::zero(EnvDims::of(env));
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<Trajectory> data = sample_trajectories(env, logging, 32, rng);
    PartialDr full = partial_dr(data, target, zero, env.horizon, env.gamma);
    double plain = ips(data, target, env.gamma);
    CHECK(full.estimate == plain);  // bit-for-bit reduction
    for (std::size_t i = 0; i < data.size(); ++i) {
      double traj_ips = 0.0;
      double rho = 1.0;
      double g = 1.0;
      for (int t = 1; t <= env.horizon; ++t) {
        const Step& s = data[i].steps[static_cast<std::size_t>(t - 1)];
        rho *= target.prob(s.obs, t, s.action) / s.propensity;
        traj_ips += g * (rho * s.reward);
        g *= env.gamma;
      }
      CHECK(full.per_trajectory[i] == traj_ips);
    }
  }

  std::vector<Trajectory> data = sample_trajectories(env, logging, 16, rng);
  DirectModel model = exact_model(env, target);
  PartialDr dm_only = partial_dr(data, target, model, 0, env.gamma);
  for (double v : dm_only.per_trajectory) {
    CHECK(v == doctest::Approx(model.v(0, 1, target)));
  }
  CHECK_THROWS_AS(partial_dr(data, target, model, env.horizon + 1, env.gamma),
                  std::invalid_argument);
}

TEST_CASE("partial_dr with the exact model is unbiased at every false horizon") {
  TabularEnv env = graph_env();
  TabularPolicy logging = static_policy(env, 0.2);
  TabularPolicy target = static_policy(env, 0.8);
  DirectModel model = exact_model(env, target);
  double truth = exact_value(env, target);
  Rng rng = make_rng(705, "exact_dr");

  const int replicates = 60;
  const long n = 64;
  for (int eta : {0, 2, 8, 16}) {
    double sum = 0.0;
    double sumsq = 0.0;
    for (int rep = 0; rep < replicates; ++rep) {
      std::vector<Trajectory> data = sample_trajectories(env, logging, n, rng);
      double est = partial_dr(data, target, model, eta, env.gamma).estimate;
      sum += est;
      sumsq += est * est;
    }
    double mean = sum / replicates;
    double se = std::sqrt(std::max(sumsq / replicates - mean * mean, 0.0) / replicates);
    CHECK(std::abs(mean - truth) <= 4.0 * se + 1e-9);
  }
}

TEST_CASE("wdr matches unnormalized dr under matched policies and ignores scale") {
  TabularEnv env = chain_env(3);
  TabularPolicy logging = static_policy(env, 0.5);
  TabularPolicy target = static_policy(env, 0.8);
  Rng rng = make_rng(706, "wdr");
  std::vector<Trajectory> data = sample_trajectories(env, logging, 50, rng);
  DirectModel model = fit_fqe(data, logging, EnvDims::of(env));

  // pi_T = pi_L: every normalized weight is exactly 1.
  CHECK(wdr(data, logging, model, env.gamma) ==
        doctest::Approx(partial_dr(data, logging, model, env.horizon, env.gamma).estimate));

  // Scaling all propensities cancels inside the self-normalization.
  std::vector<Trajectory> scaled = data;
  for (Trajectory& traj : scaled) {
    for (Step& s : traj.steps) s.propensity *= 3.7;
  }
  CHECK(wdr(scaled, target, model, env.gamma) ==
        doctest::Approx(wdr(data, target, model, env.gamma)).epsilon(1e-9));

  // Single trajectory: weights collapse and the correction telescopes.
  std::vector<Trajectory> one = {data[0]};
  double expected = model.v(one[0].steps[0].obs, 1, target);
  double g = 1.0;
  for (int t = 1; t <= env.horizon; ++t) {
    const Step& s = one[0].steps[static_cast<std::size_t>(t - 1)];
    double next = t < env.horizon ? model.v(one[0].steps[static_cast<std::size_t>(t)].obs, t + 1, target) : 0.0;
    expected += g * (s.reward + env.gamma * next - model.q(s.obs, t, s.action));
    g *= env.gamma;
  }
  CHECK(wdr(one, target, model, env.gamma) == doctest::Approx(expected).epsilon(1e-9));

  // All target probability on unlogged actions: every step sum vanishes.
  TabularPolicy never = TabularPolicy::stationary({{0.0, 1.0}, {0.0, 1.0}});
  std::vector<Trajectory> zeroed = {make_traj({{0, 0, 1.0, 0.5}, {0, 0, 1.0, 0.5}, {0, 0, 1.0, 0.5}})};
  CHECK_THROWS_AS(wdr(zeroed, never, model, env.gamma), std::invalid_argument);
}

TEST_CASE("bias_bound evaluates the geometric tail") {
  CHECK(bias_bound(16, 0.98, 16) == doctest::Approx(0.0));
  CHECK(bias_bound(2, 0.98, 16) == doctest::Approx(11.83015).epsilon(1e-5));
  CHECK(bias_bound(0, 0.5, 2) == doctest::Approx(1.5));
  for (int eta = 0; eta < 16; ++eta) {
    CHECK(bias_bound(eta, 0.98, 16) >= bias_bound(eta + 1, 0.98, 16));
  }
  CHECK_THROWS_AS(bias_bound(-1, 0.9, 4), std::invalid_argument);
  CHECK_THROWS_AS(bias_bound(2, 1.0, 4), std::invalid_argument);
}

TEST_CASE("variance and range bounds grow with the false horizon") {
  WeightProfile unit(1.0, 0.5);
  auto at0 = variance_range_bounds(0, unit);
  CHECK(at0.variance_bound == doctest::Approx(3.0 * 4.0));
  CHECK(at0.range_bound == doctest::Approx(3.0 * 2.0));

  WeightProfile p2(2.0, 0.5);
  auto at1 = variance_range_bounds(1, p2);
  CHECK(at1.variance_bound == doctest::Approx(36.0));
  CHECK(at1.range_bound == doctest::Approx(18.0));

  WeightProfile near_one(1.0, 0.99);
  auto at2 = variance_range_bounds(2, near_one);
  double v = 100.0;
  CHECK(at2.variance_bound == doctest::Approx(3.0 * v * v * (1.0 + 1.0 + 0.99 * 0.99)));

  for (int eta = 0; eta < 10; ++eta) {
    auto lo = variance_range_bounds(eta, p2);
    auto hi = variance_range_bounds(eta + 1, p2);
    CHECK(hi.variance_bound >= lo.variance_bound);
    CHECK(hi.range_bound >= lo.range_bound);
  }
}

TEST_CASE("theoretical rl confidence: closed form, monotonicity, decay") {
  WeightProfile profile(4.0, 0.98);
  double delta_log = std::log(2.0 * 17.0 / 0.05);
  double expected = std::sqrt(6.0 * 2500.0 * delta_log / 1000.0) + 6.0 * 50.0 * delta_log / 3000.0;
  CHECK(cnf_rl_theoretical(1000, 0, profile, 0.05, 16) == doctest::Approx(expected));

  for (int eta = 0; eta < 16; ++eta) {
    CHECK(cnf_rl_theoretical(1000, eta + 1, profile, 0.05, 16) >=
          cnf_rl_theoretical(1000, eta, profile, 0.05, 16));
  }
  // Bernstein tail: the sqrt term dominates for large n, so quadrupling n
  // halves the width (and the width keeps falling toward 0).
  double wide = cnf_rl_theoretical(1000000000000L, 8, profile, 0.05, 16);
  double quartered = cnf_rl_theoretical(4000000000000L, 8, profile, 0.05, 16);
  CHECK(quartered == doctest::Approx(wide / 2.0).epsilon(1e-3));
  CHECK(cnf_rl_theoretical(1000000L, 2, profile, 0.05, 16) <
        cnf_rl_theoretical(1000L, 2, profile, 0.05, 16) / 10.0);

  // The candidate ordering i = H - eta + 1 shrinks no faster than
  // (1 + gamma p_max)^-1 per index.
  std::vector<double> cnfs;
  for (int i = 1; i <= 17; ++i) {
    cnfs.push_back(cnf_rl_theoretical(1000, 16 - i + 1, profile, 0.05, 16));
  }
  CHECK(kappa_of(cnfs) >= 1.0 / (1.0 + profile.gamma * profile.p_max) - 1e-12);
}

TEST_CASE("empirical rl confidence") {
  CHECK(cnf_rl_empirical({0.0, 2.0}) == doctest::Approx(2.0));
  CHECK(cnf_rl_empirical({0.7, 0.7, 0.7, 0.7}) == doctest::Approx(0.0));
  std::vector<double> base = {0.1, 0.5, 0.9, 0.2, 0.8, 0.4, 0.6, 0.3};
  std::vector<double> quad;
  for (int k = 0; k < 4; ++k) quad.insert(quad.end(), base.begin(), base.end());
  double ratio = cnf_rl_empirical(quad) / cnf_rl_empirical(base);
  CHECK(ratio == doctest::Approx(std::sqrt(7.0 / 31.0)).epsilon(1e-9));  // -> 1/2 for large n
  CHECK_THROWS_AS(cnf_rl_empirical({1.0}), std::invalid_argument);
}

TEST_CASE("horizon bundle ends with the pure direct-model estimate") {
  TabularEnv env = chain_env(3);
  TabularPolicy logging = static_policy(env, 0.5);
  TabularPolicy target = static_policy(env, 0.7);
  Rng rng = make_rng(707, "bundle");
  std::vector<Trajectory> data = sample_trajectories(env, logging, 30, rng);
  DirectModel model = fit_fqe(data, target, EnvDims::of(env));

  HorizonBundle bundle = build_horizon_bundle(data, target, model, env.gamma);
  REQUIRE(bundle.estimates.size() == 4);
  CHECK(bundle.eta_of(1) == 3);
  CHECK(bundle.eta_of(4) == 0);
  CHECK(bundle.estimates[3] == partial_dr(data, target, model, 0, env.gamma).estimate);
}

TEST_CASE("slope_horizon on a single-step environment has two candidates") {
  TabularEnv env = chain_env(1);
  TabularPolicy logging = static_policy(env, 0.5);
  TabularPolicy target = static_policy(env, 0.7);
  Rng rng = make_rng(708, "single");
  std::vector<Trajectory> data = sample_trajectories(env, logging, 40, rng);
  DirectModel model = fit_fqe(data, target, EnvDims::of(env));
  HorizonSelection sel = slope_horizon(data, target, model, CnfMode::empirical, 0.05, env.gamma);
  CHECK(sel.selection.intervals.size() == 2);
  CHECK((sel.chosen_eta == 0 || sel.chosen_eta == 1));
}

TEST_CASE("matched policies with an exact model select small false horizons") {
  TabularEnv env = graph_env();
  TabularPolicy pi = static_policy(env, 0.8);
  DirectModel model = exact_model(env, pi);
  Rng rng = make_rng(709, "small_eta");
  double eta_sum = 0.0;
  const int replicates = 20;
  for (int rep = 0; rep < replicates; ++rep) {
    std::vector<Trajectory> data = sample_trajectories(env, pi, 128, rng);
    HorizonSelection sel = slope_horizon(data, pi, model, CnfMode::empirical, 0.05, env.gamma);
    eta_sum += sel.chosen_eta;
  }
  CHECK(eta_sum / replicates <= env.horizon / 2.0);
}

TEST_CASE("slope_horizon with theoretical confidence requires a profile") {
  TabularEnv env = chain_env(2);
  TabularPolicy logging = static_policy(env, 0.5);
  Rng rng = make_rng(710, "profile");
  std::vector<Trajectory> data = sample_trajectories(env, logging, 10, rng);
  DirectModel model = fit_fqe(data, logging, EnvDims::of(env));
  CHECK_THROWS_AS(slope_horizon(data, logging, model, CnfMode::theoretical, 0.05, env.gamma),
                  std::invalid_argument);
  WeightProfile profile(1.0, env.gamma);
  HorizonSelection sel = slope_horizon(data, logging, model, CnfMode::theoretical, 0.05,
                                       env.gamma, profile);
  CHECK(sel.selection.intervals.size() == 3);
}
