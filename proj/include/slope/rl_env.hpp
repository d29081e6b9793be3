#pragma once

#include <string>
#include <utility>
#include <vector>

#include "slope/rng.hpp"

namespace slope::rl {

enum class RewardNoise { none, gaussian };

//! Finite-horizon tabular POMDP: explicit transition and mean-reward tables
//! plus a state-to-observation map. Fully observed environments use the
//! identity map. Probability rows always sum to 1.
struct TabularEnv {
  int num_states = 0;
  int num_obs = 0;
  int num_actions = 0;
  int horizon = 0;
  double gamma = 0.0;
  std::vector<double> init_dist;                        // [s]
  std::vector<std::vector<std::vector<double>>> transition;   // [s][a][s']
  std::vector<std::vector<std::vector<double>>> reward_mean;  // [s][a][s']
  RewardNoise reward_noise = RewardNoise::none;
  bool sparse = false;  // reward emitted only at the final step
  std::vector<int> obs_of;  // [s]

  bool fully_observed() const;
  //! Mean reward of step t (1-based); zero before the final step when sparse.
  double step_reward_mean(int s, int a, int s2, int t) const;
  void validate() const;
};

//! Action distribution per observation, optionally per timestep.
class TabularPolicy {
 public:
  static TabularPolicy stationary(std::vector<std::vector<double>> probs_per_obs);
  //! probs[t-1][obs][action] for t = 1..H.
  static TabularPolicy time_indexed(std::vector<std::vector<std::vector<double>>> probs);

  double prob(int obs, int t, int a) const;
  int sample(int obs, int t, Rng& rng) const;

  int num_obs() const;
  int num_actions() const;
  bool is_time_indexed() const { return time_indexed_; }
  int horizon() const { return time_indexed_ ? static_cast<int>(probs_.size()) : 0; }

 private:
  bool time_indexed_ = false;
  std::vector<std::vector<std::vector<double>>> probs_;  // stationary stores one slab

  const std::vector<double>& row(int obs, int t) const;
};

struct Step {
  int obs = 0;
  int action = 0;
  double reward = 0.0;
  double propensity = 0.0;  // logging probability of the logged action
};

struct Trajectory {
  std::vector<Step> steps;  // length exactly horizon
};

//! Layered chain: from a layer-t state the next state is 2t+1 (odd child,
//! reward +1) or 2t+2 (even child, reward -1), with the action biasing the
//! coin 0.75/0.25. Horizon 16, discount 0.98, start state 0.
TabularEnv graph_env(bool stochastic_reward = false, bool sparse = false);

//! graph_env dynamics with states aliased into 6 observation groups.
TabularEnv graph_pomdp_env(bool stochastic_reward = false, bool sparse = false);

//! 8x8 grid, 4 actions, horizon 25, discount 0.99. Cell categories carry the
//! entry rewards Field -0.005, Hole -0.5, Goal 1, Others -0.01; the goal
//! absorbs. Uses the bundled default map.
TabularEnv gridworld_env();
TabularEnv gridworld_env_from_file(const std::string& path);
//! Map text: 8 lines of 8 chars from {F,H,G,O,S}; S cells are the start
//! distribution (category Others).
TabularEnv gridworld_env_from_text(const std::string& text);
const std::string& gridworld_default_map();

//! Two-phase chain, horizon 22, discount 0.99: steps 1-2 are a partially
//! observed stage (three states share one observation; +1/-1 entry rewards),
//! steps 3-22 a fully observed win/lose cycle (0.6/0.4 coin, +1/-1 rewards,
//! deterministic return to the hub with 0 reward).
TabularEnv hybrid_env();

//! State-independent two-action policy: P(a=0) = p.
TabularPolicy static_policy(const TabularEnv& env, double p);

//! Greedy base from exact finite-horizon value iteration on the true model,
//! smoothed to P(a*) = 1 - eps and eps/(|A|-1) elsewhere. Requires a fully
//! observed environment.
TabularPolicy epsilon_greedy_policy(const TabularEnv& env, double epsilon);

//! The standard logging/target pair for hybrid_env (0.88/0.12 on the aliased
//! stage, 0.73/0.27 at the hub, uniform elsewhere; the target flips both).
std::pair<TabularPolicy, TabularPolicy> hybrid_policies(const TabularEnv& env);

std::vector<Trajectory> sample_trajectories(const TabularEnv& env, const TabularPolicy& policy,
                                            long n, Rng& rng);

//! Exact discounted value by backward dynamic programming over (state, step).
double exact_value(const TabularEnv& env, const TabularPolicy& policy);

//! Exact action values; index (s, t, a) = (s * H + (t-1)) * A + a.
std::vector<double> exact_q(const TabularEnv& env, const TabularPolicy& policy);

//! sup over (timestep, observation, action) of target/logging probability.
double max_weight_ratio(const TabularEnv& env, const TabularPolicy& target,
                        const TabularPolicy& logging);

}  // namespace slope::rl
