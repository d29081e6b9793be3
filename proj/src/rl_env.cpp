#include "slope/rl_env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace slope::rl {

namespace {

constexpr double kRowSumTol = 1e-12;

int sample_index(const std::vector<double>& probs, Rng& rng) {
  double u = uniform01(rng);
  double acc = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) last_positive = static_cast<int>(i);
    acc += probs[i];
    if (u < acc) return probs[i] > 0.0 ? static_cast<int>(i) : last_positive;
  }
  return last_positive;
}

void check_row(const std::vector<double>& row, const char* what) {
  double sum = 0.0;
  for (double p : row) {
    if (p < 0.0) throw std::invalid_argument(std::string(what) + ": negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kRowSumTol) {
    throw std::invalid_argument(std::string(what) + ": row does not sum to 1");
  }
}

}  // namespace

bool TabularEnv::fully_observed() const {
  if (num_obs != num_states) return false;
  for (int s = 0; s < num_states; ++s) {
    if (obs_of[static_cast<std::size_t>(s)] != s) return false;
  }
  return true;
}

double TabularEnv::step_reward_mean(int s, int a, int s2, int t) const {
  if (sparse && t < horizon) return 0.0;
  return reward_mean[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]
                    [static_cast<std::size_t>(s2)];
}

void TabularEnv::validate() const {
  if (num_states < 1 || num_actions < 1 || num_obs < 1) {
    throw std::invalid_argument("TabularEnv: empty state, action, or observation space");
  }
  if (horizon < 1) throw std::invalid_argument("TabularEnv: horizon must be at least 1");
  if (gamma <= 0.0 || gamma >= 1.0) throw std::invalid_argument("TabularEnv: gamma must lie in (0,1)");
  if (static_cast<int>(init_dist.size()) != num_states ||
      static_cast<int>(obs_of.size()) != num_states) {
    throw std::invalid_argument("TabularEnv: table sizes inconsistent with num_states");
  }
  check_row(init_dist, "init_dist");
  for (int s = 0; s < num_states; ++s) {
    if (obs_of[static_cast<std::size_t>(s)] < 0 || obs_of[static_cast<std::size_t>(s)] >= num_obs) {
      throw std::invalid_argument("TabularEnv: observation id out of range");
    }
    for (int a = 0; a < num_actions; ++a) {
      check_row(transition[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)], "transition");
    }
  }
}

TabularPolicy TabularPolicy::stationary(std::vector<std::vector<double>> probs_per_obs) {
  if (probs_per_obs.empty()) throw std::invalid_argument("TabularPolicy: empty table");
  for (const auto& row : probs_per_obs) check_row(row, "policy");
  TabularPolicy p;
  p.time_indexed_ = false;
  p.probs_.push_back(std::move(probs_per_obs));
  return p;
}

TabularPolicy TabularPolicy::time_indexed(std::vector<std::vector<std::vector<double>>> probs) {
  if (probs.empty() || probs[0].empty()) throw std::invalid_argument("TabularPolicy: empty table");
  for (const auto& slab : probs) {
    if (slab.size() != probs[0].size()) {
      throw std::invalid_argument("TabularPolicy: ragged observation dimension");
    }
    for (const auto& row : slab) check_row(row, "policy");
  }
  TabularPolicy p;
  p.time_indexed_ = true;
  p.probs_ = std::move(probs);
  return p;
}

const std::vector<double>& TabularPolicy::row(int obs, int t) const {
  const auto& slab = time_indexed_ ? probs_[static_cast<std::size_t>(t - 1)] : probs_[0];
  return slab[static_cast<std::size_t>(obs)];
}

double TabularPolicy::prob(int obs, int t, int a) const {
  return row(obs, t)[static_cast<std::size_t>(a)];
}

int TabularPolicy::sample(int obs, int t, Rng& rng) const {
  return sample_index(row(obs, t), rng);
}

int TabularPolicy::num_obs() const { return static_cast<int>(probs_[0].size()); }

int TabularPolicy::num_actions() const { return static_cast<int>(probs_[0][0].size()); }

// ---------------------------------------------------------------------------
// Graph

namespace {

constexpr int kGraphHorizon = 16;
// The start state plus two states per layer; the final layer exists only to
// carry the parity of the last transition.
constexpr int kGraphStates = 2 * kGraphHorizon + 1;

int graph_layer(int s) { return s == 0 ? 0 : (s + 1) / 2; }

TabularEnv graph_like_env(bool stochastic_reward, bool sparse, int num_obs,
                          std::vector<int> obs_of) {
  TabularEnv env;
  env.num_states = kGraphStates;
  env.num_obs = num_obs;
  env.num_actions = 2;
  env.horizon = kGraphHorizon;
  env.gamma = 0.98;
  env.reward_noise = stochastic_reward ? RewardNoise::gaussian : RewardNoise::none;
  env.sparse = sparse;
  env.obs_of = std::move(obs_of);
  env.init_dist.assign(kGraphStates, 0.0);
  env.init_dist[0] = 1.0;

  auto zero_rows = std::vector<std::vector<double>>(
      2, std::vector<double>(kGraphStates, 0.0));
  env.transition.assign(kGraphStates, zero_rows);
  env.reward_mean.assign(kGraphStates, zero_rows);

  for (int s = 0; s < kGraphStates; ++s) {
    int t = graph_layer(s);
    if (t >= kGraphHorizon) {
      for (int a = 0; a < 2; ++a) {
        env.transition[s][a][s] = 1.0;  // final layer: inert self-loop
      }
      continue;
    }
    int odd_child = 2 * t + 1;
    int even_child = 2 * t + 2;
    for (int a = 0; a < 2; ++a) {
      double p_odd = a == 0 ? 0.75 : 0.25;
      env.transition[s][a][odd_child] = p_odd;
      env.transition[s][a][even_child] = 1.0 - p_odd;
      env.reward_mean[s][a][odd_child] = 1.0;    // 2 (odd % 2) - 1
      env.reward_mean[s][a][even_child] = -1.0;  // 2 (even % 2) - 1
    }
  }
  env.validate();
  return env;
}

}  // namespace

TabularEnv graph_env(bool stochastic_reward, bool sparse) {
  std::vector<int> obs(kGraphStates);
  for (int s = 0; s < kGraphStates; ++s) obs[static_cast<std::size_t>(s)] = s;
  return graph_like_env(stochastic_reward, sparse, kGraphStates, std::move(obs));
}

TabularEnv graph_pomdp_env(bool stochastic_reward, bool sparse) {
  // Layers 0..16 collapse into 6 observation groups of three layers each.
  std::vector<int> obs(kGraphStates);
  for (int s = 0; s < kGraphStates; ++s) {
    obs[static_cast<std::size_t>(s)] = std::min(graph_layer(s) / 3, 5);
  }
  return graph_like_env(stochastic_reward, sparse, 6, std::move(obs));
}

// ---------------------------------------------------------------------------
// Gridworld

namespace {

const char* const kDefaultGridMap =
    "SSSSSSSS\n"
    "SOOOFFOO\n"
    "SOHOOOFO\n"
    "SFOHOOOO\n"
    "SOOOHOFO\n"
    "SOFOOHOO\n"
    "SOOFOOHO\n"
    "SOOOFOOG\n";

constexpr int kGridSide = 8;

double category_reward(char c) {
  switch (c) {
    case 'F': return -0.005;
    case 'H': return -0.5;
    case 'G': return 1.0;
    case 'O':
    case 'S': return -0.01;  // start cells are category Others
    default:
      throw std::invalid_argument(std::string("gridworld map: invalid cell '") + c + "'");
  }
}

}  // namespace

const std::string& gridworld_default_map() {
  static const std::string map = kDefaultGridMap;
  return map;
}

TabularEnv gridworld_env_from_text(const std::string& text) {
  std::vector<std::string> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(line);
  }
  if (static_cast<int>(rows.size()) != kGridSide) {
    throw std::invalid_argument("gridworld map: expected 8 rows");
  }
  for (const std::string& r : rows) {
    if (static_cast<int>(r.size()) != kGridSide) {
      throw std::invalid_argument("gridworld map: expected 8 columns per row");
    }
  }

  const int n = kGridSide * kGridSide;
  TabularEnv env;
  env.num_states = n;
  env.num_obs = n;
  env.num_actions = 4;
  env.horizon = 25;
  env.gamma = 0.99;
  env.obs_of.resize(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) env.obs_of[static_cast<std::size_t>(s)] = s;

  std::vector<int> starts;
  for (int r = 0; r < kGridSide; ++r) {
    for (int c = 0; c < kGridSide; ++c) {
      char cell = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      category_reward(cell);  // validates the character
      if (cell == 'S') starts.push_back(r * kGridSide + c);
    }
  }
  if (starts.empty()) throw std::invalid_argument("gridworld map: no start cells");

  env.init_dist.assign(static_cast<std::size_t>(n), 0.0);
  for (int s : starts) env.init_dist[static_cast<std::size_t>(s)] = 1.0 / starts.size();

  auto zero_rows = std::vector<std::vector<double>>(4, std::vector<double>(n, 0.0));
  env.transition.assign(static_cast<std::size_t>(n), zero_rows);
  env.reward_mean.assign(static_cast<std::size_t>(n), zero_rows);

  // 0 up, 1 down, 2 left, 3 right; off-grid moves stay in place.
  const int dr[4] = {-1, 1, 0, 0};
  const int dc[4] = {0, 0, -1, 1};
  for (int r = 0; r < kGridSide; ++r) {
    for (int c = 0; c < kGridSide; ++c) {
      int s = r * kGridSide + c;
      bool at_goal = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] == 'G';
      for (int a = 0; a < 4; ++a) {
        int r2 = r + dr[a];
        int c2 = c + dc[a];
        if (at_goal || r2 < 0 || r2 >= kGridSide || c2 < 0 || c2 >= kGridSide) {
          r2 = r;
          c2 = c;
        }
        int s2 = r2 * kGridSide + c2;
        env.transition[s][a][s2] = 1.0;
        env.reward_mean[s][a][s2] =
            at_goal ? 0.0
                    : category_reward(rows[static_cast<std::size_t>(r2)][static_cast<std::size_t>(c2)]);
      }
    }
  }
  env.validate();
  return env;
}

TabularEnv gridworld_env_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("gridworld map: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return gridworld_env_from_text(buf.str());
}

TabularEnv gridworld_env() { return gridworld_env_from_text(gridworld_default_map()); }

// ---------------------------------------------------------------------------
// Hybrid

TabularEnv hybrid_env() {
  // States: 0,1,2 form the partially observed entry stage (1 and 2 are the
  // good/bad branches), 3 is the hub, 4/5 the win/lose branches of the cycle.
  // The +1/-1 entry reward is paid on the second transition, where the
  // branch identity is hidden behind the shared observation: a model that is
  // tabular over observations cannot attribute it to the first action.
  TabularEnv env;
  env.num_states = 6;
  env.num_obs = 4;
  env.num_actions = 2;
  env.horizon = 22;
  env.gamma = 0.99;
  env.obs_of = {0, 0, 0, 1, 2, 3};
  env.init_dist = {1.0, 0.0, 0.0, 0.0, 0.0, 0.0};

  auto zero_rows = std::vector<std::vector<double>>(2, std::vector<double>(6, 0.0));
  env.transition.assign(6, zero_rows);
  env.reward_mean.assign(6, zero_rows);

  env.transition[0][0][1] = 1.0;
  env.transition[0][1][2] = 1.0;
  for (int a = 0; a < 2; ++a) {
    env.transition[1][a][3] = 1.0;
    env.reward_mean[1][a][3] = 1.0;
    env.transition[2][a][3] = 1.0;
    env.reward_mean[2][a][3] = -1.0;
  }
  for (int a = 0; a < 2; ++a) {
    double p_win = a == 0 ? 0.6 : 0.4;
    env.transition[3][a][4] = p_win;
    env.transition[3][a][5] = 1.0 - p_win;
    env.reward_mean[3][a][4] = 1.0;
    env.reward_mean[3][a][5] = -1.0;
    env.transition[4][a][3] = 1.0;
    env.transition[5][a][3] = 1.0;
  }
  env.validate();
  return env;
}

// ---------------------------------------------------------------------------
// Policies

TabularPolicy static_policy(const TabularEnv& env, double p) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("static_policy: p must lie in [0,1]");
  if (env.num_actions != 2) {
    throw std::invalid_argument("static_policy: environment must have two actions");
  }
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(env.num_obs), {p, 1.0 - p});
  return TabularPolicy::stationary(std::move(rows));
}

TabularPolicy epsilon_greedy_policy(const TabularEnv& env, double epsilon) {
  if (epsilon < 0.0 || epsilon > 1.0) {
    throw std::invalid_argument("epsilon_greedy_policy: epsilon must lie in [0,1]");
  }
  if (!env.fully_observed()) {
    throw std::invalid_argument("epsilon_greedy_policy: requires a fully observed environment");
  }
  if (env.num_actions < 2) {
    throw std::invalid_argument("epsilon_greedy_policy: need at least two actions");
  }

  const int S = env.num_states;
  const int A = env.num_actions;
  const int H = env.horizon;
  std::vector<double> v_next(static_cast<std::size_t>(S), 0.0);
  std::vector<std::vector<std::vector<double>>> probs(
      static_cast<std::size_t>(H),
      std::vector<std::vector<double>>(static_cast<std::size_t>(S),
                                       std::vector<double>(static_cast<std::size_t>(A), 0.0)));
  for (int t = H; t >= 1; --t) {
    std::vector<double> v(static_cast<std::size_t>(S), 0.0);
    for (int s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (int a = 0; a < A; ++a) {
        double q = 0.0;
        for (int s2 = 0; s2 < S; ++s2) {
          double p = env.transition[s][a][s2];
          if (p == 0.0) continue;
          q += p * (env.step_reward_mean(s, a, s2, t) + env.gamma * v_next[s2]);
        }
        if (q > best) {
          best = q;
          best_a = a;
        }
      }
      v[static_cast<std::size_t>(s)] = best;
      for (int a = 0; a < A; ++a) {
        probs[t - 1][s][a] = a == best_a ? 1.0 - epsilon : epsilon / (A - 1);
      }
    }
    v_next = std::move(v);
  }
  return TabularPolicy::time_indexed(std::move(probs));
}

std::pair<TabularPolicy, TabularPolicy> hybrid_policies(const TabularEnv& env) {
  if (env.num_obs != 4 || env.num_actions != 2) {
    throw std::invalid_argument("hybrid_policies: expects the hybrid environment");
  }
  std::vector<std::vector<double>> logging = {
      {0.88, 0.12}, {0.73, 0.27}, {0.5, 0.5}, {0.5, 0.5}};
  std::vector<std::vector<double>> target = {
      {0.12, 0.88}, {0.27, 0.73}, {0.5, 0.5}, {0.5, 0.5}};
  return {TabularPolicy::stationary(std::move(logging)),
          TabularPolicy::stationary(std::move(target))};
}

// ---------------------------------------------------------------------------
// Sampling and exact evaluation

std::vector<Trajectory> sample_trajectories(const TabularEnv& env, const TabularPolicy& policy,
                                            long n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_trajectories: n must be at least 1");
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(n));
  std::normal_distribution<double> noise(0.0, 1.0);
  for (long i = 0; i < n; ++i) {
    Trajectory traj;
    traj.steps.reserve(static_cast<std::size_t>(env.horizon));
    int s = sample_index(env.init_dist, rng);
    for (int t = 1; t <= env.horizon; ++t) {
      Step step;
      step.obs = env.obs_of[static_cast<std::size_t>(s)];
      step.action = policy.sample(step.obs, t, rng);
      step.propensity = policy.prob(step.obs, t, step.action);
      int s2 = sample_index(env.transition[static_cast<std::size_t>(s)]
                                          [static_cast<std::size_t>(step.action)],
                            rng);
      step.reward = env.step_reward_mean(s, step.action, s2, t);
      if (env.reward_noise == RewardNoise::gaussian && !(env.sparse && t < env.horizon)) {
        step.reward += noise(rng);
      }
      traj.steps.push_back(step);
      s = s2;
    }
    out.push_back(std::move(traj));
  }
  return out;
}

namespace {

// Backward induction over (state, step); values discount from the step where
// the recursion sits, so the start-state value carries gamma^(h-1) weights.
std::vector<std::vector<double>> exact_q_table(const TabularEnv& env,
                                               const TabularPolicy& policy) {
  const int S = env.num_states;
  const int A = env.num_actions;
  std::vector<std::vector<double>> q(static_cast<std::size_t>(env.horizon),
                                     std::vector<double>(static_cast<std::size_t>(S * A), 0.0));
  std::vector<double> v_next(static_cast<std::size_t>(S), 0.0);
  for (int t = env.horizon; t >= 1; --t) {
    std::vector<double> v(static_cast<std::size_t>(S), 0.0);
    for (int s = 0; s < S; ++s) {
      int obs = env.obs_of[static_cast<std::size_t>(s)];
      double vs = 0.0;
      for (int a = 0; a < A; ++a) {
        double qa = 0.0;
        for (int s2 = 0; s2 < S; ++s2) {
          double p = env.transition[s][a][s2];
          if (p == 0.0) continue;
          qa += p * (env.step_reward_mean(s, a, s2, t) + env.gamma * v_next[s2]);
        }
        q[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(s * A + a)] = qa;
        vs += policy.prob(obs, t, a) * qa;
      }
      v[static_cast<std::size_t>(s)] = vs;
    }
    v_next = std::move(v);
  }
  return q;
}

}  // namespace

double exact_value(const TabularEnv& env, const TabularPolicy& policy) {
  const int S = env.num_states;
  const int A = env.num_actions;
  std::vector<std::vector<double>> q = exact_q_table(env, policy);
  double value = 0.0;
  for (int s = 0; s < S; ++s) {
    double p0 = env.init_dist[static_cast<std::size_t>(s)];
    if (p0 == 0.0) continue;
    int obs = env.obs_of[static_cast<std::size_t>(s)];
    double vs = 0.0;
    for (int a = 0; a < A; ++a) {
      vs += policy.prob(obs, 1, a) * q[0][static_cast<std::size_t>(s * A + a)];
    }
    value += p0 * vs;
  }
  return value;
}

std::vector<double> exact_q(const TabularEnv& env, const TabularPolicy& policy) {
  const int S = env.num_states;
  const int A = env.num_actions;
  const int H = env.horizon;
  std::vector<std::vector<double>> q = exact_q_table(env, policy);
  std::vector<double> flat(static_cast<std::size_t>(S) * static_cast<std::size_t>(H) *
                               static_cast<std::size_t>(A),
                           0.0);
  for (int s = 0; s < S; ++s) {
    for (int t = 1; t <= H; ++t) {
      for (int a = 0; a < A; ++a) {
        flat[(static_cast<std::size_t>(s) * H + (t - 1)) * A + a] =
            q[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(s * A + a)];
      }
    }
  }
  return flat;
}

double max_weight_ratio(const TabularEnv& env, const TabularPolicy& target,
                        const TabularPolicy& logging) {
  if (target.num_obs() != env.num_obs || logging.num_obs() != env.num_obs ||
      target.num_actions() != env.num_actions || logging.num_actions() != env.num_actions) {
    throw std::invalid_argument("max_weight_ratio: policy shape mismatch");
  }
  int t_max = 1;
  if (target.is_time_indexed()) t_max = std::max(t_max, target.horizon());
  if (logging.is_time_indexed()) t_max = std::max(t_max, logging.horizon());
  double ratio = 0.0;
  for (int t = 1; t <= t_max; ++t) {
    for (int obs = 0; obs < env.num_obs; ++obs) {
      for (int a = 0; a < env.num_actions; ++a) {
        double pt = target.prob(obs, t, a);
        if (pt == 0.0) continue;
        double pl = logging.prob(obs, t, a);
        if (pl == 0.0) return std::numeric_limits<double>::infinity();
        ratio = std::max(ratio, pt / pl);
      }
    }
  }
  return ratio;
}

}  // namespace slope::rl
