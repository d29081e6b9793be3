#include "slope/runner.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "slope/cb_ope.hpp"
#include "slope/rl_ope.hpp"
#include "slope/rng.hpp"

namespace fs = std::filesystem;

namespace slope::harness {

namespace {

using Clock = std::chrono::steady_clock;

long elapsed_ms(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
}

cb::ModelKind model_kind_of(const std::string& name, const std::string& what) {
  if (name.starts_with("linear")) return cb::ModelKind::linear_sigmoid;
  if (name.starts_with("tree")) return cb::ModelKind::tree;
  throw std::invalid_argument("runner: unknown " + what + " policy '" + name + "'");
}

cb::StochasticPolicy make_logging_policy(const ExperimentConfig& config, const CbCondition& cond,
                                         const cb::CbWorld& world, std::uint64_t seed) {
  if (cond.logging == "uniform") return cb::StochasticPolicy::uniform();
  std::size_t sep = cond.logging.rfind('_');
  if (sep == std::string::npos) {
    throw std::invalid_argument("runner: unknown logging policy '" + cond.logging + "'");
  }
  std::string soft_name = cond.logging.substr(sep + 1);
  cb::Softening softening;
  if (soft_name == "friendly") softening = cb::Softening::friendly;
  else if (soft_name == "adversarial") softening = cb::Softening::adversarial;
  else throw std::invalid_argument("runner: unknown softening '" + soft_name + "'");

  Rng rng = make_rng(seed, "logging_policy");
  cb::DeterministicPolicy base =
      cb::train_policy(world, model_kind_of(cond.logging, "logging"), rng);
  return cb::soften(std::move(base), softening, config.cb.alpha, config.cb.beta, config.cb.bins);
}

//! Lower bound on the logging density, used by the theoretical confidence
//! mode. The softening draw ranges over [-0.5, 0.5].
double min_logging_density(const ExperimentConfig& config, const CbCondition& cond) {
  if (cond.logging == "uniform") return 1.0;
  double alpha = config.cb.alpha;
  double beta = config.cb.beta;
  double m = static_cast<double>(config.cb.bins);
  double keep_lo = alpha - 0.5 * beta;
  double keep_hi = alpha + 0.5 * beta;
  double lowest;
  if (cond.logging.ends_with("friendly")) {
    lowest = std::min(keep_lo, (1.0 - keep_hi) / (m - 1.0));
  } else {
    lowest = std::min((1.0 - keep_hi) / m, (1.0 - keep_lo) / m + keep_lo / (m - 1.0));
  }
  return m * lowest;
}

std::vector<RunRecord> run_cb_replicate(const ExperimentConfig& config, const Condition& condition,
                                        long replicate) {
  const CbCondition& cond = std::get<CbCondition>(condition.params);
  std::uint64_t seed = derive_seed(config.master_seed, condition.id,
                                   static_cast<std::uint64_t>(replicate));

  cb::CbWorld world(config.cb.context_dim, cond.lipschitz, cond.reward,
                    derive_seed(seed, "world"));
  Rng target_rng = make_rng(seed, "target_policy");
  cb::DeterministicPolicy pi_t =
      cb::train_policy(world, model_kind_of(cond.target, "target"), target_rng);
  cb::StochasticPolicy pi_l = make_logging_policy(config, cond, world, seed);

  Rng truth_rng = make_rng(seed, "truth");
  double truth = cb::monte_carlo_value(pi_t, world, config.cb.truth_samples, truth_rng).value;

  Rng data_rng = make_rng(seed, "data");
  cb::CbDataset data = cb::log_data(pi_l, world, cond.samples, data_rng);
  cb::BandwidthGrid grid = cb::BandwidthGrid::from_list(config.cb.bandwidths);
  double p_min = config.cnf_mode == CnfMode::theoretical ? min_logging_density(config, cond) : 1.0;

  std::vector<RunRecord> out;
  for (const Method& method : config.methods) {
    Clock::time_point start = Clock::now();
    RunRecord r;
    r.condition_id = condition.id;
    r.method = method.name;
    r.replicate = replicate;
    r.seed = seed;
    r.truth = truth;
    if (method.name == "slope") {
      cb::BandwidthSelection sel =
          cb::slope_bandwidth(data, pi_t, grid, cond.kernel, config.cnf_mode, config.delta, p_min);
      r.estimate = sel.estimate;
      r.chosen_param = sel.chosen_h;
    } else if (method.bandwidth) {
      r.estimate = cb::kernel_ips(data, pi_t, *method.bandwidth, cond.kernel);
      r.chosen_param = *method.bandwidth;
    } else {
      throw std::invalid_argument("runner: method '" + method.name + "' not valid for cb");
    }
    r.sq_error = (r.estimate - truth) * (r.estimate - truth);
    r.wall_ms = elapsed_ms(start);
    out.push_back(std::move(r));
  }
  return out;
}

struct RlSetup {
  rl::TabularEnv env;
  rl::TabularPolicy logging;
  rl::TabularPolicy target;
  double lambda = 0.9;
};

RlSetup make_rl_setup(const ExperimentConfig& config, const RlCondition& cond) {
  if (cond.env == "graph" || cond.env == "graph_pomdp") {
    rl::TabularEnv env = cond.env == "graph"
                             ? rl::graph_env(cond.stochastic_reward, cond.sparse_reward)
                             : rl::graph_pomdp_env(cond.stochastic_reward, cond.sparse_reward);
    rl::TabularPolicy logging = rl::static_policy(env, cond.policy_a);
    rl::TabularPolicy target = rl::static_policy(env, cond.policy_b);
    return {std::move(env), std::move(logging), std::move(target), 0.0};
  }
  if (cond.env == "gridworld") {
    rl::TabularEnv env = rl::gridworld_env();
    rl::TabularPolicy logging = rl::epsilon_greedy_policy(env, cond.policy_a);
    rl::TabularPolicy target = rl::epsilon_greedy_policy(env, cond.policy_b);
    double lambda = 0.9;
    for (const RlEnvAxes& axes : config.rl_envs) {
      if (axes.env == "gridworld") {
        lambda = axes.lambda;
        break;
      }
    }
    return {std::move(env), std::move(logging), std::move(target), lambda};
  }
  if (cond.env == "hybrid") {
    rl::TabularEnv env = rl::hybrid_env();
    auto [logging, target] = rl::hybrid_policies(env);
    return {std::move(env), std::move(logging), std::move(target), 0.0};
  }
  throw std::invalid_argument("runner: unknown environment '" + cond.env + "'");
}

std::vector<RunRecord> run_rl_replicate(const ExperimentConfig& config, const Condition& condition,
                                        long replicate) {
  const RlCondition& cond = std::get<RlCondition>(condition.params);
  std::uint64_t seed = derive_seed(config.master_seed, condition.id,
                                   static_cast<std::uint64_t>(replicate));

  RlSetup setup = make_rl_setup(config, cond);
  double truth = rl::exact_value(setup.env, setup.target);

  Rng data_rng = make_rng(seed, "data");
  std::vector<rl::Trajectory> data =
      rl::sample_trajectories(setup.env, setup.logging, cond.samples, data_rng);

  rl::EnvDims dims = rl::EnvDims::of(setup.env);
  rl::DirectModel model = cond.env == "hybrid"
                              ? rl::fit_mle_model(data, setup.target, dims)
                          : cond.env == "gridworld"
                              ? rl::fit_qpi_lambda(data, setup.target, setup.lambda, dims)
                              : rl::fit_fqe(data, setup.target, dims);

  std::optional<rl::WeightProfile> profile;
  if (config.cnf_mode == CnfMode::theoretical) {
    profile.emplace(rl::max_weight_ratio(setup.env, setup.target, setup.logging), setup.env.gamma);
  }

  std::vector<RunRecord> out;
  for (const Method& method : config.methods) {
    Clock::time_point start = Clock::now();
    RunRecord r;
    r.condition_id = condition.id;
    r.method = method.name;
    r.replicate = replicate;
    r.seed = seed;
    r.truth = truth;
    if (method.name == "slope") {
      rl::HorizonSelection sel = rl::slope_horizon(data, setup.target, model, config.cnf_mode,
                                                   config.delta, setup.env.gamma, profile);
      r.estimate = sel.estimate;
      r.chosen_param = static_cast<double>(sel.chosen_eta);
    } else if (method.name == "dm") {
      r.estimate = rl::partial_dr(data, setup.target, model, 0, setup.env.gamma).estimate;
    } else if (method.name == "ips") {
      r.estimate = rl::ips(data, setup.target, setup.env.gamma);
    } else if (method.name == "wdr") {
      r.estimate = rl::wdr(data, setup.target, model, setup.env.gamma);
    } else {
      throw std::invalid_argument("runner: method '" + method.name + "' not valid for rl");
    }
    r.sq_error = (r.estimate - truth) * (r.estimate - truth);
    r.wall_ms = elapsed_ms(start);
    out.push_back(std::move(r));
  }
  return out;
}

void check_methods(const ExperimentConfig& config) {
  std::set<std::string> seen;
  for (const Method& m : config.methods) {
    if (!seen.insert(m.name).second) {
      throw std::invalid_argument("runner: duplicate method '" + m.name + "'");
    }
    bool cb_ok = m.name == "slope" || m.bandwidth.has_value();
    bool rl_ok = m.name == "slope" || m.name == "dm" || m.name == "wdr" || m.name == "ips";
    if (config.domain == "cb" && !cb_ok) {
      throw std::invalid_argument("runner: method '" + m.name + "' not valid for cb");
    }
    if (config.domain == "rl" && !rl_ok) {
      throw std::invalid_argument("runner: method '" + m.name + "' not valid for rl");
    }
  }
}

void check_manifest(const fs::path& path, const ExperimentConfig& config) {
  if (!fs::exists(path)) return;
  std::ifstream in(path);
  nlohmann::json manifest = nlohmann::json::parse(in, nullptr, false);
  if (manifest.is_discarded()) return;
  if (manifest.value("master_seed", config.master_seed) != config.master_seed ||
      manifest.value("domain", config.domain) != config.domain) {
    throw std::runtime_error(
        "runner: output directory holds results for a different run; use a fresh directory");
  }
}

}  // namespace

std::vector<RunRecord> run_replicate(const ExperimentConfig& config, const Condition& condition,
                                     long replicate) {
  return config.domain == "cb" ? run_cb_replicate(config, condition, replicate)
                               : run_rl_replicate(config, condition, replicate);
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config_in, const std::string& out_dir,
                                      const RunOptions& options) {
  ExperimentConfig config = config_in;
  if (options.master_seed) config.master_seed = *options.master_seed;
  check_methods(config);
  if (config.domain == "cb") {
    cb::BandwidthGrid::from_list(config.cb.bandwidths);  // validates the grid early
  }

  std::vector<Condition> conditions = expand_grid(config);
  fs::create_directories(out_dir);
  fs::path partial_path = fs::path(out_dir) / "records.partial.csv";
  fs::path final_path = fs::path(out_dir) / "records.csv";
  fs::path manifest_path = fs::path(out_dir) / "manifest.json";
  check_manifest(manifest_path, config);

  std::map<std::string, std::size_t> method_index;
  for (std::size_t i = 0; i < config.methods.size(); ++i) {
    method_index[config.methods[i].name] = i;
  }

  // Reuse completed (condition, replicate) units from the partial file.
  std::map<std::pair<std::string, long>, std::map<std::string, RunRecord>> persisted;
  if (fs::exists(partial_path)) {
    for (RunRecord& r : read_records_csv(partial_path.string())) {
      if (!method_index.contains(r.method)) continue;
      auto& bucket = persisted[{r.condition_id, r.replicate}];
      bucket.emplace(r.method, std::move(r));  // first occurrence wins
    }
  }

  struct Unit {
    std::size_t cond_idx;
    long replicate;
  };
  std::vector<Unit> todo;
  std::vector<std::vector<RunRecord>> finished(
      static_cast<std::size_t>(conditions.size()) * static_cast<std::size_t>(config.replicates));
  auto slot = [&](std::size_t cond_idx, long rep) {
    return cond_idx * static_cast<std::size_t>(config.replicates) + static_cast<std::size_t>(rep);
  };
  for (std::size_t c = 0; c < conditions.size(); ++c) {
    for (long rep = 0; rep < config.replicates; ++rep) {
      auto it = persisted.find({conditions[c].id, rep});
      if (it != persisted.end() && it->second.size() == config.methods.size()) {
        std::vector<RunRecord> rows;
        rows.reserve(config.methods.size());
        for (const Method& m : config.methods) rows.push_back(it->second.at(m.name));
        finished[slot(c, rep)] = std::move(rows);
      } else {
        todo.push_back({c, rep});
      }
    }
  }

  std::ofstream partial(partial_path, std::ios::app);
  if (!partial) throw std::runtime_error("runner: cannot open " + partial_path.string());
  if (fs::file_size(partial_path) == 0) partial << record_csv_header() << '\n';

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      try {
        std::vector<RunRecord> rows = run_replicate(config, conditions[todo[i].cond_idx],
                                                    todo[i].replicate);
        std::lock_guard<std::mutex> lock(mu);
        for (const RunRecord& r : rows) partial << to_csv_line(r) << '\n';
        partial.flush();
        finished[slot(todo[i].cond_idx, todo[i].replicate)] = std::move(rows);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  int workers = std::max(1, options.workers);
  if (workers == 1 || todo.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<RunRecord> all;
  all.reserve(finished.size() * config.methods.size());
  for (std::vector<RunRecord>& rows : finished) {
    for (RunRecord& r : rows) all.push_back(std::move(r));
  }
  write_records_csv(final_path.string(), all);

  nlohmann::json manifest;
  manifest["domain"] = config.domain;
  manifest["master_seed"] = config.master_seed;
  manifest["replicates"] = config.replicates;
  manifest["delta"] = config.delta;
  manifest["cnf_mode"] = config.cnf_mode == CnfMode::empirical ? "empirical" : "theoretical";
  std::vector<std::string> method_names;
  for (const Method& m : config.methods) method_names.push_back(m.name);
  manifest["methods"] = method_names;
  std::vector<std::string> condition_ids;
  for (const Condition& c : conditions) condition_ids.push_back(c.id);
  manifest["conditions"] = condition_ids;
  manifest["record_count"] = all.size();
  manifest["columns"] = {"condition_id", "method",   "replicate",    "seed",   "estimate",
                         "truth",        "sq_error", "chosen_param", "wall_ms"};
  std::ofstream mout(manifest_path, std::ios::trunc);
  mout << manifest.dump(2) << '\n';

  return all;
}

}  // namespace slope::harness
