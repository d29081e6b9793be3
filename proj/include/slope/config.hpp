#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "slope/cb_ope.hpp"

namespace slope::harness {

//! Method identifiers as they appear in config files and result records:
//! "slope", "dm", "wdr", "ips", or "fixed_h(<bandwidth>)".
struct Method {
  std::string name;                  // canonical spelling
  std::optional<double> bandwidth;   // set for fixed_h

  static Method parse(const std::string& token);
};

struct CbAxes {
  std::vector<cb::RewardKind> reward_fns;
  std::vector<double> lipschitz;
  std::vector<cb::Kernel> kernels;
  std::vector<std::string> target_policies;   // linear | tree
  std::vector<std::string> logging_policies;  // uniform | {linear,tree}_{friendly,adversarial}
  std::vector<long> samples;
  std::vector<double> bandwidths;  // ascending selection grid
  int context_dim = 5;
  double alpha = 0.9;
  double beta = 0.1;
  int bins = 10;
  long truth_samples = 100000;
};

struct RlEnvAxes {
  std::string env;  // graph | graph_pomdp | gridworld | hybrid
  std::vector<bool> stochastic_reward = {false};
  std::vector<bool> sparse_reward = {false};
  //! graph: (logging p, target p); gridworld: (logging eps, target eps);
  //! hybrid ignores the pair (fixed policies).
  std::vector<std::pair<double, double>> policy_pairs = {{0.0, 0.0}};
  std::vector<long> samples;
  double lambda = 0.9;  // gridworld direct-model mixing
};

struct ExperimentConfig {
  std::string domain;  // cb | rl
  long replicates = 30;
  std::uint64_t master_seed = 1;
  double delta = 0.05;
  CnfMode cnf_mode = CnfMode::empirical;
  std::vector<Method> methods;
  CbAxes cb;
  std::vector<RlEnvAxes> rl_envs;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text);

struct CbCondition {
  cb::RewardKind reward;
  double lipschitz;
  cb::Kernel kernel;
  std::string target;
  std::string logging;
  long samples;
};

struct RlCondition {
  std::string env;
  bool stochastic_reward;
  bool sparse_reward;
  double policy_a;  // logging parameter
  double policy_b;  // target parameter
  long samples;
};

struct Condition {
  std::string id;
  std::variant<CbCondition, RlCondition> params;

  long samples() const;
};

//! Deterministic cross-product enumeration with stable condition ids.
std::vector<Condition> expand_grid(const ExperimentConfig& config);

std::string format_double(double v);  // shortest round-trip decimal

}  // namespace slope::harness
