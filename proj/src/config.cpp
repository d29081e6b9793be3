#include "slope/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace slope::harness {

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    std::string t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

double parse_number(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number '" + s + "' for key '" + key + "'");
  }
}

long parse_long(const std::string& s, const std::string& key) {
  double v = parse_number(s, key);
  long l = static_cast<long>(v);
  if (static_cast<double>(l) != v) {
    throw std::invalid_argument("config: expected integer for key '" + key + "'");
  }
  return l;
}

bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("config: bad boolean '" + s + "' for key '" + key + "'");
}

std::pair<double, double> parse_pair(const std::string& s, const std::string& key) {
  std::size_t colon = s.find(':');
  if (colon == std::string::npos) {
    throw std::invalid_argument("config: expected a:b pair for key '" + key + "'");
  }
  return {parse_number(trim(s.substr(0, colon)), key),
          parse_number(trim(s.substr(colon + 1)), key)};
}

cb::RewardKind parse_reward_kind(const std::string& s) {
  if (s == "absolute_value") return cb::RewardKind::absolute_value;
  if (s == "quadratic") return cb::RewardKind::quadratic;
  throw std::invalid_argument("config: unknown reward function '" + s + "'");
}

cb::Kernel parse_kernel(const std::string& s) {
  if (s == "boxcar") return cb::Kernel::boxcar;
  if (s == "epanechnikov") return cb::Kernel::epanechnikov;
  throw std::invalid_argument("config: unknown kernel '" + s + "'");
}

const char* reward_kind_name(cb::RewardKind k) {
  return k == cb::RewardKind::absolute_value ? "absolute_value" : "quadratic";
}

const char* kernel_name(cb::Kernel k) {
  return k == cb::Kernel::boxcar ? "boxcar" : "epanechnikov";
}

}  // namespace

Method Method::parse(const std::string& token) {
  Method m;
  if (token == "slope" || token == "dm" || token == "wdr" || token == "ips") {
    m.name = token;
    return m;
  }
  if (token.starts_with("fixed_h(") && token.ends_with(")")) {
    std::string arg = token.substr(8, token.size() - 9);
    double h = parse_number(trim(arg), "methods");
    if (h <= 0.0 || h > 1.0) throw std::invalid_argument("config: fixed_h bandwidth out of (0,1]");
    m.bandwidth = h;
    m.name = "fixed_h(" + format_double(h) + ")";
    return m;
  }
  throw std::invalid_argument("config: unknown method '" + token + "'");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig config;
  config.methods.clear();

  std::istringstream in(text);
  std::string line;
  RlEnvAxes* env_section = nullptr;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (!line.ends_with("]")) {
        throw std::invalid_argument("config: malformed section at line " + std::to_string(line_no));
      }
      std::string section = trim(line.substr(1, line.size() - 2));
      if (!section.starts_with("env ")) {
        throw std::invalid_argument("config: unknown section '" + section + "'");
      }
      RlEnvAxes axes;
      axes.env = trim(section.substr(4));
      if (axes.env != "graph" && axes.env != "graph_pomdp" && axes.env != "gridworld" &&
          axes.env != "hybrid") {
        throw std::invalid_argument("config: unknown environment '" + axes.env + "'");
      }
      config.rl_envs.push_back(std::move(axes));
      env_section = &config.rl_envs.back();
      continue;
    }

    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: expected key = value at line " + std::to_string(line_no));
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    std::vector<std::string> items = split_list(value);
    if (items.empty()) {
      throw std::invalid_argument("config: empty value for key '" + key + "'");
    }

    if (env_section != nullptr) {
      RlEnvAxes& axes = *env_section;
      if (key == "stochastic_reward") {
        axes.stochastic_reward.clear();
        for (const auto& s : items) axes.stochastic_reward.push_back(parse_bool(s, key));
      } else if (key == "sparse_reward") {
        axes.sparse_reward.clear();
        for (const auto& s : items) axes.sparse_reward.push_back(parse_bool(s, key));
      } else if (key == "policy_pairs") {
        axes.policy_pairs.clear();
        for (const auto& s : items) axes.policy_pairs.push_back(parse_pair(s, key));
      } else if (key == "samples") {
        axes.samples.clear();
        for (const auto& s : items) axes.samples.push_back(parse_long(s, key));
      } else if (key == "lambda") {
        axes.lambda = parse_number(items.at(0), key);
      } else {
        throw std::invalid_argument("config: unknown environment key '" + key + "'");
      }
      continue;
    }

    if (key == "domain") {
      config.domain = items.at(0);
      if (config.domain != "cb" && config.domain != "rl") {
        throw std::invalid_argument("config: domain must be cb or rl");
      }
    } else if (key == "replicates") {
      config.replicates = parse_long(items.at(0), key);
    } else if (key == "master_seed") {
      config.master_seed = static_cast<std::uint64_t>(parse_long(items.at(0), key));
    } else if (key == "delta") {
      config.delta = parse_number(items.at(0), key);
    } else if (key == "cnf_mode") {
      if (items.at(0) == "empirical") config.cnf_mode = CnfMode::empirical;
      else if (items.at(0) == "theoretical") config.cnf_mode = CnfMode::theoretical;
      else throw std::invalid_argument("config: cnf_mode must be empirical or theoretical");
    } else if (key == "methods") {
      for (const auto& s : items) config.methods.push_back(Method::parse(s));
    } else if (key == "reward_fn") {
      config.cb.reward_fns.clear();
      for (const auto& s : items) config.cb.reward_fns.push_back(parse_reward_kind(s));
    } else if (key == "lipschitz") {
      config.cb.lipschitz.clear();
      for (const auto& s : items) config.cb.lipschitz.push_back(parse_number(s, key));
    } else if (key == "kernel") {
      config.cb.kernels.clear();
      for (const auto& s : items) config.cb.kernels.push_back(parse_kernel(s));
    } else if (key == "target_policy") {
      config.cb.target_policies = items;
    } else if (key == "logging_policy") {
      config.cb.logging_policies = items;
    } else if (key == "samples") {
      config.cb.samples.clear();
      for (const auto& s : items) config.cb.samples.push_back(parse_long(s, key));
    } else if (key == "bandwidths") {
      config.cb.bandwidths.clear();
      for (const auto& s : items) config.cb.bandwidths.push_back(parse_number(s, key));
    } else if (key == "context_dim") {
      config.cb.context_dim = static_cast<int>(parse_long(items.at(0), key));
    } else if (key == "alpha") {
      config.cb.alpha = parse_number(items.at(0), key);
    } else if (key == "beta") {
      config.cb.beta = parse_number(items.at(0), key);
    } else if (key == "bins") {
      config.cb.bins = static_cast<int>(parse_long(items.at(0), key));
    } else if (key == "truth_samples") {
      config.cb.truth_samples = parse_long(items.at(0), key);
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }

  if (config.domain.empty()) throw std::invalid_argument("config: missing domain");
  if (config.replicates < 1) throw std::invalid_argument("config: replicates must be at least 1");
  if (config.methods.empty()) throw std::invalid_argument("config: no methods listed");
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

long Condition::samples() const {
  if (const auto* cb_cond = std::get_if<CbCondition>(&params)) return cb_cond->samples;
  return std::get<RlCondition>(params).samples;
}

std::vector<Condition> expand_grid(const ExperimentConfig& config) {
  std::vector<Condition> out;
  if (config.domain == "cb") {
    const CbAxes& axes = config.cb;
    if (axes.reward_fns.empty() || axes.lipschitz.empty() || axes.kernels.empty() ||
        axes.target_policies.empty() || axes.logging_policies.empty() || axes.samples.empty()) {
      throw std::invalid_argument("expand_grid: empty axis in cb grid");
    }
    for (cb::RewardKind reward : axes.reward_fns) {
      for (double lips : axes.lipschitz) {
        for (cb::Kernel kernel : axes.kernels) {
          for (const std::string& target : axes.target_policies) {
            for (const std::string& logging : axes.logging_policies) {
              for (long n : axes.samples) {
                CbCondition c{reward, lips, kernel, target, logging, n};
                Condition cond;
                cond.id = std::string("cb:reward=") + reward_kind_name(reward) +
                          ";L=" + format_double(lips) + ";kernel=" + kernel_name(kernel) +
                          ";target=" + target + ";logging=" + logging +
                          ";n=" + std::to_string(n);
                cond.params = c;
                out.push_back(std::move(cond));
              }
            }
          }
        }
      }
    }
    return out;
  }

  if (config.rl_envs.empty()) throw std::invalid_argument("expand_grid: no rl environments");
  for (const RlEnvAxes& axes : config.rl_envs) {
    if (axes.samples.empty() || axes.stochastic_reward.empty() || axes.sparse_reward.empty() ||
        axes.policy_pairs.empty()) {
      throw std::invalid_argument("expand_grid: empty axis in rl grid");
    }
    for (bool srew : axes.stochastic_reward) {
      for (bool sparse : axes.sparse_reward) {
        for (const auto& pair : axes.policy_pairs) {
          for (long n : axes.samples) {
            RlCondition c{axes.env, srew, sparse, pair.first, pair.second, n};
            Condition cond;
            cond.id = "rl:env=" + axes.env + ";srew=" + (srew ? "1" : "0") +
                      ";sparse=" + (sparse ? "1" : "0") + ";pair=" + format_double(pair.first) +
                      ":" + format_double(pair.second) + ";n=" + std::to_string(n);
            cond.params = c;
            out.push_back(std::move(cond));
          }
        }
      }
    }
  }
  return out;
}

}  // namespace slope::harness
