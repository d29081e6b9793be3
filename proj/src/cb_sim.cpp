#include "slope/cb_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace slope::cb {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

double gauss(Rng& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  return d(rng);
}

}  // namespace

CbWorld::CbWorld(int context_dim, double lipschitz, RewardKind kind, std::uint64_t seed)
    : context_dim_(context_dim), lipschitz_(lipschitz), kind_(kind), seed_(seed) {
  if (context_dim <= 0) throw std::invalid_argument("CbWorld: context_dim must be positive");
  if (lipschitz < 0.0) throw std::invalid_argument("CbWorld: lipschitz must be nonnegative");
  Rng rng = make_rng(seed, "cb_world_beta");
  beta_star_.resize(static_cast<std::size_t>(context_dim));
  for (double& b : beta_star_) b = gauss(rng);
}

CbWorld CbWorld::with_beta(std::vector<double> beta, double lipschitz, RewardKind kind) {
  if (beta.empty()) throw std::invalid_argument("CbWorld: beta must be nonempty");
  CbWorld world(static_cast<int>(beta.size()), lipschitz, kind, 0);
  world.beta_star_ = std::move(beta);
  return world;
}

std::vector<double> CbWorld::sample_context(Rng& rng) const {
  std::vector<double> x(static_cast<std::size_t>(context_dim_));
  for (double& v : x) v = gauss(rng);
  return x;
}

double CbWorld::optimal_action(std::span<const double> x) const {
  if (x.size() != beta_star_.size()) {
    throw std::invalid_argument("optimal_action: context dimension mismatch");
  }
  return sigmoid(dot(beta_star_, x));
}

double CbWorld::reward(double a, double a_star) const {
  double d = std::abs(a - a_star);
  double penalty = kind_ == RewardKind::absolute_value ? lipschitz_ * d
                                                       : 0.25 * lipschitz_ * d * d;
  return 1.0 - std::min(penalty, 1.0);
}

double DeterministicPolicy::predict(std::span<const double> x) const {
  switch (rep_) {
    case Rep::constant:
      return constant_;
    case Rep::oracle:
      return sigmoid(dot(oracle_beta_, x));
    case Rep::linear:
      return sigmoid(dot(linear_.w, x) + linear_.b);
    case Rep::tree: {
      int node = 0;
      while (tree_[static_cast<std::size_t>(node)].feature >= 0) {
        const TreeNode& t = tree_[static_cast<std::size_t>(node)];
        node = x[static_cast<std::size_t>(t.feature)] <= t.threshold ? t.left : t.right;
      }
      return clamp01(tree_[static_cast<std::size_t>(node)].value);
    }
  }
  return 0.5;
}

DeterministicPolicy DeterministicPolicy::constant(double action) {
  if (action < 0.0 || action > 1.0) {
    throw std::invalid_argument("constant policy action must lie in [0,1]");
  }
  DeterministicPolicy p;
  p.rep_ = Rep::constant;
  p.constant_ = action;
  return p;
}

DeterministicPolicy DeterministicPolicy::oracle(const CbWorld& world) {
  DeterministicPolicy p;
  p.rep_ = Rep::oracle;
  p.oracle_beta_ = world.beta_star();
  return p;
}

namespace {

struct TrainSet {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
};

constexpr int kTrainSamples = 10;

TrainSet draw_train_set(const CbWorld& world, Rng& rng, double noise_sd) {
  TrainSet ts;
  for (int i = 0; i < kTrainSamples; ++i) {
    std::vector<double> x = world.sample_context(rng);
    double y = world.optimal_action(x) + noise_sd * gauss(rng);
    ts.x.push_back(std::move(x));
    ts.y.push_back(y);
  }
  return ts;
}

}  // namespace

DeterministicPolicy train_policy(const CbWorld& world, ModelKind kind, Rng& rng, double noise_sd) {
  TrainSet ts = draw_train_set(world, rng, noise_sd);
  const std::size_t n = ts.x.size();
  const std::size_t d = static_cast<std::size_t>(world.context_dim());

  DeterministicPolicy policy;
  if (kind == ModelKind::linear_sigmoid) {
    policy.rep_ = DeterministicPolicy::Rep::linear;
    policy.linear_.w.assign(d, 0.0);
    policy.linear_.b = 0.0;
    const double step = 0.1;
    const int iters = 2000;
    std::vector<double> gw(d);
    for (int it = 0; it < iters; ++it) {
      std::fill(gw.begin(), gw.end(), 0.0);
      double gb = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double z = dot(policy.linear_.w, ts.x[i]) + policy.linear_.b;
        double s = sigmoid(z);
        double g = 2.0 * (s - ts.y[i]) * s * (1.0 - s) / static_cast<double>(n);
        for (std::size_t j = 0; j < d; ++j) gw[j] += g * ts.x[i][j];
        gb += g;
      }
      for (std::size_t j = 0; j < d; ++j) policy.linear_.w[j] -= step * gw[j];
      policy.linear_.b -= step * gb;
    }
    return policy;
  }

  // Depth-3 regression tree. Each node splits one feature at the mean of the
  // node's samples for that feature, choosing the feature with the largest
  // squared-error reduction.
  policy.rep_ = DeterministicPolicy::Rep::tree;
  auto& nodes = policy.tree_;

  struct Frame {
    int node;
    std::vector<std::size_t> idx;
    int depth;
  };

  auto mean_of = [&](const std::vector<std::size_t>& idx) {
    double s = 0.0;
    for (std::size_t i : idx) s += ts.y[i];
    return s / static_cast<double>(idx.size());
  };
  auto sse_of = [&](const std::vector<std::size_t>& idx) {
    double m = mean_of(idx);
    double s = 0.0;
    for (std::size_t i : idx) s += (ts.y[i] - m) * (ts.y[i] - m);
    return s;
  };

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  nodes.push_back({});
  std::vector<Frame> stack{{0, std::move(all), 0}};
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    auto& node = nodes[static_cast<std::size_t>(f.node)];
    node.feature = -1;
    node.value = mean_of(f.idx);
    if (f.depth >= 3 || f.idx.size() < 2) continue;

    double parent_sse = sse_of(f.idx);
    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> best_left, best_right;
    for (std::size_t j = 0; j < d; ++j) {
      double thr = 0.0;
      for (std::size_t i : f.idx) thr += ts.x[i][j];
      thr /= static_cast<double>(f.idx.size());
      std::vector<std::size_t> left, right;
      for (std::size_t i : f.idx) (ts.x[i][j] <= thr ? left : right).push_back(i);
      if (left.empty() || right.empty()) continue;
      double gain = parent_sse - sse_of(left) - sse_of(right);
      if (gain > best_gain) {
        best_gain = gain;
        best_feature = static_cast<int>(j);
        best_threshold = thr;
        best_left = std::move(left);
        best_right = std::move(right);
      }
    }
    if (best_feature < 0) continue;

    int left_id = static_cast<int>(nodes.size());
    nodes.push_back({});
    int right_id = static_cast<int>(nodes.size());
    nodes.push_back({});
    auto& parent = nodes[static_cast<std::size_t>(f.node)];
    parent.feature = best_feature;
    parent.threshold = best_threshold;
    parent.left = left_id;
    parent.right = right_id;
    stack.push_back({right_id, std::move(best_right), f.depth + 1});
    stack.push_back({left_id, std::move(best_left), f.depth + 1});
  }
  return policy;
}

StochasticPolicy StochasticPolicy::uniform() {
  StochasticPolicy p;
  p.kind_ = Softening::uniform;
  return p;
}

int StochasticPolicy::base_bin(std::span<const double> x) const {
  double a = base_->predict(x);
  int bin = static_cast<int>(a * bins_);
  return std::min(bin, bins_ - 1);
}

double StochasticPolicy::bin_probability(int bin, int base, double u) const {
  double keep = alpha_ + beta_ * u;
  if (kind_ == Softening::friendly) {
    return bin == base ? keep : (1.0 - keep) / (bins_ - 1);
  }
  // adversarial: uniform over all bins w.p. 1 - keep, else over non-base bins
  double spread = (1.0 - keep) / bins_;
  return bin == base ? spread : spread + keep / (bins_ - 1);
}

StochasticPolicy::Draw StochasticPolicy::sample(std::span<const double> x, Rng& rng) const {
  Draw out;
  if (kind_ == Softening::uniform) {
    out.action = uniform01(rng);
    out.density = 1.0;
    return out;
  }
  int base = base_bin(x);
  double u = fixed_u_ ? *fixed_u_ : uniform01(rng) - 0.5;
  double keep = alpha_ + beta_ * u;

  int bin;
  double r = uniform01(rng);
  if (kind_ == Softening::friendly) {
    if (r < keep) {
      bin = base;
    } else {
      bin = static_cast<int>(uniform01(rng) * (bins_ - 1));
      bin = std::min(bin, bins_ - 2);
      if (bin >= base) ++bin;
    }
  } else {
    if (r < 1.0 - keep) {
      bin = std::min(static_cast<int>(uniform01(rng) * bins_), bins_ - 1);
    } else {
      bin = static_cast<int>(uniform01(rng) * (bins_ - 1));
      bin = std::min(bin, bins_ - 2);
      if (bin >= base) ++bin;
    }
  }
  out.action = (bin + uniform01(rng)) / bins_;
  out.density = bins_ * bin_probability(bin, base, u);
  return out;
}

double StochasticPolicy::density(std::span<const double> x, double a) const {
  if (a < 0.0 || a > 1.0) return 0.0;
  if (kind_ == Softening::uniform) return 1.0;
  int bin = std::min(static_cast<int>(a * bins_), bins_ - 1);
  double u = fixed_u_.value_or(0.0);
  return bins_ * bin_probability(bin, base_bin(x), u);
}

StochasticPolicy soften(DeterministicPolicy base, Softening kind, double alpha, double beta_soft,
                        int bins, std::optional<double> fixed_u) {
  if (kind == Softening::uniform) {
    throw std::invalid_argument("soften: use StochasticPolicy::uniform() for uniform logging");
  }
  if (bins < 2) throw std::invalid_argument("soften: need at least two bins");
  if (beta_soft < 0.0) throw std::invalid_argument("soften: beta must be nonnegative");
  auto in_range = [&](double u) {
    double p = alpha + beta_soft * u;
    return p >= 0.0 && p <= 1.0;
  };
  if (fixed_u) {
    if (*fixed_u < -0.5 || *fixed_u > 0.5 || !in_range(*fixed_u)) {
      throw std::invalid_argument("soften: fixed softening draw out of range");
    }
  } else if (!in_range(-0.5) || !in_range(0.5)) {
    throw std::invalid_argument("soften: alpha + beta*U must stay within [0,1]");
  }
  StochasticPolicy p;
  p.kind_ = kind;
  p.base_ = std::move(base);
  p.alpha_ = alpha;
  p.beta_ = beta_soft;
  p.bins_ = bins;
  p.fixed_u_ = fixed_u;
  return p;
}

CbDataset log_data(const StochasticPolicy& pi_l, const CbWorld& world, long n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("log_data: n must be at least 1");
  CbDataset data;
  data.tuples.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    CbTuple t;
    t.context = world.sample_context(rng);
    StochasticPolicy::Draw draw = pi_l.sample(t.context, rng);
    t.action = draw.action;
    t.logging_density = draw.density;
    t.reward = world.reward(t.action, world.optimal_action(t.context));
    data.tuples.push_back(std::move(t));
  }
  return data;
}

McEstimate monte_carlo_value(const DeterministicPolicy& pi_t, const CbWorld& world, long n,
                             Rng& rng) {
  if (n < 1) throw std::invalid_argument("monte_carlo_value: n must be at least 1");
  double sum = 0.0;
  double sumsq = 0.0;
  for (long i = 0; i < n; ++i) {
    std::vector<double> x = world.sample_context(rng);
    double r = world.reward(pi_t.predict(x), world.optimal_action(x));
    sum += r;
    sumsq += r * r;
  }
  McEstimate est;
  est.value = sum / static_cast<double>(n);
  if (n > 1) {
    double var = (sumsq - sum * sum / static_cast<double>(n)) / static_cast<double>(n - 1);
    est.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
  }
  return est;
}

}  // namespace slope::cb
