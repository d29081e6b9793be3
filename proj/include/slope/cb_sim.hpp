#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "slope/rng.hpp"

namespace slope::cb {

inline double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

enum class RewardKind { absolute_value, quadratic };

//! Synthetic contextual-bandit world over the unit action interval.
//! Contexts are standard normal; the best action for a context is
//! sigmoid(beta* . x) with beta* drawn N(0,1) once at construction.
class CbWorld {
 public:
  CbWorld(int context_dim, double lipschitz, RewardKind kind, std::uint64_t seed);

  //! World with a fixed hidden parameter vector instead of a seeded draw.
  static CbWorld with_beta(std::vector<double> beta, double lipschitz, RewardKind kind);

  int context_dim() const { return context_dim_; }
  double lipschitz() const { return lipschitz_; }
  RewardKind reward_kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<double>& beta_star() const { return beta_star_; }

  std::vector<double> sample_context(Rng& rng) const;
  double optimal_action(std::span<const double> x) const;

  //! absolute_value: 1 - min(L |a - a*|, 1); quadratic: 1 - min(L/4 (a - a*)^2, 1).
  double reward(double a, double a_star) const;

 private:
  int context_dim_;
  double lipschitz_;
  RewardKind kind_;
  std::uint64_t seed_;
  std::vector<double> beta_star_;
};

enum class ModelKind { linear_sigmoid, tree };

//! Deterministic context-to-action map, output always in [0,1].
class DeterministicPolicy {
 public:
  double predict(std::span<const double> x) const;

  static DeterministicPolicy constant(double action);
  //! Plays the world's best action exactly.
  static DeterministicPolicy oracle(const CbWorld& world);

 private:
  struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    double value = 0.0;
    int left = -1;
    int right = -1;
  };
  struct Linear {
    std::vector<double> w;
    double b = 0.0;
  };

  enum class Rep { linear, tree, constant, oracle } rep_ = Rep::constant;
  Linear linear_;
  std::vector<TreeNode> tree_;
  double constant_ = 0.5;
  std::vector<double> oracle_beta_;

  friend DeterministicPolicy train_policy(const CbWorld&, ModelKind, Rng&, double);
};

//! Regress context -> best action on 10 noisy samples (x, a*(x) + noise).
//! linear_sigmoid: full-batch gradient descent on squared loss, 2000 steps,
//! step size 0.1. tree: depth-3 regression tree, split at the feature mean.
DeterministicPolicy train_policy(const CbWorld& world, ModelKind kind, Rng& rng,
                                 double noise_sd = 0.70710678118654752440);

enum class Softening { uniform, friendly, adversarial };

//! Stochastic logging policy over [0,1], built by discretizing a deterministic
//! base policy into m bins and randomizing the bin choice. The per-decision
//! softening draw U ~ Unif[-0.5, 0.5] perturbs the keep probability to
//! alpha + beta U; pass fixed_u to pin it instead.
class StochasticPolicy {
 public:
  struct Draw {
    double action = 0.0;
    double density = 0.0;  // conditional density given the realized softening draw
  };

  static StochasticPolicy uniform();

  Draw sample(std::span<const double> x, Rng& rng) const;

  //! Density marginalized over the softening draw (equals the conditional at
  //! U = 0 by linearity). Zero outside [0,1].
  double density(std::span<const double> x, double a) const;

  Softening kind() const { return kind_; }
  int bins() const { return bins_; }

 private:
  Softening kind_ = Softening::uniform;
  std::optional<DeterministicPolicy> base_;
  double alpha_ = 0.0;
  double beta_ = 0.0;
  int bins_ = 1;
  std::optional<double> fixed_u_;

  int base_bin(std::span<const double> x) const;
  double bin_probability(int bin, int base, double u) const;

  friend StochasticPolicy soften(DeterministicPolicy, Softening, double, double, int,
                                 std::optional<double>);
};

//! friendly: keep the base policy's bin with probability alpha + beta U, else
//! uniform over the other m-1 bins. adversarial: uniform over all m bins with
//! probability 1 - (alpha + beta U), else uniform over the other m-1 bins.
//! The continuous action is uniform within the selected bin, so the density is
//! m times the selected bin's probability.
StochasticPolicy soften(DeterministicPolicy base, Softening kind, double alpha, double beta_soft,
                        int bins = 10, std::optional<double> fixed_u = std::nullopt);

struct CbTuple {
  std::vector<double> context;
  double action = 0.0;
  double reward = 0.0;
  double logging_density = 0.0;
};

struct CbDataset {
  std::vector<CbTuple> tuples;
  std::size_t n() const { return tuples.size(); }
};

//! n i.i.d. logged tuples; the recorded density is the exact conditional
//! density of the sampled action given the softening draw used to sample it.
CbDataset log_data(const StochasticPolicy& pi_l, const CbWorld& world, long n, Rng& rng);

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

//! Monte-Carlo estimate of the target policy's value over fresh contexts.
McEstimate monte_carlo_value(const DeterministicPolicy& pi_t, const CbWorld& world, long n,
                             Rng& rng);

}  // namespace slope::cb
