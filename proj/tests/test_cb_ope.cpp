#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "slope/cb_ope.hpp"

using namespace slope;
using namespace slope::cb;

namespace {

CbDataset hand_dataset(std::initializer_list<CbTuple> tuples) {
  CbDataset d;
  d.tuples = tuples;
  return d;
}

}  // namespace

TEST_CASE("kernel shapes") {
  CHECK(kernel_eval(Kernel::boxcar, 0.5) == doctest::Approx(0.5));
  CHECK(kernel_eval(Kernel::boxcar, -0.99) == doctest::Approx(0.5));
  CHECK(kernel_eval(Kernel::epanechnikov, 0.0) == doctest::Approx(0.75));
  CHECK(kernel_eval(Kernel::epanechnikov, 0.5) == doctest::Approx(0.75 * 0.75));
  CHECK(kernel_eval(Kernel::boxcar, 2.0) == doctest::Approx(0.0));
  CHECK(kernel_eval(Kernel::epanechnikov, 2.0) == doctest::Approx(0.0));
}

TEST_CASE("kernel mass is 1 in the interior and analytic at the boundary") {
  for (Kernel k : {Kernel::boxcar, Kernel::epanechnikov}) {
    CHECK(kernel_mass_in_unit(k, 0.5, 0.25) == doctest::Approx(1.0));
    // centered at the boundary: exactly half the mass stays inside
    CHECK(kernel_mass_in_unit(k, 0.0, 0.25) == doctest::Approx(0.5));
    CHECK(kernel_mass_in_unit(k, 1.0, 0.25) == doctest::Approx(0.5));
    // numeric cross-check on a clipped placement
    const int grid = 200000;
    double numeric = 0.0;
    for (int g = 0; g < grid; ++g) {
      double a = (g + 0.5) / grid;
      numeric += kernel_eval(k, (a - 0.9) / 0.3) / 0.3 / grid;
    }
    CHECK(kernel_mass_in_unit(k, 0.9, 0.3) == doctest::Approx(numeric).epsilon(1e-4));
  }
}

TEST_CASE("kernel_ips hand evaluations") {
  // Interior point, uniform logging, boxcar: (1/h) K(0.4) r / 1 = 1.
  CbDataset one = hand_dataset({{{0.0}, 0.3, 1.0, 1.0}});
  DeterministicPolicy mid = DeterministicPolicy::constant(0.5);
  CHECK(kernel_ips(one, mid, 0.5, Kernel::boxcar) == doctest::Approx(1.0));

  // Every sample outside the kernel support gives exactly zero.
  CbDataset far = hand_dataset({{{0.0}, 0.95, 1.0, 1.0}, {{0.0}, 0.9, 0.5, 1.0}});
  CHECK(kernel_ips(far, mid, 0.1, Kernel::boxcar) == doctest::Approx(0.0));

  // A tiny logging density inflates the raw mean beyond 1; clipping caps it.
  CbDataset heavy = hand_dataset({{{0.0}, 0.5, 1.0, 0.1}});
  CHECK(kernel_ips(heavy, mid, 0.5, Kernel::boxcar) == doctest::Approx(1.0));

  CHECK_THROWS_AS(kernel_ips(one, mid, 0.0, Kernel::boxcar), std::invalid_argument);
  CHECK_THROWS_AS(kernel_ips(CbDataset{}, mid, 0.5, Kernel::boxcar), std::invalid_argument);
}

TEST_CASE("theoretical confidence matches the closed form") {
  double expected = std::sqrt(2.0 * std::log(280.0) / 500.0) + 2.0 * std::log(280.0) / 1500.0;
  CHECK(cnf_cb_theoretical(1000, 0.5, 7, 0.05) == doctest::Approx(expected));
  CHECK(cnf_cb_theoretical(1000, 0.5, 7, 0.05) == doctest::Approx(0.1576).epsilon(1e-3));
  CHECK(cnf_cb_theoretical(100000000, 0.5, 7, 0.05) < 1e-3);
  CHECK(cnf_cb_theoretical(2, 0.01, 7, 0.05) == doctest::Approx(1.0));  // capped

  // strictly decreasing in h and n, increasing in M
  CHECK(cnf_cb_theoretical(1000, 0.25, 7, 0.05) > cnf_cb_theoretical(1000, 0.5, 7, 0.05));
  CHECK(cnf_cb_theoretical(500, 0.5, 7, 0.05) > cnf_cb_theoretical(1000, 0.5, 7, 0.05));
  CHECK(cnf_cb_theoretical(1000, 0.5, 9, 0.05) > cnf_cb_theoretical(1000, 0.5, 7, 0.05));
  CHECK_THROWS_AS(cnf_cb_theoretical(0, 0.5, 7, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(cnf_cb_theoretical(10, 0.5, 7, 1.5), std::invalid_argument);
}

TEST_CASE("empirical confidence is twice the standard error of the terms") {
  DeterministicPolicy mid = DeterministicPolicy::constant(0.5);
  // One sample outside the kernel support (term 0), one at the center whose
  // boundary-renormalized weight and density combine to a term of exactly 2.
  DeterministicPolicy low = DeterministicPolicy::constant(0.1);
  CbDataset data = hand_dataset({{{0.0}, 0.95, 1.0, 1.0},
                                 {{0.0}, 0.1, 1.0, 1.25}});
  CHECK(cnf_cb_empirical(data, low, 0.3, Kernel::boxcar) == doctest::Approx(2.0));

  CbDataset constant = hand_dataset({{{0.0}, 0.5, 1.0, 1.0}, {{0.0}, 0.5, 1.0, 1.0}});
  CHECK(cnf_cb_empirical(constant, mid, 0.5, Kernel::boxcar) == doctest::Approx(0.0));

  // Duplicating every point shrinks the width by sqrt((n-1)/(2n-1)), which
  // approaches 1/sqrt(2) for large n; exact value for n = 4 is sqrt(3/7).
  CbDataset base = hand_dataset({{{0.0}, 0.45, 0.8, 1.0},
                                 {{0.0}, 0.52, 0.3, 1.0},
                                 {{0.0}, 0.61, 0.9, 1.0},
                                 {{0.0}, 0.97, 0.2, 1.0}});
  CbDataset doubled = base;
  for (const CbTuple& t : base.tuples) doubled.tuples.push_back(t);
  double ratio = cnf_cb_empirical(doubled, mid, 0.5, Kernel::boxcar) /
                 cnf_cb_empirical(base, mid, 0.5, Kernel::boxcar);
  CHECK(ratio == doctest::Approx(std::sqrt(3.0 / 7.0)).epsilon(1e-9));

  CbDataset tiny = hand_dataset({{{0.0}, 0.5, 1.0, 1.0}});
  CHECK_THROWS_AS(cnf_cb_empirical(tiny, mid, 0.5, Kernel::boxcar), std::invalid_argument);
}

TEST_CASE("geometric grids expose their decay ratio to kappa_of") {
  for (double gamma : {0.25, 0.5}) {
    for (int m = 3; m <= 8; ++m) {
      BandwidthGrid grid = BandwidthGrid::geometric(0.5, gamma, m);
      REQUIRE(grid.size() == static_cast<std::size_t>(m));
      for (std::size_t i = 1; i < grid.size(); ++i) {
        CHECK(grid.bandwidths[i] > grid.bandwidths[i - 1]);
      }
      std::vector<double> cnfs;
      for (double h : grid.bandwidths) {
        cnfs.push_back(cnf_cb_theoretical(100000000, h, m, 0.05));
      }
      CHECK(kappa_of(cnfs) >= gamma - 1e-12);
    }
  }
  CHECK_THROWS_AS(BandwidthGrid::from_list({0.5, 0.25}), std::invalid_argument);
  CHECK_THROWS_AS(BandwidthGrid::geometric(0.5, 1.2, 4), std::invalid_argument);
}

TEST_CASE("slope_bandwidth degenerate grids") {
  CbWorld world = CbWorld::with_beta({0.2, -0.4}, 1.0, RewardKind::absolute_value);
  Rng rng = make_rng(5, "slope_bw");
  CbDataset data = log_data(StochasticPolicy::uniform(), world, 64, rng);
  DeterministicPolicy pi = DeterministicPolicy::constant(0.5);

  BandwidthGrid single = BandwidthGrid::from_list({0.25});
  BandwidthSelection sel = slope_bandwidth(data, pi, single, Kernel::boxcar, CnfMode::empirical);
  CHECK(sel.chosen_h == doctest::Approx(0.25));
  CHECK(sel.estimate == doctest::Approx(kernel_ips(data, pi, 0.25, Kernel::boxcar)));

  // Identical estimates at both bandwidths: the common center lies in every
  // interval, so the larger bandwidth (smaller cnf) wins.
  CbDataset flat = hand_dataset({{{0.0}, 0.5, 1.0, 1.0},
                                 {{0.0}, 0.5, 1.0, 1.0},
                                 {{0.0}, 0.5, 1.0, 1.0}});
  BandwidthGrid two = BandwidthGrid::from_list({0.25, 0.5});
  BandwidthSelection flat_sel = slope_bandwidth(flat, pi, two, Kernel::boxcar, CnfMode::empirical);
  CHECK(flat_sel.selection.chosen_index == 2);
  CHECK(flat_sel.chosen_h == doctest::Approx(0.5));
}

TEST_CASE("bandwidth selection switches arms as the sample size grows") {
  // The oracle policy sits on the reward peak, so h = 1/4 carries a strong
  // bias (~3h/2) while h = 1/32 is nearly unbiased: with few samples the
  // intervals overlap and the wide bandwidth wins; with many samples they
  // separate and selection moves to the narrow one.
  cb::CbWorld world(5, 3.0, RewardKind::absolute_value, 4242);
  DeterministicPolicy pi = DeterministicPolicy::oracle(world);
  BandwidthGrid grid = BandwidthGrid::from_list({1.0 / 32.0, 1.0 / 4.0});
  int wide_at_small_n = 0;
  int narrow_at_large_n = 0;
  const int replicates = 20;
  for (int rep = 0; rep < replicates; ++rep) {
    Rng small_rng = make_rng(4243, "small", static_cast<std::uint64_t>(rep));
    CbDataset small = log_data(StochasticPolicy::uniform(), world, 100, small_rng);
    if (slope_bandwidth(small, pi, grid, Kernel::boxcar, CnfMode::empirical).chosen_h == 0.25) {
      ++wide_at_small_n;
    }
    Rng large_rng = make_rng(4243, "large", static_cast<std::uint64_t>(rep));
    CbDataset large = log_data(StochasticPolicy::uniform(), world, 50000, large_rng);
    if (slope_bandwidth(large, pi, grid, Kernel::boxcar, CnfMode::empirical).chosen_h ==
        1.0 / 32.0) {
      ++narrow_at_large_n;
    }
  }
  CHECK(wide_at_small_n >= 16);
  CHECK(narrow_at_large_n >= 16);
}

TEST_CASE("kernel estimator is unbiased for action-independent rewards") {
  // Constant reward surface: the estimand is exactly 1 for any policy, and the
  // boxcar estimator with uniform logging is unbiased at interior points.
  CbWorld flat(2, 0.0, RewardKind::absolute_value, 300);
  DeterministicPolicy pi = DeterministicPolicy::constant(0.5);
  Rng rng = make_rng(301, "unbiased");
  const int replicates = 200;
  double sum = 0.0;
  double sumsq = 0.0;
  for (int r = 0; r < replicates; ++r) {
    CbDataset data = log_data(StochasticPolicy::uniform(), flat, 200, rng);
    // raw mean, no clipping, to test unbiasedness of the core estimator
    auto terms = kernel_ips_terms(data, pi, 0.25, Kernel::boxcar);
    double est = 0.0;
    for (double v : terms) est += v;
    est /= static_cast<double>(terms.size());
    sum += est;
    sumsq += est * est;
  }
  double mean = sum / replicates;
  double se = std::sqrt((sumsq / replicates - mean * mean) / replicates);
  CHECK(std::abs(mean - 1.0) <= 3.0 * se + 1e-9);
}

TEST_CASE("bias of the kernel estimator is bounded by L times the bandwidth") {
  CbWorld world = CbWorld::with_beta({0.7, -0.3}, 1.0, RewardKind::absolute_value);
  Rng truth_rng = make_rng(400, "truth");
  DeterministicPolicy pi = DeterministicPolicy::oracle(world);
  double truth = monte_carlo_value(pi, world, 200000, truth_rng).value;

  Rng rng = make_rng(401, "bias");
  for (double h : {0.5, 0.25, 0.125}) {
    const int replicates = 120;
    double sum = 0.0;
    double sumsq = 0.0;
    for (int r = 0; r < replicates; ++r) {
      CbDataset data = log_data(StochasticPolicy::uniform(), world, 400, rng);
      double est = kernel_ips(data, pi, h, Kernel::boxcar);
      sum += est;
      sumsq += est * est;
    }
    double mean = sum / replicates;
    double se = std::sqrt(std::max(sumsq / replicates - mean * mean, 0.0) / replicates);
    CHECK(std::abs(mean - truth) <= world.lipschitz() * h + 3.0 * se + 1e-3);
  }
}
