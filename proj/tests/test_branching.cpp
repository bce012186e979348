#include "fragkit/branching_mc.hpp"
#include "fragkit/pbe.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace fragkit;

namespace {

HomogeneousKernel uniform(double alpha, double k = 1.0) {
  return HomogeneousKernel(alpha, k, 1.0, DaughterLaw::uniform_binary());
}

}  // namespace

TEST(Fenwick, FindMatchesLinearScan) {
  const std::vector<double> w{0.5, 0.0, 2.0, 1.25, 0.0, 0.75, 3.0};
  FenwickTree tree(w);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  EXPECT_DOUBLE_EQ(tree.total(), total);
  for (double target = 0.0; target < total; target += 0.01) {
    double acc = 0.0;
    std::size_t expected = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (target < acc + w[i]) {
        expected = i;
        break;
      }
      acc += w[i];
    }
    ASSERT_EQ(tree.find(target), expected) << "target=" << target;
  }
}

TEST(Fenwick, UpdatesAndWeights) {
  FenwickTree tree(std::vector<double>(10, 1.0));
  tree.add(3, 4.0);
  tree.add(9, -1.0);
  const auto w = tree.weights();
  EXPECT_DOUBLE_EQ(w[3], 5.0);
  EXPECT_DOUBLE_EQ(w[9], 0.0);
  EXPECT_DOUBLE_EQ(tree.total(), 13.0);
}

TEST(CompensatedSum, RecoversSmallTerms) {
  CompensatedSum s;
  s.add(1.0);
  for (int i = 0; i < 1000; ++i) s.add(1e-17);
  s.add(-1.0);
  EXPECT_NEAR(s.value(), 1e-14, 1e-20);
}

TEST(Branching, ConservesMassExactly) {
  const auto kernel = HomogeneousKernel(1.0, 3.0, 1.0, DaughterLaw::symmetric_beta(2.0));
  auto rng = replica_stream(4, 0);
  const auto res = simulate_branching(kernel, monodisperse_population(1.0, 5), 4.0, rng);
  EXPECT_EQ(res.status, BranchingStatus::completed);
  EXPECT_EQ(res.population.sizes.size(), 5 + res.events);
  EXPECT_NEAR(res.population.total_mass, 5.0, 1e-12);
  EXPECT_DOUBLE_EQ(res.population.t, 4.0);
}

TEST(Branching, CutoffRemovesMassButKeepsBudget) {
  const auto kernel = uniform(0.0, 2.0);
  BranchingControls c;
  c.xi_min_cutoff = -2.0;
  auto rng = replica_stream(4, 1);
  const auto res = simulate_branching(kernel, monodisperse_population(1.0, 1), 5.0, rng, c);
  EXPECT_GT(res.population.removed_count, 0u);
  for (double x : res.population.sizes) EXPECT_GE(x, std::exp(-2.0));
  EXPECT_NEAR(res.population.total_mass + res.population.removed_mass, 1.0, 1e-12);
}

TEST(Branching, StopsAtLimits) {
  const auto kernel = uniform(0.0, 5.0);
  BranchingControls events;
  events.max_events = 10;
  auto a = replica_stream(1, 0);
  const auto r1 = simulate_branching(kernel, monodisperse_population(1.0, 1), 100.0, a, events);
  EXPECT_EQ(r1.status, BranchingStatus::event_limit);
  EXPECT_EQ(r1.events, 10u);
  EXPECT_LT(r1.population.t, 100.0);

  BranchingControls cap;
  cap.max_particles = 50;
  auto b = replica_stream(1, 0);
  const auto r2 = simulate_branching(kernel, monodisperse_population(1.0, 1), 100.0, b, cap);
  EXPECT_EQ(r2.status, BranchingStatus::population_cap);
  EXPECT_LE(r2.population.sizes.size(), 50u);

  EXPECT_THROW(run_branching_ensemble(kernel, monodisperse_population(1.0, 1), 100.0, 3, 1, SizeGrid(1.0, 2.0, 8), cap),
               Error);
}

TEST(Branching, RejectsBareNumberDensity) {
  const HomogeneousKernel kernel(1.0, 1.0, 1.0, DaughterLaw::number_density([](double) { return 2.0; }));
  auto rng = replica_stream(1, 0);
  EXPECT_THROW(simulate_branching(kernel, monodisperse_population(1.0, 1), 1.0, rng), Error);
  EXPECT_THROW(ParticlePopulation(std::vector<double>{1.0, -1.0}), Error);
}

TEST(Branching, YuleProcessMean) {
  // Constant rate binary splitting: E N(t) = N0 e^{kt}.
  const auto kernel = uniform(0.0, 1.0);
  const auto ens = run_branching_ensemble(kernel, monodisperse_population(1.0, 2), 1.2, 8000, 31, SizeGrid(1.0, 2.0, 20));
  const auto est = number_density_estimate(ens);
  EXPECT_NEAR(est.mean_particles, 2 * std::exp(1.2), 4 * est.stderr_particles);
  for (double e : ens.mass_error) EXPECT_LE(e, 1e-12);
}

TEST(Branching, EnsembleIsThreadCountInvariant) {
  const auto kernel = uniform(1.0);
  const SizeGrid bins(1.0, 2.0, 10);
  const auto a = run_branching_ensemble(kernel, monodisperse_population(1.0, 1), 1.0, 500, 8, bins, {}, 1);
  const auto b = run_branching_ensemble(kernel, monodisperse_population(1.0, 1), 1.0, 500, 8, bins, {}, 3);
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_EQ(a.particles, b.particles);
}

TEST(Branching, MeanCountsFollowPbe) {
  const auto kernel = uniform(1.0);
  const SizeGrid fine(1.0, 6.0, 60);
  const auto ens = run_branching_ensemble(kernel, monodisperse_population(1.0, 1), 1.0, 6000, 12, fine);
  const auto mc = coarsen(number_density_estimate(ens).mean, 3);
  const auto pbe = coarsen(solve_pbe_number(kernel, monodisperse_field(fine, 1.0), 1.0), 3);
  double l1 = 0.0;
  for (std::size_t i = 0; i < mc.numbers.size(); ++i) {
    l1 += std::abs(mc.numbers[i] / mc.total_number() - pbe.numbers[i] / pbe.total_number());
  }
  EXPECT_LT(l1, 0.06);
}

TEST(Branching, SiblingPairsExceedMultinomialCovariance) {
  // One parent of size 1 splitting once: a small fragment always comes with
  // a large sibling, so those bins co-vary more than independent draws would.
  const auto kernel = uniform(0.0, 1.0);
  const SizeGrid bins(1.0 / std::sqrt(std::sqrt(2.0)), 2.0, 6);
  BranchingControls once;
  once.max_events = 1;
  const auto ens = run_branching_ensemble(kernel, monodisperse_population(1.0, 1), 50.0, 5000, 2, bins, once);
  const auto g = branching_correlator(ens);
  EXPECT_EQ(g.runs, 5000u);
  EXPECT_EQ(g.gc.rows(), 6);
  double mean_n = 0.0;
  for (double n : ens.particles) mean_n += n;
  mean_n /= static_cast<double>(ens.particles.size());
  EXPECT_DOUBLE_EQ(mean_n, 2.0);
  const Eigen::MatrixXd oracle = multinomial_covariance(g.mean, mean_n);
  double best = -1e300;
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index j = 0; j < 6; ++j) {
      if (i != j && g.stderr_gc(i, j) > 0) best = std::max(best, (g.gc(i, j) - oracle(i, j)) / g.stderr_gc(i, j));
    }
  }
  EXPECT_GT(best, 3.0);
}
