#pragma once

// Binary fragmentation cascade. Every particle breaks at rate S(x); a break
// replaces x by zx and x - zx with z drawn from the split density.

#include "fragkit/correlation.hpp"
#include "fragkit/errors.hpp"
#include "fragkit/grid.hpp"
#include "fragkit/kernel.hpp"
#include "fragkit/parallel.hpp"
#include "fragkit/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

namespace fragkit {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

/// Binary-indexed tree over non-negative weights with prefix search.
class FenwickTree {
 public:
  FenwickTree() = default;
  explicit FenwickTree(const std::vector<double>& weights) { rebuild(weights); }

  void rebuild(const std::vector<double>& weights) {
    n_ = weights.size();
    tree_.assign(n_ + 1, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      tree_[i + 1] += weights[i];
      const std::size_t parent = (i + 1) + ((i + 1) & (~(i + 1) + 1));
      if (parent <= n_) tree_[parent] += tree_[i + 1];
    }
    highest_ = 1;
    while (highest_ * 2 <= n_) highest_ *= 2;
  }

  void add(std::size_t index, double delta) {
    for (std::size_t i = index + 1; i <= n_; i += i & (~i + 1)) tree_[i] += delta;
  }

  double total() const {
    double s = 0.0;
    for (std::size_t i = n_; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

  /// Smallest index whose inclusive prefix sum exceeds `target`.
  std::size_t find(double target) const {
    std::size_t pos = 0;
    for (std::size_t step = highest_; step > 0; step >>= 1) {
      const std::size_t next = pos + step;
      if (next <= n_ && tree_[next] <= target) {
        pos = next;
        target -= tree_[next];
      }
    }
    return std::min(pos, n_ - 1);
  }

  std::size_t size() const { return n_; }

  std::vector<double> weights() const {
    std::vector<double> w(n_);
    for (std::size_t i = 0; i < n_; ++i) w[i] = prefix(i + 1) - prefix(i);
    return w;
  }

 private:
  double prefix(std::size_t count) const {
    double s = 0.0;
    for (std::size_t i = count; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

  std::size_t n_ = 0;
  std::size_t highest_ = 1;
  std::vector<double> tree_;
};

struct ParticlePopulation {
  std::vector<double> sizes;
  double t = 0.0;
  double total_mass = 0.0;
  double removed_mass = 0.0;
  std::size_t removed_count = 0;

  ParticlePopulation() = default;
  explicit ParticlePopulation(std::vector<double> initial) : sizes(std::move(initial)) {
    for (double x : sizes) {
      if (!(x > 0.0) || !std::isfinite(x)) fail(ErrorCode::domain, "particle sizes must be positive and finite");
    }
    total_mass = mass_of(sizes);
  }

  static double mass_of(const std::vector<double>& xs) {
    CompensatedSum s;
    for (double x : xs) s.add(x);
    return s.value();
  }
};

inline ParticlePopulation monodisperse_population(double x, std::size_t count) {
  return ParticlePopulation(std::vector<double>(count, x));
}

struct BranchingControls {
  std::size_t max_particles = 10'000'000;
  std::optional<double> xi_min_cutoff;              // remove daughters with ln(x / x0) below this
  std::size_t max_events = std::numeric_limits<std::size_t>::max();
};

enum class BranchingStatus { completed, event_limit, population_cap };

struct BranchingResult {
  ParticlePopulation population;
  BranchingStatus status = BranchingStatus::completed;
  std::size_t events = 0;
};

inline constexpr std::size_t rate_rebuild_interval = std::size_t{1} << 20;

/// Exact event-driven cascade up to time t. Hitting max_particles returns
/// the partial state with status population_cap; hitting max_events stops
/// early with status event_limit.
inline BranchingResult simulate_branching(const HomogeneousKernel& kernel, const ParticlePopulation& initial, double t,
                                          RandomStream& rng, const BranchingControls& controls = {}) {
  if (initial.sizes.empty()) fail(ErrorCode::empty_population, "initial population is empty");
  if (!(t >= 0.0)) fail(ErrorCode::domain, "simulation time must be non-negative");
  if (!kernel.daughter().has_split_density()) {
    fail(ErrorCode::invalid_kernel, "branching needs a binary split density");
  }
  const double cutoff_size = controls.xi_min_cutoff
                                 ? kernel.x0() * std::exp(*controls.xi_min_cutoff)
                                 : 0.0;
  BranchingResult result;
  ParticlePopulation& pop = result.population;
  pop.t = initial.t;
  pop.removed_mass = initial.removed_mass;
  pop.removed_count = initial.removed_count;

  // Slots may be vacated by cutoff removals; free slots carry zero weight.
  std::vector<double> slots = initial.sizes;
  std::vector<std::size_t> free_slots;
  std::size_t live = slots.size();
  auto rates_of = [&] {
    std::vector<double> w(slots.size());
    for (std::size_t i = 0; i < slots.size(); ++i) w[i] = slots[i] > 0.0 ? kernel.selection_rate(slots[i]) : 0.0;
    return w;
  };
  // Capacity grows geometrically so appends stay amortized O(log N).
  std::size_t capacity = std::max<std::size_t>(16, slots.size() * 2);
  for (std::size_t i = slots.size(); i < capacity; ++i) free_slots.push_back(i);
  slots.resize(capacity, 0.0);
  std::reverse(free_slots.begin(), free_slots.end());
  FenwickTree tree(rates_of());

  auto grow = [&] {
    const std::size_t old = slots.size();
    slots.resize(old * 2, 0.0);
    for (std::size_t i = slots.size(); i-- > old;) free_slots.push_back(i);
    tree.rebuild(rates_of());
  };
  auto place = [&](double x) {
    if (x < cutoff_size) {
      pop.removed_mass += x;
      ++pop.removed_count;
      return;
    }
    if (free_slots.empty()) grow();
    const std::size_t slot = free_slots.back();
    free_slots.pop_back();
    slots[slot] = x;
    tree.add(slot, kernel.selection_rate(x));
    ++live;
  };

  double now = 0.0;
  while (live > 0) {
    const double total = tree.total();
    if (!(total > 0.0)) break;
    const double wait = exponential(rng, total);
    if (now + wait > t) break;
    if (result.events >= controls.max_events) {
      result.status = BranchingStatus::event_limit;
      break;
    }
    if (live + 1 > controls.max_particles) {
      result.status = BranchingStatus::population_cap;
      break;
    }
    now += wait;
    std::size_t i = tree.find(uniform01(rng) * total);
    // Round-off can leave a vacated slot with a vanishing weight.
    while (!(slots[i] > 0.0)) i = tree.find(uniform01(rng) * total);
    const double x = slots[i];
    const double z = kernel.daughter().sample_split(rng);
    const double first = z * x;
    const double second = x - first;
    tree.add(i, -kernel.selection_rate(x));
    slots[i] = 0.0;
    free_slots.push_back(i);
    --live;
    place(first);
    place(second);
    ++result.events;
    if (result.events % rate_rebuild_interval == 0) tree.rebuild(rates_of());
  }
  pop.t = initial.t + (result.status == BranchingStatus::completed ? t : now);
  pop.sizes.clear();
  pop.sizes.reserve(live);
  for (double x : slots) {
    if (x > 0.0) pop.sizes.push_back(x);
  }
  pop.total_mass = ParticlePopulation::mass_of(pop.sizes);
  return result;
}

/// Per-run bin counts of many independent cascades on a size grid.
struct BranchingEnsemble {
  SizeGrid bins;
  Eigen::MatrixXd counts;            // runs x bins
  std::vector<double> particles;     // N per run (all sizes, including off-grid)
  std::vector<double> mass_error;    // |M + removed - M0| / M0 per run
  std::size_t capped_runs = 0;
  std::uint64_t seed = 0;
};

inline BranchingEnsemble run_branching_ensemble(const HomogeneousKernel& kernel, const ParticlePopulation& initial,
                                                double t, std::size_t runs, std::uint64_t seed, const SizeGrid& bins,
                                                const BranchingControls& controls = {}, unsigned threads = 1) {
  if (runs < 1) fail(ErrorCode::domain, "need at least one run");
  BranchingEnsemble ens;
  ens.bins = bins;
  ens.seed = seed;
  ens.counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(runs), static_cast<Eigen::Index>(bins.n));
  ens.particles.assign(runs, 0.0);
  ens.mass_error.assign(runs, 0.0);
  std::vector<char> capped(runs, 0);
  const double m0 = initial.total_mass + initial.removed_mass;
  parallel_for(runs, threads, [&](std::size_t r) {
    auto rng = replica_stream(seed, r);
    const auto res = simulate_branching(kernel, initial, t, rng, controls);
    capped[r] = res.status == BranchingStatus::population_cap;
    const auto& pop = res.population;
    ens.particles[r] = static_cast<double>(pop.sizes.size());
    ens.mass_error[r] = std::abs(pop.total_mass + pop.removed_mass - m0) / m0;
    for (double x : pop.sizes) {
      const long c = bins.cell_of(x);
      if (c >= 0 && c < static_cast<long>(bins.n)) ens.counts(static_cast<Eigen::Index>(r), c) += 1.0;
    }
  });
  for (char c : capped) ens.capped_runs += c ? 1 : 0;
  if (ens.capped_runs > 0) {
    std::ostringstream msg;
    msg << ens.capped_runs << " of " << runs << " runs hit the particle cap of " << controls.max_particles;
    fail(ErrorCode::population_cap, msg.str());
  }
  return ens;
}

struct NumberDensityEstimate {
  SizeField mean;                    // mean count per pivot cell
  std::vector<double> stderr_counts;
  double mean_particles = 0.0;
  double stderr_particles = 0.0;
};

inline NumberDensityEstimate number_density_estimate(const BranchingEnsemble& ens) {
  const auto runs = static_cast<double>(ens.counts.rows());
  NumberDensityEstimate out{SizeField(ens.bins), std::vector<double>(ens.bins.n)};
  for (std::size_t i = 0; i < ens.bins.n; ++i) {
    const Eigen::VectorXd col = ens.counts.col(static_cast<Eigen::Index>(i));
    const double m = col.mean();
    out.mean.numbers[i] = m;
    const double var = runs > 1 ? (col.array() - m).square().sum() / (runs - 1) : 0.0;
    out.stderr_counts[i] = std::sqrt(var / runs);
  }
  double sum = 0.0, sq = 0.0;
  for (double n : ens.particles) sum += n;
  out.mean_particles = sum / runs;
  for (double n : ens.particles) sq += (n - out.mean_particles) * (n - out.mean_particles);
  out.stderr_particles = runs > 1 ? std::sqrt(sq / (runs - 1) / runs) : 0.0;
  return out;
}

inline CorrelationEstimate branching_correlator(const BranchingEnsemble& ens) {
  std::vector<double> centres(ens.bins.n);
  for (std::size_t i = 0; i < ens.bins.n; ++i) centres[i] = ens.bins.pivot(i);
  return count_covariance(ens.counts, std::move(centres));
}

}  // namespace fragkit
