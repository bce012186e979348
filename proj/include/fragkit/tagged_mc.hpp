#pragma once

// Tagged-mass jump process: the log-size of the fragment carrying a fixed
// mass element. Holding times are exact exponentials because the rate only
// changes at jumps.

#include "fragkit/correlation.hpp"
#include "fragkit/errors.hpp"
#include "fragkit/grid.hpp"
#include "fragkit/kernel.hpp"
#include "fragkit/parallel.hpp"
#include "fragkit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <vector>

namespace fragkit {

struct TaggedTrajectory {
  std::vector<double> times;
  std::vector<double> positions;
};

inline constexpr std::size_t default_event_cap = 1'000'000;

namespace detail {

template <typename Record>
double run_tagged(const HomogeneousKernel& kernel, const LogJumpLaw& law, double xi0, double t, RandomStream& rng,
                  std::size_t max_events, Record&& record) {
  double xi = xi0;
  double now = 0.0;
  std::size_t events = 0;
  while (true) {
    const double wait = exponential(rng, breakage_rate(kernel, xi));
    if (now + wait > t) break;
    now += wait;
    if (++events > max_events) {
      std::ostringstream msg;
      msg << "tagged trajectory exceeded " << max_events << " events before t = " << t;
      fail(ErrorCode::event_cap, msg.str());
    }
    xi -= law.sample(rng);
    record(now, xi);
  }
  return xi;
}

}  // namespace detail

/// Full event list; the first entry is (0, xi0).
inline TaggedTrajectory simulate_tagged(const HomogeneousKernel& kernel, const LogJumpLaw& law, double xi0, double t,
                                        RandomStream& rng, std::size_t max_events = default_event_cap) {
  if (!(t >= 0.0)) fail(ErrorCode::domain, "simulation time must be non-negative");
  TaggedTrajectory out;
  out.times.push_back(0.0);
  out.positions.push_back(xi0);
  detail::run_tagged(kernel, law, xi0, t, rng, max_events, [&](double when, double where) {
    out.times.push_back(when);
    out.positions.push_back(where);
  });
  return out;
}

/// Position at time t without storing the path.
inline double tagged_final_position(const HomogeneousKernel& kernel, const LogJumpLaw& law, double xi0, double t,
                                    RandomStream& rng, std::size_t max_events = default_event_cap) {
  if (!(t >= 0.0)) fail(ErrorCode::domain, "simulation time must be non-negative");
  return detail::run_tagged(kernel, law, xi0, t, rng, max_events, [](double, double) {});
}

/// Draws an initial log-size from the replica's own stream.
using InitialSampler = std::function<double(RandomStream&)>;

inline InitialSampler delta_sampler(double xi0) {
  return [xi0](RandomStream&) { return xi0; };
}

/// Cell chosen with probability proportional to its mass, position uniform
/// inside the cell.
inline InitialSampler field_sampler(const GridField& p0) {
  std::vector<double> cdf(p0.grid.n);
  double acc = 0.0;
  for (std::size_t i = 0; i < p0.grid.n; ++i) {
    acc += std::max(0.0, p0.values[i]);
    cdf[i] = acc;
  }
  if (!(acc > 0.0)) fail(ErrorCode::empty_population, "initial density is empty");
  for (auto& c : cdf) c /= acc;
  const UniformGrid grid = p0.grid;
  return [cdf = std::move(cdf), grid](RandomStream& rng) {
    const double u = uniform01(rng);
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const std::size_t cell = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), grid.n - 1);
    return grid.node(cell) + (uniform01(rng) - 0.5) * grid.spacing();
  };
}

struct TaggedEnsemble {
  std::vector<double> positions;
  double t = 0.0;
  std::uint64_t seed = 0;
  std::size_t replicas = 0;
};

struct EnsembleOptions {
  unsigned threads = 1;
  std::size_t max_events = default_event_cap;
};

/// R independent replicas; replica r uses replica_stream(seed, r) for both
/// its initial position and its path.
inline TaggedEnsemble run_tagged_ensemble(const HomogeneousKernel& kernel, const LogJumpLaw& law,
                                          const InitialSampler& initial, double t, std::size_t replicas,
                                          std::uint64_t seed, const EnsembleOptions& options = {}) {
  TaggedEnsemble ens;
  ens.t = t;
  ens.seed = seed;
  ens.replicas = replicas;
  ens.positions.resize(replicas);
  parallel_for(replicas, options.threads, [&](std::size_t r) {
    auto rng = replica_stream(seed, r);
    const double start = initial(rng);
    ens.positions[r] = tagged_final_position(kernel, law, start, t, rng, options.max_events);
  });
  return ens;
}

struct DensityEstimate {
  GridField density;
  std::vector<double> stderr_values;
};

/// Histogram on the grid cells divided by R h, so in-grid mass plus the
/// fraction that ended outside (stored as leaked_mass) is one.
inline DensityEstimate ensemble_density(const TaggedEnsemble& ens, const UniformGrid& grid) {
  if (ens.positions.empty()) fail(ErrorCode::empty_population, "ensemble has no replicas");
  std::vector<double> counts(grid.n, 0.0);
  std::size_t outside = 0;
  for (double xi : ens.positions) {
    const long c = grid.cell_of(xi);
    if (c < 0 || c >= static_cast<long>(grid.n)) {
      ++outside;
      continue;
    }
    counts[static_cast<std::size_t>(c)] += 1.0;
  }
  const double r = static_cast<double>(ens.positions.size());
  const double h = grid.spacing();
  DensityEstimate out{GridField(grid), std::vector<double>(grid.n)};
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double p = counts[i] / r;
    out.density.values[i] = p / h;
    out.stderr_values[i] = std::sqrt(p * (1.0 - p) / r) / h;
  }
  out.density.leaked_mass = static_cast<double>(outside) / r;
  return out;
}

/// Bin-count covariance over `runs` independent runs of `tags` tagged
/// elements each. Tag m of run r uses replica index r * tags + m.
inline CorrelationEstimate tagged_correlator(const HomogeneousKernel& kernel, const LogJumpLaw& law,
                                             const InitialSampler& initial, double t, std::size_t runs,
                                             std::size_t tags, const UniformGrid& bins, std::uint64_t seed,
                                             const EnsembleOptions& options = {}) {
  if (runs < 2 || tags < 1) fail(ErrorCode::domain, "correlator needs at least two runs and one tag");
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(runs), static_cast<Eigen::Index>(bins.n));
  parallel_for(runs, options.threads, [&](std::size_t r) {
    for (std::size_t m = 0; m < tags; ++m) {
      auto rng = replica_stream(seed, r * tags + m);
      const double start = initial(rng);
      const double xi = tagged_final_position(kernel, law, start, t, rng, options.max_events);
      const long c = bins.cell_of(xi);
      if (c >= 0 && c < static_cast<long>(bins.n)) counts(static_cast<Eigen::Index>(r), c) += 1.0;
    }
  });
  return count_covariance(counts, bins.nodes());
}

}  // namespace fragkit
