#pragma once

// Size-space pure-breakage equation solved with a fixed-pivot sectional
// scheme, and the mass-weighted map between size and log-size densities.

#include "fragkit/errors.hpp"
#include "fragkit/grid.hpp"
#include "fragkit/kernel.hpp"
#include "fragkit/log_master.hpp"
#include "fragkit/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace fragkit {

/// Expected number of daughters a parent at pivot k hands to pivot k - d.
///
/// Daughters at x between two pivots are split with linear weights (number
/// and mass preserved). Everything below the lowest pivot is returned
/// separately as mass, per unit parent size.
struct PivotBreakageTable {
  std::vector<double> share;  // share[d], d = 0 .. n-1
};

inline PivotBreakageTable pivot_breakage_table(const DaughterLaw& daughter, const SizeGrid& grid) {
  PivotBreakageTable table;
  table.share.assign(grid.n, 0.0);
  const double r = grid.ratio();
  for (std::size_t d = 0; d < grid.n; ++d) {
    const double zc = std::pow(r, -static_cast<double>(d));
    const double zl = zc / r;
    const double zu = std::min(1.0, zc * r);
    auto rising = [&](double z) { return (z - zl) / (zc - zl); };
    double w = detail::integrate_daughter(daughter, rising, zl, zc);
    if (d > 0) {
      auto falling = [&](double z) { return (zu - z) / (zu - zc); };
      w += detail::integrate_daughter(daughter, falling, zc, zu);
    }
    table.share[d] = w;
  }
  return table;
}

/// Mass fraction of a parent's daughters that the hat assignment sends to
/// relative offsets >= d, i.e. below the pivot d steps down. Integrated
/// directly so the bottom closure never divides a cancellation residue by
/// the smallest pivot.
inline std::vector<double> pivot_tail_mass(const DaughterLaw& daughter, const SizeGrid& grid) {
  std::vector<double> tail(grid.n, 1.0);
  const double r = grid.ratio();
  for (std::size_t d = 1; d < grid.n; ++d) {
    const double zd = std::pow(r, -static_cast<double>(d));
    const double zu = zd * r;
    auto below = [](double z) { return z; };
    auto ramp = [&](double z) { return zd * (zu - z) / (zu - zd); };
    tail[d] = detail::integrate_daughter(daughter, below, 0.0, zd) + detail::integrate_daughter(daughter, ramp, zd, zu);
  }
  return tail;
}

struct PbeOptions {
  double max_rate_step = 0.1;
  double mass_drift_per_time = 1e-6;
};

inline SizeField solve_pbe_number(const HomogeneousKernel& kernel, const SizeField& f0, double t,
                                  const PbeOptions& options = {}) {
  if (!(t >= 0.0)) fail(ErrorCode::domain, "integration time must be non-negative");
  for (double v : f0.numbers) {
    if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorCode::domain, "initial number density must be finite and non-negative");
  }
  const double mass0 = f0.total_mass();
  if (!std::isfinite(mass0)) fail(ErrorCode::domain, "initial mass is not finite");
  if (t == 0.0) return f0;

  const SizeGrid& grid = f0.grid;
  const std::size_t n = grid.n;
  const auto table = pivot_breakage_table(kernel.daughter(), grid);
  std::vector<double> x(n), rate(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = grid.pivot(i);
    rate[i] = kernel.selection_rate(x[i]);
    if (!std::isfinite(rate[i])) fail(ErrorCode::range, "selection rate overflows on the size grid");
  }
  // Daughter count matrix per parent k: share to pivots i >= 1 follows the
  // homogeneous table; pivot 0 takes the mass that lands at or below it.
  const auto tail = pivot_tail_mass(kernel.daughter(), grid);
  std::vector<double> bottom(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) bottom[k] = x[k] * tail[k] / x[0];
  auto rhs = [&](const std::vector<double>& numbers, std::vector<double>& out) {
    std::vector<double> flux(n);
    for (std::size_t k = 0; k < n; ++k) flux[k] = rate[k] * numbers[k];
    for (std::size_t i = 1; i < n; ++i) {
      double gain = 0.0;
      for (std::size_t k = i; k < n; ++k) gain += table.share[k - i] * flux[k];
      out[i] = gain - flux[i];
    }
    double gain0 = 0.0;
    for (std::size_t k = 0; k < n; ++k) gain0 += bottom[k] * flux[k];
    out[0] = gain0 - flux[0];
  };

  double max_rate = 0.0;
  for (double r : rate) max_rate = std::max(max_rate, r);
  const std::size_t steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t * max_rate / options.max_rate_step)));
  const double dt = t / static_cast<double>(steps);

  SizeField f = f0;
  std::vector<double> k1(n), k2(n), k3(n), k4(n), stage(n);
  for (std::size_t s = 0; s < steps; ++s) {
    rhs(f.numbers, k1);
    for (std::size_t i = 0; i < n; ++i) stage[i] = f.numbers[i] + 0.5 * dt * k1[i];
    rhs(stage, k2);
    for (std::size_t i = 0; i < n; ++i) stage[i] = f.numbers[i] + 0.5 * dt * k2[i];
    rhs(stage, k3);
    for (std::size_t i = 0; i < n; ++i) stage[i] = f.numbers[i] + dt * k3[i];
    rhs(stage, k4);
    for (std::size_t i = 0; i < n; ++i) f.numbers[i] += dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    detail::enforce_nonnegative(f.numbers, "sectional PBE solver");
  }
  const double drift = std::abs(f.total_mass() - mass0) / std::max(mass0, 1e-300);
  if (mass0 > 0.0 && drift > options.mass_drift_per_time * std::max(t, 1.0)) {
    std::ostringstream msg;
    msg << "sectional scheme lost mass: relative drift " << drift;
    fail(ErrorCode::scheme_failure, msg.str());
  }
  return f;
}

/// Point-mass number density: `count` particles of size x, which must be a pivot.
inline SizeField monodisperse_field(const SizeGrid& grid, double x, double count = 1.0) {
  const long c = grid.cell_of(x);
  if (c < 0 || c >= static_cast<long>(grid.n)) fail(ErrorCode::domain, "monodisperse size outside the size grid");
  SizeField f(grid);
  f.numbers[static_cast<std::size_t>(c)] = count;
  return f;
}

namespace detail {

/// Conservative remap of cell masses between two uniform xi-grids.
inline std::vector<double> remap_cells(const std::vector<double>& src_centres, double src_width,
                                       const std::vector<double>& src_mass, const UniformGrid& dst) {
  std::vector<double> out(dst.n, 0.0);
  const double h = dst.spacing();
  for (std::size_t s = 0; s < src_centres.size(); ++s) {
    if (src_mass[s] == 0.0) continue;
    const double lo = src_centres[s] - 0.5 * src_width;
    const double hi = src_centres[s] + 0.5 * src_width;
    const long first = std::max(0L, dst.cell_of(lo));
    const long last = std::min(static_cast<long>(dst.n) - 1, dst.cell_of(hi));
    for (long c = first; c <= last; ++c) {
      const double clo = dst.node(static_cast<std::size_t>(c)) - 0.5 * h;
      const double chi = clo + h;
      const double overlap = std::min(hi, chi) - std::max(lo, clo);
      if (overlap > 0.0) out[static_cast<std::size_t>(c)] += src_mass[s] * overlap / src_width;
    }
  }
  return out;
}

}  // namespace detail

/// p(xi) = x^2 f(x) / M at x = x0 e^xi, resampled onto `target` by
/// conservative cell remapping.
inline GridField mass_weighted_transform(const SizeField& f, double x0, const UniformGrid& target) {
  if (!(x0 > 0.0)) fail(ErrorCode::domain, "reference size must be positive");
  const double mass = f.total_mass();
  if (!(mass > 0.0)) fail(ErrorCode::empty_population, "size field carries no mass");
  const std::size_t n = f.grid.n;
  std::vector<double> centres(n), cell_mass(n);
  for (std::size_t i = 0; i < n; ++i) {
    centres[i] = std::log(f.grid.pivot(i) / x0);
    cell_mass[i] = f.grid.pivot(i) * f.numbers[i] / mass;
  }
  const auto remapped = detail::remap_cells(centres, f.grid.log_ratio(), cell_mass, target);
  GridField p(target);
  const double h = target.spacing();
  for (std::size_t i = 0; i < target.n; ++i) p.values[i] = remapped[i] / h;
  return p;
}

/// Inverse map: number density with total mass `mass` whose mass-weighted
/// log-size density is p.
inline SizeField size_field_from_log_density(const GridField& p, double x0, const SizeGrid& grid, double mass = 1.0) {
  if (!(x0 > 0.0)) fail(ErrorCode::domain, "reference size must be positive");
  const std::size_t n = p.grid.n;
  std::vector<double> centres(n), cell_mass(n);
  const double h = p.grid.spacing();
  for (std::size_t i = 0; i < n; ++i) {
    centres[i] = p.grid.node(i);
    cell_mass[i] = p.values[i] * h;
  }
  // Express the size grid as a uniform xi-grid and remap onto it.
  const UniformGrid size_xi(std::log(grid.pivot(0) / x0), std::log(grid.pivot(grid.n - 1) / x0), grid.n);
  const auto remapped = detail::remap_cells(centres, h, cell_mass, size_xi);
  SizeField f(grid);
  for (std::size_t i = 0; i < grid.n; ++i) f.numbers[i] = mass * remapped[i] / grid.pivot(i);
  return f;
}

}  // namespace fragkit
