#pragma once

// Exact log-size jump equation
//   dp/dt = -lambda(xi) p + int_0^inf lambda(xi+u) K(u) p(xi+u) du
// on a uniform grid.

#include "fragkit/errors.hpp"
#include "fragkit/grid.hpp"
#include "fragkit/kernel.hpp"
#include "fragkit/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace fragkit {

/// Probability q[k] that a jump moves mass k nodes to the left.
///
/// A jump of length u landing between nodes is shared between the two
/// neighbours with linear (hat-function) weights, so q[k] = int K(u) hat(u - k h) du.
/// The weights sum to one and reproduce the mean jump exactly.
inline std::vector<double> jump_weights(const LogJumpLaw& law, double spacing) {
  if (!(spacing > 0.0)) fail(ErrorCode::domain, "grid spacing must be positive");
  const std::size_t k_max = static_cast<std::size_t>(std::ceil(law.u_max() / spacing)) + 1;
  std::vector<double> q(k_max + 1, 0.0);
  const auto& breaks = law.breakpoints();
  for (std::size_t k = 0; k <= k_max; ++k) {
    const double centre = spacing * static_cast<double>(k);
    auto rising = [&](double u) { return law.density(u) * (1.0 - (centre - u) / spacing); };
    auto falling = [&](double u) { return law.density(u) * (1.0 - (u - centre) / spacing); };
    double w = detail::integrate_with_breaks(falling, centre, centre + spacing, breaks, 1e-13);
    if (k > 0) w += detail::integrate_with_breaks(rising, centre - spacing, centre, breaks, 1e-13);
    q[k] = w;
  }
  double total = 0.0;
  for (double w : q) total += w;
  for (auto& w : q) w /= total;
  return q;
}

inline std::vector<double> rate_profile(const HomogeneousKernel& kernel, const UniformGrid& grid) {
  std::vector<double> rates(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) rates[i] = breakage_rate(kernel, grid.node(i));
  return rates;
}

namespace detail {

/// Right-hand side for cell densities; returns the rate at which mass
/// (in units of integral p dxi) leaves through the left edge.
inline double log_master_rhs(const std::vector<double>& rates, const std::vector<double>& q,
                             const std::vector<double>& p, std::vector<double>& out, double spacing,
                             BoundaryCondition bc) {
  const std::size_t n = p.size();
  const std::size_t kq = q.size();
  std::vector<double> flux(n);
  for (std::size_t j = 0; j < n; ++j) flux[j] = rates[j] * p[j];
  double leak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double gain = 0.0;
    const std::size_t top = std::min(n, i + kq);
    for (std::size_t j = i; j < top; ++j) gain += q[j - i] * flux[j];
    out[i] = gain - flux[i];
  }
  // Jumps that overshoot the left edge: source j, offset k > j.
  std::vector<double> tail(kq + 1, 0.0);
  for (std::size_t k = kq; k-- > 0;) tail[k] = tail[k + 1] + q[k];
  for (std::size_t j = 0; j < n && j + 1 < kq; ++j) leak += flux[j] * tail[j + 1];
  if (bc == BoundaryCondition::reflect_left) {
    // Overshooting jumps stop at the first node instead of leaving.
    out[0] += leak;
    return 0.0;
  }
  return leak * spacing;
}

inline void enforce_nonnegative(std::vector<double>& values, const char* what) {
  for (auto& v : values) {
    if (v < 0.0) {
      if (v < -1e-12) {
        std::ostringstream msg;
        msg << what << ": negative density " << v << " beyond round-off";
        fail(ErrorCode::scheme_failure, msg.str());
      }
      v = 0.0;
    }
  }
}

}  // namespace detail

struct LogMasterOptions {
  double max_rate_step = 0.1;  // dt <= max_rate_step / max lambda
  double normalization_tolerance = 1e-8;
  double edge_tolerance = 1e-8;
};

inline GridField integrate_log_master(const HomogeneousKernel& kernel, const LogJumpLaw& law, const GridField& p0,
                                      double t, const LogMasterOptions& options = {}) {
  if (!(t >= 0.0)) fail(ErrorCode::domain, "integration time must be non-negative");
  const double initial = p0.mass() + p0.leaked_mass;
  if (std::abs(initial - 1.0) > options.normalization_tolerance) {
    std::ostringstream msg;
    msg << "initial density is not normalized (mass " << initial << ")";
    fail(ErrorCode::domain, msg.str());
  }
  if (p0.values.back() > options.edge_tolerance) {
    fail(ErrorCode::domain, "density reaches the right grid edge; extend xi_max");
  }
  if (t == 0.0) return p0;

  const double h = p0.grid.spacing();
  const auto rates = rate_profile(kernel, p0.grid);
  const auto q = jump_weights(law, h);
  double max_rate = 0.0;
  for (double r : rates) max_rate = std::max(max_rate, r);
  const std::size_t steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t * max_rate / options.max_rate_step)));
  const double dt = t / static_cast<double>(steps);

  GridField p = p0;
  const std::size_t n = p.values.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), stage(n);
  for (std::size_t s = 0; s < steps; ++s) {
    const double l1 = detail::log_master_rhs(rates, q, p.values, k1, h, p.bc);
    for (std::size_t i = 0; i < n; ++i) stage[i] = p.values[i] + 0.5 * dt * k1[i];
    const double l2 = detail::log_master_rhs(rates, q, stage, k2, h, p.bc);
    for (std::size_t i = 0; i < n; ++i) stage[i] = p.values[i] + 0.5 * dt * k2[i];
    const double l3 = detail::log_master_rhs(rates, q, stage, k3, h, p.bc);
    for (std::size_t i = 0; i < n; ++i) stage[i] = p.values[i] + dt * k3[i];
    const double l4 = detail::log_master_rhs(rates, q, stage, k4, h, p.bc);
    for (std::size_t i = 0; i < n; ++i) p.values[i] += dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    p.leaked_mass += dt / 6.0 * (l1 + 2 * l2 + 2 * l3 + l4);
    detail::enforce_nonnegative(p.values, "log-master integrator");
  }
  return p;
}

}  // namespace fragkit
