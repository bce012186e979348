#pragma once

// Second-order Kramers-Moyal truncation of the log-size jump equation,
//   dp/dt = -d/dxi (v p) + d^2/dxi^2 (D p),
// integrated in conservative flux form.

#include "fragkit/errors.hpp"
#include "fragkit/grid.hpp"
#include "fragkit/kernel.hpp"
#include "fragkit/log_master.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

namespace fragkit {

struct FPCoefficients {
  UniformGrid grid;
  std::vector<double> drift;      // v(xi)
  std::vector<double> diffusion;  // D(xi)
};

struct JumpMoments {
  double m1 = 0.0;
  double m2 = 0.0;
};

/// v = -m1 lambda, D = (m2 / 2) lambda on the grid nodes.
inline FPCoefficients km_reduce(const HomogeneousKernel& kernel, const JumpMoments& moments, const UniformGrid& grid) {
  FPCoefficients c{grid, std::vector<double>(grid.n), std::vector<double>(grid.n)};
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double lambda = breakage_rate(kernel, grid.node(i));
    c.drift[i] = -moments.m1 * lambda;
    c.diffusion[i] = 0.5 * moments.m2 * lambda;
  }
  return c;
}

inline FPCoefficients km_reduce(const HomogeneousKernel& kernel, const LogJumpLaw& law, const UniformGrid& grid) {
  return km_reduce(kernel, JumpMoments{law.moment(1), law.moment(2)}, grid);
}

inline FPCoefficients km_reduce(const HomogeneousKernel& kernel, const UniformGrid& grid) {
  return km_reduce(kernel, log_jump_density(kernel), grid);
}

inline FPCoefficients constant_coefficients(const UniformGrid& grid, double v, double d) {
  return {grid, std::vector<double>(grid.n, v), std::vector<double>(grid.n, d)};
}

struct FokkerPlanckOptions {
  std::optional<double> dt;   // requested step; reduced to the stability bound if too large
  bool strict_step = false;   // raise step-size instead of reducing
};

namespace detail {

/// Face fluxes F_{i+1/2} for i = -1 .. n-1 (n + 1 entries), zero density
/// outside the grid. Returns d p / dt in `out` and the outflow rate (mass per time).
inline double fp_rhs(const FPCoefficients& c, const std::vector<double>& p, std::vector<double>& out,
                     BoundaryCondition bc) {
  const std::size_t n = p.size();
  const double h = c.grid.spacing();
  std::vector<double> face(n + 1);
  auto vp = [&](long i) { return (i < 0 || i >= static_cast<long>(n)) ? 0.0 : c.drift[i] * p[i]; };
  auto dp = [&](long i) { return (i < 0 || i >= static_cast<long>(n)) ? 0.0 : c.diffusion[i] * p[i]; };
  for (long f = 0; f <= static_cast<long>(n); ++f) {
    const long left = f - 1;
    const long right = f;
    face[f] = 0.5 * (vp(left) + vp(right)) - (dp(right) - dp(left)) / h;
  }
  if (bc == BoundaryCondition::reflect_left) face[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) out[i] = -(face[i + 1] - face[i]) / h;
  return face[n] - face[0];
}

/// Gershgorin bound on the spectral radius of the discrete operator.
inline double fp_spectral_bound(const FPCoefficients& c) {
  const double h = c.grid.spacing();
  double radius = 0.0;
  const std::size_t n = c.grid.n;
  // Column j of the operator: contributions of p_j to rows j-1, j, j+1.
  for (std::size_t j = 0; j < n; ++j) {
    const double v = c.drift[j];
    const double d = c.diffusion[j];
    const double up = std::abs(0.5 * v / h + d / (h * h));
    const double down = std::abs(-0.5 * v / h + d / (h * h));
    const double self = 2.0 * std::abs(d) / (h * h);
    radius = std::max(radius, up + down + self);
  }
  return radius;
}

}  // namespace detail

inline GridField integrate_fokker_planck(const FPCoefficients& coeffs, const GridField& p0, double t,
                                         const FokkerPlanckOptions& options = {}) {
  if (!(t >= 0.0)) fail(ErrorCode::domain, "integration time must be non-negative");
  if (!coeffs.grid.same_as(p0.grid) || coeffs.drift.size() != p0.grid.n || coeffs.diffusion.size() != p0.grid.n) {
    fail(ErrorCode::shape, "coefficients and density live on different grids");
  }
  for (std::size_t i = 0; i < coeffs.grid.n; ++i) {
    if (!(coeffs.diffusion[i] >= 0.0) || !std::isfinite(coeffs.drift[i])) {
      fail(ErrorCode::domain, "diffusion must be non-negative and drift finite");
    }
  }
  if (t == 0.0) return p0;

  const double radius = detail::fp_spectral_bound(coeffs);
  if (radius == 0.0) return p0;
  const double bound = 2.0 / radius;
  double dt = options.dt.value_or(bound);
  if (!(dt > 0.0)) fail(ErrorCode::step_size, "time step must be positive");
  if (dt > bound) {
    std::ostringstream msg;
    msg << "requested step " << dt << " exceeds stability bound " << bound;
    if (options.strict_step) fail(ErrorCode::step_size, msg.str());
    warn(msg.str() + "; reducing");
    dt = bound;
  }
  const std::size_t steps = static_cast<std::size_t>(std::ceil(t / dt));
  dt = t / static_cast<double>(steps);

  GridField p = p0;
  const std::size_t n = p.values.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), stage(n);
  for (std::size_t s = 0; s < steps; ++s) {
    const double l1 = detail::fp_rhs(coeffs, p.values, k1, p.bc);
    for (std::size_t i = 0; i < n; ++i) stage[i] = p.values[i] + 0.5 * dt * k1[i];
    const double l2 = detail::fp_rhs(coeffs, stage, k2, p.bc);
    for (std::size_t i = 0; i < n; ++i) stage[i] = p.values[i] + 0.5 * dt * k2[i];
    const double l3 = detail::fp_rhs(coeffs, stage, k3, p.bc);
    for (std::size_t i = 0; i < n; ++i) stage[i] = p.values[i] + dt * k3[i];
    const double l4 = detail::fp_rhs(coeffs, stage, k4, p.bc);
    for (std::size_t i = 0; i < n; ++i) p.values[i] += dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    p.leaked_mass += dt / 6.0 * (l1 + 2 * l2 + 2 * l3 + l4);
    detail::enforce_nonnegative(p.values, "Fokker-Planck integrator");
  }
  return p;
}

}  // namespace fragkit
