#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <limits>

namespace fragkit::quadrature {

/// Adaptive 15-point Gauss-Kronrod. Either limit may be infinite.
///
/// Finite intervals are mapped onto [-1, 1] first: the Boost recursion
/// compares an unscaled error estimate with a scaled tolerance, which on
/// short intervals never terminates before the depth limit.
template <typename F>
double integrate(F&& f, double a, double b, double tolerance = 1e-12, unsigned max_depth = 15) {
  if (a == b) return 0.0;
  double error = 0.0;
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  if (std::isfinite(a) && std::isfinite(b)) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    auto g = [&](double t) { return f(mid + half * t); };
    return half * GK::integrate(g, -1.0, 1.0, max_depth, tolerance, &error);
  }
  return GK::integrate(std::forward<F>(f), a, b, max_depth, tolerance, &error);
}

/// Tanh-sinh on a finite interval. Never samples the endpoints, so integrable
/// singularities such as z^{a-1} with a < 1 are handled.
template <typename F>
double integrate_singular(F&& f, double a, double b, double tolerance = 1e-12) {
  if (a == b) return 0.0;
  thread_local boost::math::quadrature::tanh_sinh<double> ts(12);
  double error = 0.0;
  auto g = [&](double x) { return f(x); };
  return ts.integrate(g, a, b, tolerance, &error);
}

template <typename F>
double integrate_to_infinity(F&& f, double a, double tolerance = 1e-12) {
  return integrate(std::forward<F>(f), a, std::numeric_limits<double>::infinity(), tolerance);
}

}  // namespace fragkit::quadrature
