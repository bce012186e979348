#pragma once

#include "fragkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace fragkit {

namespace detail {

inline constexpr double airy_c1 = 0.355028053887817239;  // Ai(0)
inline constexpr double airy_c2 = 0.258819403792806798;  // -Ai'(0)
inline constexpr double airy_series_limit = 6.0;

inline double airy_series(double x) {
  const double x3 = x * x * x;
  double f = 1.0, g = x;
  double a = 1.0, b = x;
  for (int k = 1; k < 200; ++k) {
    a *= x3 / ((3.0 * k - 1.0) * (3.0 * k));
    b *= x3 / ((3.0 * k) * (3.0 * k + 1.0));
    f += a;
    g += b;
    if (std::abs(a) < 1e-18 * std::abs(f) && std::abs(b) < 1e-18 * std::max(std::abs(g), 1e-300)) break;
  }
  return airy_c1 * f - airy_c2 * g;
}

/// Terms u_k of the large-argument expansions; summation stops at the
/// smallest term.
template <typename Term>
void airy_asymptotic_terms(double zeta, Term&& term) {
  double u = 1.0;
  double last = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 60; ++k) {
    if (k > 0) {
      u *= (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0) / ((2.0 * k - 1.0) * 216.0 * k);
    }
    const double size = u / std::pow(zeta, k);
    if (size > last) break;
    term(k, size);
    last = size;
    if (size < 1e-17) break;
  }
}

inline double airy_positive(double x) {
  const double zeta = 2.0 / 3.0 * x * std::sqrt(x);
  double sum = 0.0;
  airy_asymptotic_terms(zeta, [&](int k, double term) { sum += (k % 2 == 0 ? term : -term); });
  return std::exp(-zeta) / (2.0 * std::sqrt(std::numbers::pi) * std::pow(x, 0.25)) * sum;
}

inline double airy_negative(double x) {
  const double y = -x;
  const double zeta = 2.0 / 3.0 * y * std::sqrt(y);
  double p = 0.0, q = 0.0;
  airy_asymptotic_terms(zeta, [&](int k, double term) {
    // P collects even k with alternating sign, Q the odd k.
    if (k % 2 == 0) {
      p += ((k / 2) % 2 == 0 ? term : -term);
    } else {
      q += (((k - 1) / 2) % 2 == 0 ? term : -term);
    }
  });
  const double phase = zeta + std::numbers::pi / 4.0;
  return (std::sin(phase) * p - std::cos(phase) * q) / (std::sqrt(std::numbers::pi) * std::pow(y, 0.25));
}

}  // namespace detail

/// Airy function Ai(x): power series for |x| <= 6, asymptotic expansions outside.
inline double airy_ai(double x) {
  if (std::isnan(x)) return x;
  if (std::abs(x) <= detail::airy_series_limit) return detail::airy_series(x);
  if (x > 0.0) return x > 120.0 ? 0.0 : detail::airy_positive(x);
  return detail::airy_negative(x);
}

/// n-th zero of Ai (n >= 1), all negative: a scan with step 0.01 followed by bisection.
inline double airy_ai_zero(int n) {
  if (n < 1) fail(ErrorCode::domain, "Airy zero index starts at 1");
  constexpr double step = 0.01;
  double left = 0.0;
  double f_left = airy_ai(left);
  int found = 0;
  for (long i = 1;; ++i) {
    const double x = -step * static_cast<double>(i);
    const double fx = airy_ai(x);
    if ((fx <= 0.0) != (f_left <= 0.0)) {
      if (++found == n) {
        double a = x, b = left;
        double fa = fx;
        for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
          const double mid = 0.5 * (a + b);
          const double fm = airy_ai(mid);
          if ((fm <= 0.0) == (fa <= 0.0)) {
            a = mid;
            fa = fm;
          } else {
            b = mid;
          }
        }
        return 0.5 * (a + b);
      }
    }
    left = x;
    f_left = fx;
  }
}

}  // namespace fragkit
