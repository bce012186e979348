#pragma once

#include "fragkit/errors.hpp"
#include "fragkit/quadrature.hpp"
#include "fragkit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace fragkit {

/// Inverse-CDF sampler for a density on a finite interval.
///
/// The CDF is tabulated on equally spaced abscissae and inverted by monotone
/// (Fritsch-Carlson) cubic Hermite interpolation of x(F). A guide table makes
/// the interval lookup O(1) on average.
class InverseCdfTable {
 public:
  static constexpr std::size_t default_nodes = 4096;

  InverseCdfTable() = default;

  template <typename Density>
  InverseCdfTable(const Density& density, double lo, double hi,
                  std::size_t nodes = default_nodes) {
    if (!(hi > lo) || nodes < 3) fail(ErrorCode::domain, "inverse-CDF table needs hi > lo and >= 3 nodes");
    std::vector<double> x(nodes), cdf(nodes, 0.0);
    const double step = (hi - lo) / static_cast<double>(nodes - 1);
    for (std::size_t i = 0; i < nodes; ++i) x[i] = lo + step * static_cast<double>(i);
    x.back() = hi;
    for (std::size_t i = 1; i < nodes; ++i) {
      // the first cell may hold an integrable singularity at lo
      const double piece = i == 1 ? quadrature::integrate_singular(density, x[0], x[1], 1e-13)
                                  : quadrature::integrate(density, x[i - 1], x[i], 1e-13, 12);
      if (!std::isfinite(piece) || piece < 0.0) {
        fail(ErrorCode::invalid_kernel, "density is negative or non-finite while building sampler table");
      }
      cdf[i] = cdf[i - 1] + piece;
    }
    const double total = cdf.back();
    if (!(total > 0.0)) fail(ErrorCode::invalid_kernel, "density has zero mass on the sampler domain");
    for (auto& c : cdf) c /= total;
    cdf.back() = 1.0;

    // Keep strictly increasing CDF nodes; a leading flat run keeps its last node.
    for (std::size_t i = 0; i < nodes; ++i) {
      if (!cdf_.empty() && cdf[i] <= cdf_.back()) {
        if (cdf_.size() == 1) x_.back() = x[i];
        continue;
      }
      cdf_.push_back(cdf[i]);
      x_.push_back(x[i]);
    }
    if (cdf_.size() < 2) fail(ErrorCode::invalid_kernel, "degenerate sampler table");
    build_slopes();
    build_guide();
  }

  /// x such that CDF(x) = probability, for probability in [0, 1].
  double quantile(double probability) const {
    const double p = std::clamp(probability, 0.0, 1.0);
    const std::size_t last = cdf_.size() - 1;
    std::size_t g = static_cast<std::size_t>(p * static_cast<double>(guide_.size()));
    if (g >= guide_.size()) g = guide_.size() - 1;
    std::size_t i = guide_[g];
    while (i + 1 < last && cdf_[i + 1] < p) ++i;
    const double h = cdf_[i + 1] - cdf_[i];
    const double t = (p - cdf_[i]) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    const double value = h00 * x_[i] + h10 * h * slope_[i] + h01 * x_[i + 1] + h11 * h * slope_[i + 1];
    return std::clamp(value, x_[i], x_[i + 1]);
  }

  double sample(RandomStream& rng) const { return quantile(uniform01(rng)); }

  std::size_t size() const { return cdf_.size(); }
  double lower() const { return x_.front(); }
  double upper() const { return x_.back(); }

 private:
  void build_slopes() {
    const std::size_t n = cdf_.size();
    std::vector<double> h(n - 1), secant(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = cdf_[i + 1] - cdf_[i];
      secant[i] = (x_[i + 1] - x_[i]) / h[i];
    }
    slope_.assign(n, 0.0);
    if (n == 2) {
      slope_[0] = slope_[1] = secant[0];
      return;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double a = secant[i - 1];
      const double b = secant[i];
      if (a <= 0.0 || b <= 0.0) continue;
      const double w1 = 2 * h[i] + h[i - 1];
      const double w2 = h[i] + 2 * h[i - 1];
      slope_[i] = (w1 + w2) / (w1 / a + w2 / b);
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
      double d = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
      if (d * d0 <= 0.0) return 0.0;
      if (d0 * d1 <= 0.0 && std::abs(d) > std::abs(3 * d0)) return 3 * d0;
      return d;
    };
    slope_[0] = end_slope(h[0], h[1], secant[0], secant[1]);
    slope_[n - 1] = end_slope(h[n - 2], h[n - 3], secant[n - 2], secant[n - 3]);
  }

  void build_guide() {
    const std::size_t entries = cdf_.size();
    guide_.resize(entries);
    std::size_t i = 0;
    for (std::size_t g = 0; g < entries; ++g) {
      const double p = static_cast<double>(g) / static_cast<double>(entries);
      while (i + 2 < cdf_.size() && cdf_[i + 1] <= p) ++i;
      guide_[g] = static_cast<std::uint32_t>(i);
    }
  }

  std::vector<double> cdf_;
  std::vector<double> x_;
  std::vector<double> slope_;
  std::vector<std::uint32_t> guide_;
};

}  // namespace fragkit
