#pragma once

#include "fragkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace fragkit {

/// Uniform log-size grid; node i sits at xi_min + i * spacing and owns the
/// cell of width `spacing` centred on it.
struct UniformGrid {
  double xi_min = 0.0;
  double xi_max = 1.0;
  std::size_t n = 2;

  UniformGrid() = default;
  UniformGrid(double lo, double hi, std::size_t count) : xi_min(lo), xi_max(hi), n(count) {
    if (count < 2 || !(hi > lo)) fail(ErrorCode::domain, "uniform grid needs n >= 2 and xi_max > xi_min");
  }

  double spacing() const { return (xi_max - xi_min) / static_cast<double>(n - 1); }
  double node(std::size_t i) const { return xi_min + spacing() * static_cast<double>(i); }

  std::vector<double> nodes() const {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = node(i);
    return out;
  }

  /// Index of the cell containing xi, or -1 / n when outside.
  long cell_of(double xi) const {
    const double s = (xi - xi_min) / spacing() + 0.5;
    if (s < 0.0) return -1;
    const double f = std::floor(s);
    if (f >= static_cast<double>(n)) return static_cast<long>(n);
    return static_cast<long>(f);
  }

  bool same_as(const UniformGrid& other) const {
    const double tol = 1e-12 * std::max(1.0, std::abs(xi_max - xi_min));
    return n == other.n && std::abs(xi_min - other.xi_min) <= tol && std::abs(xi_max - other.xi_max) <= tol;
  }
};

enum class BoundaryCondition { absorb_left, reflect_left };

inline std::string_view to_string(BoundaryCondition bc) {
  return bc == BoundaryCondition::absorb_left ? "absorb-left" : "reflect-left";
}

inline BoundaryCondition boundary_from_string(std::string_view s) {
  if (s == "absorb-left") return BoundaryCondition::absorb_left;
  if (s == "reflect-left") return BoundaryCondition::reflect_left;
  fail(ErrorCode::config, "unknown boundary condition '" + std::string(s) + "'");
}

/// Density per unit log-size on a uniform grid, plus the probability that
/// has left the domain.
struct GridField {
  UniformGrid grid;
  std::vector<double> values;
  BoundaryCondition bc = BoundaryCondition::absorb_left;
  double leaked_mass = 0.0;

  GridField() = default;
  explicit GridField(UniformGrid g, BoundaryCondition boundary = BoundaryCondition::absorb_left)
      : grid(g), values(g.n, 0.0), bc(boundary) {}
  GridField(UniformGrid g, std::vector<double> v, BoundaryCondition boundary = BoundaryCondition::absorb_left)
      : grid(g), values(std::move(v)), bc(boundary) {
    if (values.size() != grid.n) fail(ErrorCode::shape, "value count does not match grid size");
  }

  double mass() const {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum * grid.spacing();
  }

  double mean() const {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      num += grid.node(i) * values[i];
      den += values[i];
    }
    return num / den;
  }

  double variance() const {
    const double mu = mean();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double d = grid.node(i) - mu;
      num += d * d * values[i];
      den += values[i];
    }
    return num / den;
  }

  /// Smallest xi with at least `fraction` of the in-grid mass to its left,
  /// linearly interpolated inside the containing cell.
  double quantile(double fraction) const {
    const double total = mass();
    const double h = grid.spacing();
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double cell = values[i] * h;
      if (acc + cell >= fraction * total && cell > 0.0) {
        const double w = (fraction * total - acc) / cell;
        return grid.node(i) - 0.5 * h + w * h;
      }
      acc += cell;
    }
    return grid.xi_max;
  }

  double median() const { return quantile(0.5); }
};

/// Gaussian sampled at the nodes, normalized so the cell sum is one.
inline GridField gaussian_field(const UniformGrid& grid, double mean, double sigma,
                                BoundaryCondition bc = BoundaryCondition::absorb_left) {
  if (!(sigma > 0.0)) fail(ErrorCode::domain, "gaussian width must be positive");
  GridField field(grid, bc);
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double z = (grid.node(i) - mean) / sigma;
    field.values[i] = std::exp(-0.5 * z * z);
  }
  const double m = field.mass();
  for (auto& v : field.values) v /= m;
  return field;
}

/// Unit mass in the cell containing xi.
inline GridField delta_field(const UniformGrid& grid, double xi,
                             BoundaryCondition bc = BoundaryCondition::absorb_left) {
  const long c = grid.cell_of(xi);
  if (c < 0 || c >= static_cast<long>(grid.n)) fail(ErrorCode::domain, "delta position outside the grid");
  GridField field(grid, bc);
  field.values[static_cast<std::size_t>(c)] = 1.0 / grid.spacing();
  return field;
}

struct DensityComparison {
  double l1 = 0.0;
  double sup = 0.0;
  double mean_gap = 0.0;
  double var_gap = 0.0;
};

inline DensityComparison compare_densities(const GridField& a, const GridField& b) {
  if (!a.grid.same_as(b.grid) || a.values.size() != b.values.size()) {
    fail(ErrorCode::shape, "densities live on different grids");
  }
  DensityComparison out;
  const double h = a.grid.spacing();
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = std::abs(a.values[i] - b.values[i]);
    out.l1 += d;
    out.sup = std::max(out.sup, d);
  }
  out.l1 *= h;
  const bool a_empty = a.mass() <= 0.0;
  const bool b_empty = b.mass() <= 0.0;
  if (!a_empty && !b_empty) {
    out.mean_gap = a.mean() - b.mean();
    out.var_gap = a.variance() - b.variance();
  }
  return out;
}

/// Geometric size grid with ratio r = 2^{1/q}; pivot i is x_max r^{i-(n-1)},
/// so the largest pivot is x_max exactly.
struct SizeGrid {
  double x_max = 1.0;
  double q = 8.0;
  std::size_t n = 2;

  SizeGrid() = default;
  SizeGrid(double top, double per_halving, std::size_t count) : x_max(top), q(per_halving), n(count) {
    if (!(top > 0.0) || !(per_halving > 0.0) || count < 2) {
      fail(ErrorCode::domain, "size grid needs x_max > 0, q > 0, n >= 2");
    }
  }

  double log_ratio() const { return std::numbers::ln2 / q; }
  double ratio() const { return std::exp(log_ratio()); }
  double pivot(std::size_t i) const {
    return x_max * std::exp(log_ratio() * (static_cast<double>(i) - static_cast<double>(n - 1)));
  }
  double lower_edge(std::size_t i) const { return pivot(i) * std::exp(-0.5 * log_ratio()); }
  double upper_edge(std::size_t i) const { return pivot(i) * std::exp(0.5 * log_ratio()); }

  /// Cell index containing x, or -1 / n when outside.
  long cell_of(double x) const {
    const double s = std::log(x / x_max) / log_ratio() + static_cast<double>(n - 1) + 0.5;
    if (s < 0.0) return -1;
    const double f = std::floor(s);
    if (f >= static_cast<double>(n)) return static_cast<long>(n);
    return static_cast<long>(f);
  }
};

/// Number density on a geometric grid. numbers[i] is the particle count
/// attributed to pivot i; the density there is numbers[i] / (x_i ln r).
struct SizeField {
  SizeGrid grid;
  std::vector<double> numbers;

  SizeField() = default;
  explicit SizeField(SizeGrid g) : grid(g), numbers(g.n, 0.0) {}
  SizeField(SizeGrid g, std::vector<double> counts) : grid(g), numbers(std::move(counts)) {
    if (numbers.size() != grid.n) fail(ErrorCode::shape, "count vector does not match size grid");
  }

  double density(std::size_t i) const { return numbers[i] / (grid.pivot(i) * grid.log_ratio()); }

  std::vector<double> densities() const {
    std::vector<double> out(numbers.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = density(i);
    return out;
  }

  double total_number() const {
    double s = 0.0;
    for (double v : numbers) s += v;
    return s;
  }

  double total_mass() const {
    double s = 0.0;
    for (std::size_t i = 0; i < numbers.size(); ++i) s += grid.pivot(i) * numbers[i];
    return s;
  }
};

/// Merges `factor` (odd) adjacent cells into one; cell boundaries of the
/// result coincide with boundaries of the input.
inline SizeField coarsen(const SizeField& fine, std::size_t factor) {
  if (factor % 2 == 0) fail(ErrorCode::domain, "coarsening factor must be odd");
  const std::size_t n_coarse = fine.grid.n / factor;
  if (n_coarse < 2) fail(ErrorCode::domain, "coarsening leaves fewer than two cells");
  SizeField out(SizeGrid(fine.grid.x_max * std::exp(-fine.grid.log_ratio() * static_cast<double>(factor / 2)),
                         fine.grid.q / static_cast<double>(factor), n_coarse));
  for (std::size_t c = 0; c < n_coarse; ++c) {
    double s = 0.0;
    for (std::size_t j = 0; j < factor; ++j) s += fine.numbers[fine.grid.n - 1 - (n_coarse - 1 - c) * factor - j];
    out.numbers[c] = s;
  }
  return out;
}

}  // namespace fragkit
