#pragma once

// Coarse-grained Airy sector: gauge transform of the Fokker-Planck operator,
// the quadratic (Airy) operator, its biorthogonal eigenmodes and mode-sum
// two-point functions.

#include "fragkit/airy.hpp"
#include "fragkit/correlation.hpp"
#include "fragkit/errors.hpp"
#include "fragkit/fokker_planck.hpp"
#include "fragkit/grid.hpp"
#include "fragkit/kernel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <sstream>
#include <vector>

namespace fragkit {

// ---------------------------------------------------------------------------
// Gauge transform

/// p = e^{Phi} psi turns the Fokker-Planck equation into
/// d psi/dt = d/dxi (D d psi/dxi) - U psi.
struct TransformPair {
  UniformGrid grid;
  std::vector<double> phi;
  std::vector<double> potential;  // U
  double xi_star = 0.0;
};

namespace detail {

/// Centred first derivative, one-sided second-order at the ends.
inline std::vector<double> derivative(const std::vector<double>& f, double h) {
  const std::size_t n = f.size();
  std::vector<double> d(n);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2 * h);
  d[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h);
  d[n - 1] = (3 * f[n - 1] - 4 * f[n - 2] + f[n - 3]) / (2 * h);
  return d;
}

}  // namespace detail

/// Phi' = (v - D') / (2D), Phi(xi_star) = 0;
/// U = (v - D')^2 / (4D) + (v' - D'') / 2.
inline TransformPair similarity_transform(const FPCoefficients& c, double xi_star) {
  const std::size_t n = c.grid.n;
  if (n < 3) fail(ErrorCode::domain, "transform needs at least three nodes");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(c.diffusion[i] > 0.0)) fail(ErrorCode::singular_transform, "diffusion must be positive everywhere");
  }
  const double h = c.grid.spacing();
  const auto dd = detail::derivative(c.diffusion, h);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = c.drift[i] - dd[i];
  const auto dw = detail::derivative(w, h);

  TransformPair out{c.grid, std::vector<double>(n, 0.0), std::vector<double>(n), xi_star};
  std::vector<double> slope(n);
  for (std::size_t i = 0; i < n; ++i) {
    slope[i] = w[i] / (2 * c.diffusion[i]);
    out.potential[i] = w[i] * w[i] / (4 * c.diffusion[i]) + 0.5 * dw[i];
  }
  // Trapezoid from node 0, then shift so Phi(xi_star) = 0 (linear interpolation).
  for (std::size_t i = 1; i < n; ++i) out.phi[i] = out.phi[i - 1] + 0.5 * h * (slope[i - 1] + slope[i]);
  const double s = std::clamp((xi_star - c.grid.xi_min) / h, 0.0, static_cast<double>(n - 1));
  const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(s), n - 2);
  const double frac = s - static_cast<double>(j);
  const double ref = (1 - frac) * out.phi[j] + frac * out.phi[j + 1];
  for (auto& p : out.phi) p -= ref;
  return out;
}

inline std::vector<double> to_gauge(const TransformPair& tp, const std::vector<double>& p) {
  std::vector<double> psi(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) psi[i] = std::exp(-tp.phi[i]) * p[i];
  return psi;
}

inline std::vector<double> from_gauge(const TransformPair& tp, const std::vector<double>& psi) {
  std::vector<double> p(psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) p[i] = std::exp(tp.phi[i]) * psi[i];
  return p;
}

/// RK4 for d psi/dt = d/dxi (D d psi/dxi) - U psi with psi = 0 outside the grid.
inline std::vector<double> integrate_gauge_form(const TransformPair& tp, const std::vector<double>& diffusion,
                                                std::vector<double> psi, double t) {
  const std::size_t n = psi.size();
  if (diffusion.size() != n || tp.potential.size() != n) fail(ErrorCode::shape, "gauge-form inputs differ in size");
  if (t == 0.0) return psi;
  const double h = tp.grid.spacing();
  std::vector<double> face(n + 1);
  for (std::size_t f = 0; f <= n; ++f) {
    const double left = f == 0 ? diffusion[0] : diffusion[f - 1];
    const double right = f == n ? diffusion[n - 1] : diffusion[f];
    face[f] = 0.5 * (left + right);
  }
  double radius = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    radius = std::max(radius, 2 * (face[i] + face[i + 1]) / (h * h) + std::abs(tp.potential[i]));
  }
  const std::size_t steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t * radius / 2.0)));
  const double dt = t / static_cast<double>(steps);
  auto rhs = [&](const std::vector<double>& y, std::vector<double>& out) {
    for (std::size_t i = 0; i < n; ++i) {
      const double yl = i == 0 ? 0.0 : y[i - 1];
      const double yr = i + 1 == n ? 0.0 : y[i + 1];
      out[i] = (face[i + 1] * (yr - y[i]) - face[i] * (y[i] - yl)) / (h * h) - tp.potential[i] * y[i];
    }
  };
  std::vector<double> k1(n), k2(n), k3(n), k4(n), stage(n);
  for (std::size_t s = 0; s < steps; ++s) {
    rhs(psi, k1);
    for (std::size_t i = 0; i < n; ++i) stage[i] = psi[i] + 0.5 * dt * k1[i];
    rhs(stage, k2);
    for (std::size_t i = 0; i < n; ++i) stage[i] = psi[i] + 0.5 * dt * k2[i];
    rhs(stage, k3);
    for (std::size_t i = 0; i < n; ++i) stage[i] = psi[i] + dt * k3[i];
    rhs(stage, k4);
    for (std::size_t i = 0; i < n; ++i) psi[i] += dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  return psi;
}

// ---------------------------------------------------------------------------
// Airy operator

struct AiryParameters {
  double D_star = 0.0;
  double F_star = 0.0;
  double Gamma_star = 0.0;
  double xi_star = 0.0;
  double lambda_star = 0.0;
  double ell_A = 0.0;  // 0 when F_star <= 0
};

inline double airy_length(double d_star, double f_star) {
  if (!(d_star > 0.0) || !(f_star > 0.0)) fail(ErrorCode::domain, "Airy length needs positive D and F");
  return std::cbrt(d_star / f_star);
}

/// Linearized-rate gauge: lambda(xi) ~ lambda_star (1 + alpha (xi - xi_star)),
/// D frozen at D_star = m2 lambda_star / 2, F_star = dU/dxi at xi_star
/// = alpha m1^2 lambda_star^2 / (2 D_star).
inline AiryParameters calibrate_airy_params(const HomogeneousKernel& kernel, const LogJumpLaw& law, double xi_star,
                                            double gamma_star = 0.0) {
  const double m1 = law.moment(1);
  const double m2 = law.moment(2);
  AiryParameters p;
  p.xi_star = xi_star;
  p.Gamma_star = gamma_star;
  p.lambda_star = breakage_rate(kernel, xi_star);
  p.D_star = 0.5 * m2 * p.lambda_star;
  const double v_star = -m1 * p.lambda_star;
  const double v_slope = -m1 * p.lambda_star * kernel.alpha();
  p.F_star = v_star * v_slope / (2 * p.D_star);
  if (p.F_star > 0.0) {
    p.ell_A = airy_length(p.D_star, p.F_star);
  } else {
    std::ostringstream msg;
    msg << "calibrated F_star = " << p.F_star << " is not positive; the profile is not Airy-confined";
    warn(msg.str());
  }
  return p;
}

/// Discrete L_A = D d^2/dxi^2 - F (xi - xi_star) - Gamma on the interior
/// nodes of `grid`; the end nodes are the Dirichlet walls.
struct AiryOperator {
  AiryParameters params;
  UniformGrid grid;
  Eigen::MatrixXd matrix;

  double spacing() const { return grid.spacing(); }
  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
  double node(std::size_t i) const { return grid.node(i + 1); }
};

inline AiryOperator build_airy_operator(const AiryParameters& params, const UniformGrid& grid) {
  if (grid.n < 66) fail(ErrorCode::domain, "Airy operator needs at least 64 interior nodes");
  const std::size_t m = grid.n - 2;
  const double h = grid.spacing();
  const double off = params.D_star / (h * h);
  AiryOperator op{params, grid, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m))};
  for (std::size_t i = 0; i < m; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    op.matrix(r, r) = -2 * off - params.F_star * (grid.node(i + 1) - params.xi_star) - params.Gamma_star;
    if (i > 0) op.matrix(r, r - 1) = off;
    if (i + 1 < m) op.matrix(r, r + 1) = off;
  }
  return op;
}

/// Shape N Ai((xi - xi0) / ell_A) with sum psi^2 h = 1.
inline GridField airy_profile(double xi0, double ell_a, const UniformGrid& grid) {
  if (!(ell_a > 0.0)) fail(ErrorCode::domain, "Airy length must be positive");
  GridField out(grid);
  double norm = 0.0;
  for (std::size_t i = 0; i < grid.n; ++i) {
    out.values[i] = airy_ai((grid.node(i) - xi0) / ell_a);
    norm += out.values[i] * out.values[i];
  }
  norm = std::sqrt(norm * grid.spacing());
  for (auto& v : out.values) v /= norm;
  return out;
}

/// lambda_n = -Gamma - (D F^2)^{1/3} |a_n| for the wall at xi_star and a
/// distant right wall.
inline double airy_eigenvalue(const AiryParameters& p, int n) {
  return -p.Gamma_star + std::cbrt(p.D_star * p.F_star * p.F_star) * airy_ai_zero(n);
}

// ---------------------------------------------------------------------------
// Biorthogonal eigenpairs

/// Right modes u_n and left modes v_n, normalized so h sum v_m u_n = delta_mn.
struct SpectralSector {
  AiryParameters params;
  double spacing = 1.0;
  std::vector<double> nodes;
  Eigen::VectorXcd eigenvalues;
  Eigen::MatrixXcd right;  // columns u_n
  Eigen::MatrixXcd left;   // columns v_n
};

namespace detail {

inline bool is_symmetric(const Eigen::MatrixXd& a) {
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= 0.0;
}

inline bool is_tridiagonal(const Eigen::MatrixXd& a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (std::abs(i - j) > 1 && a(i, j) != 0.0) return false;
    }
  }
  return true;
}

/// Eigenvector of a symmetric tridiagonal matrix for a known eigenvalue, by
/// inverse iteration with a slightly perturbed shift.
inline Eigen::VectorXd tridiagonal_eigenvector(const Eigen::VectorXd& diag, const Eigen::VectorXd& sub, double lambda,
                                               std::size_t seed_index) {
  const Eigen::Index n = diag.size();
  const double scale = std::max(1.0, diag.cwiseAbs().maxCoeff() + 2 * sub.cwiseAbs().maxCoeff());
  const double shift = lambda + 1e-13 * scale;
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) += 0.01 * std::sin(0.7 * static_cast<double>(i + 1) * static_cast<double>(seed_index + 1));
  x.normalize();
  std::vector<double> c(static_cast<std::size_t>(n)), d(static_cast<std::size_t>(n));
  for (int iter = 0; iter < 6; ++iter) {
    // Thomas algorithm with a pivot floor.
    Eigen::VectorXd y = x;
    double denom = diag(0) - shift;
    if (std::abs(denom) < 1e-300) denom = 1e-300;
    c[0] = n > 1 ? sub(0) / denom : 0.0;
    d[0] = y(0) / denom;
    for (Eigen::Index i = 1; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      denom = diag(i) - shift - sub(i - 1) * c[k - 1];
      if (std::abs(denom) < 1e-300) denom = 1e-300;
      c[k] = i + 1 < n ? sub(i) / denom : 0.0;
      d[k] = (y(i) - sub(i - 1) * d[k - 1]) / denom;
    }
    y(n - 1) = d[static_cast<std::size_t>(n - 1)];
    for (Eigen::Index i = n - 2; i >= 0; --i) {
      const auto k = static_cast<std::size_t>(i);
      y(i) = d[k] - c[k] * y(i + 1);
    }
    x = y.normalized();
  }
  return x;
}

inline void sort_descending(Eigen::VectorXcd& values, Eigen::MatrixXcd& right, Eigen::MatrixXcd& left) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (values(a).real() != values(b).real()) return values(a).real() > values(b).real();
    return values(a).imag() > values(b).imag();
  });
  Eigen::VectorXcd v(values.size());
  Eigen::MatrixXcd r(right.rows(), right.cols()), l(left.rows(), left.cols());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto dst = static_cast<Eigen::Index>(k);
    v(dst) = values(order[k]);
    r.col(dst) = right.col(order[k]);
    l.col(dst) = left.col(order[k]);
  }
  values = std::move(v);
  right = std::move(r);
  left = std::move(l);
}

inline void normalize_pairs(Eigen::MatrixXcd& right, Eigen::MatrixXcd& left, double h) {
  for (Eigen::Index k = 0; k < right.cols(); ++k) {
    right.col(k) /= std::sqrt(h) * right.col(k).norm();
    // Fix the sign so the largest component is real positive.
    Eigen::Index big = 0;
    right.col(k).cwiseAbs().maxCoeff(&big);
    const std::complex<double> phase = right(big, k) / std::abs(right(big, k));
    right.col(k) /= phase;
    const std::complex<double> overlap = h * (left.col(k).transpose() * right.col(k))(0, 0);
    if (std::abs(overlap) < 1e-300) fail(ErrorCode::degeneracy, "left and right modes are orthogonal");
    left.col(k) /= overlap;
  }
}

}  // namespace detail

/// Leading n_modes eigenpairs (all when n_modes == 0) sorted by descending
/// real part. Symmetric tridiagonal matrices take a fast path.
inline SpectralSector biorthogonal_eigs(const Eigen::MatrixXd& a, double spacing, std::size_t n_modes = 0,
                                        const std::vector<double>& nodes = {}) {
  if (a.rows() != a.cols() || a.rows() == 0) fail(ErrorCode::shape, "operator must be a non-empty square matrix");
  if (!a.allFinite()) fail(ErrorCode::domain, "operator has non-finite entries");
  const Eigen::Index n = a.rows();
  const Eigen::Index keep = n_modes == 0 ? n : std::min<Eigen::Index>(n, static_cast<Eigen::Index>(n_modes));
  SpectralSector s;
  s.spacing = spacing;
  s.nodes = nodes;

  if (detail::is_symmetric(a)) {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors(n, keep);
    if (detail::is_tridiagonal(a) && keep < n) {
      const Eigen::VectorXd diag = a.diagonal();
      const Eigen::VectorXd sub = n > 1 ? Eigen::VectorXd(a.diagonal(-1)) : Eigen::VectorXd::Zero(1);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
      solver.computeFromTridiagonal(diag, n > 1 ? sub : Eigen::VectorXd(), Eigen::EigenvaluesOnly);
      const Eigen::VectorXd all = solver.eigenvalues();  // ascending
      values.resize(keep);
      for (Eigen::Index k = 0; k < keep; ++k) {
        values(k) = all(n - 1 - k);
        vectors.col(k) = detail::tridiagonal_eigenvector(diag, sub, values(k), static_cast<std::size_t>(k));
      }
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
      values.resize(keep);
      for (Eigen::Index k = 0; k < keep; ++k) {
        values(k) = solver.eigenvalues()(n - 1 - k);
        vectors.col(k) = solver.eigenvectors().col(n - 1 - k);
      }
    }
    for (Eigen::Index k = 1; k < keep; ++k) {
      if (std::abs(values(k) - values(k - 1)) < 1e-10 * std::max(1.0, std::abs(values(k)))) {
        std::ostringstream msg;
        msg << "eigenvalue cluster near " << values(k) << " (modes " << k - 1 << ", " << k << ")";
        fail(ErrorCode::degeneracy, msg.str());
      }
    }
    s.eigenvalues = values.cast<std::complex<double>>();
    s.right = vectors.cast<std::complex<double>>();
    s.left = s.right;
    detail::normalize_pairs(s.right, s.left, spacing);
    return s;
  }

  Eigen::EigenSolver<Eigen::MatrixXd> right_solver(a);
  Eigen::EigenSolver<Eigen::MatrixXd> left_solver(a.transpose());
  if (right_solver.info() != Eigen::Success || left_solver.info() != Eigen::Success) {
    fail(ErrorCode::scheme_failure, "dense eigensolver did not converge");
  }
  const Eigen::VectorXcd lr = right_solver.eigenvalues();
  const Eigen::VectorXcd ll = left_solver.eigenvalues();
  Eigen::MatrixXcd ur = right_solver.eigenvectors();
  Eigen::MatrixXcd ul(n, n);
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::abs(lr(i) - lr(j)) < 1e-10 * std::max(1.0, std::abs(lr(i)))) {
        std::ostringstream msg;
        msg << "near-defective eigenvalue cluster {" << lr(i) << ", " << lr(j) << "}";
        fail(ErrorCode::degeneracy, msg.str());
      }
    }
    Eigen::Index best = -1;
    double gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      const double g = std::abs(ll(j) - lr(i));
      if (g < gap) {
        gap = g;
        best = j;
      }
    }
    used[static_cast<std::size_t>(best)] = 1;
    ul.col(i) = left_solver.eigenvectors().col(best);
  }
  Eigen::VectorXcd values = lr;
  detail::sort_descending(values, ur, ul);
  s.eigenvalues = values.head(keep);
  s.right = ur.leftCols(keep);
  s.left = ul.leftCols(keep);
  detail::normalize_pairs(s.right, s.left, spacing);
  return s;
}

inline SpectralSector airy_sector(const AiryOperator& op, std::size_t n_modes) {
  std::vector<double> nodes(op.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] = op.node(i);
  auto s = biorthogonal_eigs(op.matrix, op.spacing(), n_modes, nodes);
  s.params = op.params;
  return s;
}

/// Max-norm of h V^T U - I over the retained modes.
inline double biorthonormality_error(const SpectralSector& s) {
  const Eigen::MatrixXcd g = s.spacing * s.left.transpose() * s.right;
  return (g - Eigen::MatrixXcd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

/// max_n ||A u_n - lambda_n u_n|| / ||u_n||.
inline double residual_norm(const Eigen::MatrixXd& a, const SpectralSector& s) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < s.right.cols(); ++k) {
    const Eigen::VectorXcd r = a.cast<std::complex<double>>() * s.right.col(k) - s.eigenvalues(k) * s.right.col(k);
    worst = std::max(worst, r.norm() / s.right.col(k).norm());
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Two-point functions

using ModeCovariance = Eigen::MatrixXcd;

/// Mode covariance of a grid covariance: C = W C0 W^T with W = h V^T.
inline ModeCovariance project_grid_covariance(const SpectralSector& s, const Eigen::MatrixXd& c0) {
  if (c0.rows() != s.right.rows() || c0.cols() != s.right.rows()) fail(ErrorCode::shape, "grid covariance size mismatch");
  const Eigen::MatrixXcd w = s.spacing * s.left.transpose();
  return w * c0.cast<std::complex<double>>() * w.transpose();
}

namespace detail {

inline bool is_diagonal(const ModeCovariance& c) {
  for (Eigen::Index j = 0; j < c.cols(); ++j) {
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      if (i != j && c(i, j) != std::complex<double>(0.0)) return false;
    }
  }
  return true;
}

}  // namespace detail

enum class ModeSumPath { automatic, general, diagonal };

/// G(xi_a, xi_b; t) = Re sum_mn u_m(xi_a) u_n(xi_b) e^{(lambda_m + lambda_n) t} C_mn
/// at the given node indices (all nodes when empty).
inline CorrelationEstimate mode_sum_correlator(const SpectralSector& s, const ModeCovariance& c, double t,
                                               std::vector<std::size_t> points = {},
                                               ModeSumPath path = ModeSumPath::automatic) {
  const Eigen::Index modes = s.right.cols();
  if (modes < 1) fail(ErrorCode::domain, "no retained modes");
  if (c.rows() != modes || c.cols() != modes) fail(ErrorCode::shape, "mode covariance does not match retained modes");
  if (points.empty()) {
    points.resize(static_cast<std::size_t>(s.right.rows()));
    std::iota(points.begin(), points.end(), std::size_t{0});
  }
  const auto np = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXcd u(np, modes);
  for (Eigen::Index a = 0; a < np; ++a) {
    const auto row = static_cast<Eigen::Index>(points[static_cast<std::size_t>(a)]);
    if (row >= s.right.rows()) fail(ErrorCode::domain, "correlator point outside the sector grid");
    u.row(a) = s.right.row(row);
  }
  const Eigen::VectorXcd growth = (s.eigenvalues * t).array().exp();
  CorrelationEstimate out;
  const bool diagonal = path == ModeSumPath::diagonal || (path == ModeSumPath::automatic && detail::is_diagonal(c));
  if (diagonal) {
    Eigen::VectorXcd weight(modes);
    for (Eigen::Index m = 0; m < modes; ++m) weight(m) = growth(m) * growth(m) * c(m, m);
    out.gc = (u * weight.asDiagonal() * u.transpose()).real();
  } else {
    out.gc = (u * growth.asDiagonal() * c * growth.asDiagonal() * u.transpose()).real();
  }
  out.stderr_gc = Eigen::MatrixXd::Zero(np, np);
  out.mean = Eigen::VectorXd::Zero(np);
  for (auto p : points) out.centres.push_back(p < s.nodes.size() ? s.nodes[p] : static_cast<double>(p));
  return out;
}

/// e^A by scaling and squaring of a truncated Taylor series.
inline Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& a) {
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Eigen::MatrixXd scaled = a / std::ldexp(1.0, squarings);
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  // ||scaled|| <= 1/2: 18 terms leave a remainder below 1e-22.
  for (int k = 1; k <= 18; ++k) {
    term = term * scaled / static_cast<double>(k);
    result += term;
  }
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

inline constexpr std::size_t oracle_size_limit = 512;

/// e^{L t} C0 e^{L^T t} by dense matrix exponential.
inline Eigen::MatrixXd propagate_covariance_oracle(const Eigen::MatrixXd& l, const Eigen::MatrixXd& c0, double t) {
  if (static_cast<std::size_t>(l.rows()) > oracle_size_limit) {
    fail(ErrorCode::oracle_size, "dense exponential oracle limited to 512 nodes");
  }
  if (l.rows() != l.cols() || c0.rows() != l.rows() || c0.cols() != l.rows()) {
    fail(ErrorCode::shape, "operator and covariance sizes differ");
  }
  const Eigen::MatrixXd e = matrix_exponential(l * t);
  return e * c0 * e.transpose();
}

}  // namespace fragkit
