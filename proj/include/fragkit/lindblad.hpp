#pragma once

// Discrete jump generator on a log-size grid and the same dynamics written
// as a Lindblad dissipator with rank-one jump operators, restricted to
// diagonal density matrices.

#include "fragkit/errors.hpp"
#include "fragkit/grid.hpp"
#include "fragkit/kernel.hpp"
#include "fragkit/log_master.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <vector>

namespace fragkit {

/// Column j holds the rates out of node j. `leak[j]` is the rate at which
/// mass at node j jumps past the left edge.
struct GeneratorMatrix {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd leak;
};

inline constexpr std::size_t dense_generator_limit = 256;

/// G_ij = lambda_j q_{j-i} (j >= i) minus lambda_j on the diagonal, with
/// the same hat-function offsets q_k as the master-equation solver.
inline GeneratorMatrix build_jump_generator_matrix(const HomogeneousKernel& kernel, const LogJumpLaw& law,
                                                   const UniformGrid& grid) {
  if (grid.n > dense_generator_limit) fail(ErrorCode::domain, "dense generator limited to 256 nodes");
  const auto n = static_cast<Eigen::Index>(grid.n);
  const auto q = jump_weights(law, grid.spacing());
  const auto rates = rate_profile(kernel, grid);
  GeneratorMatrix g{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const double lambda = rates[static_cast<std::size_t>(j)];
    g.matrix(j, j) -= lambda;
    for (std::size_t k = 0; k < q.size(); ++k) {
      const Eigen::Index i = j - static_cast<Eigen::Index>(k);
      if (i >= 0) {
        g.matrix(i, j) += lambda * q[k];
      } else {
        g.leak(j) += lambda * q[k];
      }
    }
  }
  return g;
}

/// Result of applying the dissipator to every diagonal basis state.
struct LindbladDiagonalAction {
  GeneratorMatrix generator;        // grid block; leak = sink row
  Eigen::MatrixXd anticommutator;   // -1/2 {L^dag L, rho} part alone, grid block
  double max_offdiagonal = 0.0;     // largest |rho'_ab|, a != b, generated from diagonal rho
  double max_trace = 0.0;           // largest |tr rho'| including the sink
};

/// One rank-one jump operator sqrt(lambda_j q_k) |target><j| per source node j
/// and grid offset k; jumps past the left edge land in an extra sink state.
inline LindbladDiagonalAction build_lindblad_diagonal_action(const HomogeneousKernel& kernel, const LogJumpLaw& law,
                                                             const UniformGrid& grid) {
  if (grid.n > dense_generator_limit) fail(ErrorCode::domain, "dense generator limited to 256 nodes");
  using Sparse = Eigen::SparseMatrix<double>;
  const auto n = static_cast<Eigen::Index>(grid.n);
  const Eigen::Index dim = n + 1;  // grid states plus sink
  const auto q = jump_weights(law, grid.spacing());
  const auto rates = rate_profile(kernel, grid);

  std::vector<Sparse> ops;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < q.size(); ++k) {
      const double amp = std::sqrt(rates[static_cast<std::size_t>(j)] * q[k]);
      if (amp == 0.0) continue;
      const Eigen::Index target = j - static_cast<Eigen::Index>(k) >= 0 ? j - static_cast<Eigen::Index>(k) : n;
      Sparse l(dim, dim);
      l.insert(target, j) = amp;
      ops.push_back(std::move(l));
    }
  }
  std::vector<Sparse> ldl;
  ldl.reserve(ops.size());
  for (const auto& l : ops) ldl.push_back(Sparse(l.transpose()) * l);

  LindbladDiagonalAction out;
  out.generator.matrix = Eigen::MatrixXd::Zero(n, n);
  out.generator.leak = Eigen::VectorXd::Zero(n);
  out.anticommutator = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Sparse rho(dim, dim);
    rho.insert(j, j) = 1.0;
    Eigen::MatrixXd jump = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::MatrixXd anti = Eigen::MatrixXd::Zero(dim, dim);
    for (std::size_t o = 0; o < ops.size(); ++o) {
      const Sparse& l = ops[o];
      jump += Eigen::MatrixXd(l * rho * Sparse(l.transpose()));
      anti -= 0.5 * Eigen::MatrixXd(ldl[o] * rho + rho * ldl[o]);
    }
    const Eigen::MatrixXd total = jump + anti;
    for (Eigen::Index a = 0; a < dim; ++a) {
      for (Eigen::Index b = 0; b < dim; ++b) {
        if (a != b) out.max_offdiagonal = std::max(out.max_offdiagonal, std::abs(total(a, b)));
      }
    }
    out.max_trace = std::max(out.max_trace, std::abs(total.trace()));
    for (Eigen::Index i = 0; i < n; ++i) {
      out.generator.matrix(i, j) = total(i, i);
      out.anticommutator(i, j) = anti(i, i);
    }
    out.generator.leak(j) = total(n, n);
  }
  return out;
}

struct LindbladReport {
  std::size_t grid_size = 0;
  double max_abs_difference = 0.0;
  double max_offdiagonal = 0.0;
  double max_trace = 0.0;
  bool pass = false;
};

inline LindbladReport check_lindblad(const HomogeneousKernel& kernel, const LogJumpLaw& law, const UniformGrid& grid,
                                     double tolerance = 1e-12) {
  const auto g = build_jump_generator_matrix(kernel, law, grid);
  const auto l = build_lindblad_diagonal_action(kernel, law, grid);
  LindbladReport r;
  r.grid_size = grid.n;
  r.max_abs_difference = std::max((g.matrix - l.generator.matrix).cwiseAbs().maxCoeff(),
                                  (g.leak - l.generator.leak).cwiseAbs().maxCoeff());
  r.max_offdiagonal = l.max_offdiagonal;
  r.max_trace = l.max_trace;
  r.pass = r.max_abs_difference <= tolerance && r.max_offdiagonal < 1e-14;
  return r;
}

}  // namespace fragkit
