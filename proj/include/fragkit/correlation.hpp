#pragma once

#include "fragkit/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace fragkit {

/// Connected two-point function over a set of bins.
struct CorrelationEstimate {
  std::vector<double> centres;  // bin coordinates (xi or size)
  Eigen::VectorXd mean;         // <n_i>
  Eigen::MatrixXd gc;           // <n_i n_j> - <n_i><n_j>
  Eigen::MatrixXd stderr_gc;
  std::size_t runs = 0;
};

/// Covariance of per-run bin counts (rows = runs). The standard error of
/// entry (i, j) is the standard error of the mean of the centred products.
inline CorrelationEstimate count_covariance(const Eigen::MatrixXd& counts, std::vector<double> centres) {
  const auto runs = static_cast<std::size_t>(counts.rows());
  if (runs < 2) fail(ErrorCode::domain, "count covariance needs at least two runs");
  if (static_cast<std::size_t>(counts.cols()) != centres.size()) {
    fail(ErrorCode::shape, "bin coordinates do not match count columns");
  }
  const Eigen::Index bins = counts.cols();
  const double r = static_cast<double>(runs);
  CorrelationEstimate out;
  out.centres = std::move(centres);
  out.runs = runs;
  out.mean = counts.colwise().mean().transpose();
  const Eigen::MatrixXd centred = counts.rowwise() - out.mean.transpose();
  out.gc = (centred.transpose() * centred) / (r - 1.0);
  out.stderr_gc.setZero(bins, bins);
  for (Eigen::Index i = 0; i < bins; ++i) {
    for (Eigen::Index j = i; j < bins; ++j) {
      const Eigen::ArrayXd prod = centred.col(i).array() * centred.col(j).array();
      const double m = prod.mean();
      const double var = (prod - m).square().sum() / (r - 1.0);
      out.stderr_gc(i, j) = out.stderr_gc(j, i) = std::sqrt(var / r);
    }
  }
  return out;
}

/// Independent-particle prediction for the same bins: N p_i (delta_ij - p_j)
/// with p_i = <n_i> / n_total.
inline Eigen::MatrixXd multinomial_covariance(const Eigen::VectorXd& mean_counts, double n_total) {
  const Eigen::VectorXd p = mean_counts / n_total;
  Eigen::MatrixXd out = -n_total * p * p.transpose();
  out.diagonal() += n_total * p;
  return out;
}

}  // namespace fragkit
