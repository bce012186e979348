// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "fragkit/fragkit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace fragkit;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

double l1_gap(const GridField& a, const GridField& b) { return compare_densities(a, b).l1; }

HomogeneousKernel uniform_kernel(double alpha, double k = 1.0) {
  return HomogeneousKernel(alpha, k, 1.0, DaughterLaw::uniform_binary());
}

// 1 ---------------------------------------------------------------------------
Outcome kernel_identities() {
  const auto law = log_jump_density(uniform_kernel(1.0));
  double worst = 0.0;
  for (double u : {0.0, 0.1, 0.5, 1.0, 2.0, 5.0}) worst = std::max(worst, std::abs(law.density(u) - 2 * std::exp(-2 * u)));
  const double norm = std::abs(law.normalization() - 1.0);
  const double m1 = std::abs(jump_moments(law, 1) - 0.5);
  const double m2 = std::abs(jump_moments(law, 2) - 0.5);
  const bool ok = worst <= 1e-8 && norm <= 1e-8 && m1 <= 1e-8 && m2 <= 1e-8;
  return {ok, "max|K-2e^-2u|=" + fmt(worst) + " |intK-1|=" + fmt(norm) + " |m1-1/2|=" + fmt(m1) + " |m2-1/2|=" + fmt(m2)};
}

// 2 ---------------------------------------------------------------------------
Outcome commutation() {
  const auto kernel = uniform_kernel(1.0);
  const auto law = log_jump_density(kernel);
  const UniformGrid grid(-8.0, 2.5, 512);
  const auto p0 = gaussian_field(grid, 0.0, 0.3);
  // Size grid whose pivots coincide with the xi nodes.
  const SizeGrid sizes(std::exp(grid.xi_max), std::log(2.0) / grid.spacing(), grid.n);
  const auto f0 = size_field_from_log_density(p0, 1.0, sizes);
  const auto f1 = solve_pbe_number(kernel, f0, 1.0);
  const auto via_pbe = mass_weighted_transform(f1, 1.0, grid);
  const auto via_master = integrate_log_master(kernel, law, p0, 1.0);
  const double gap = l1_gap(via_pbe, via_master);
  const double mass_drift = std::abs(f1.total_mass() / f0.total_mass() - 1.0);
  return {gap < 0.01, "L1=" + fmt(gap) + " (n=512, t=1/k), PBE mass drift " + fmt(mass_drift)};
}

// 3 ---------------------------------------------------------------------------
Outcome mc_master() {
  std::string detail;
  bool ok = true;
  const UniformGrid grid(-8.0, 1.0, 91);
  for (double alpha : {0.0, 1.0}) {
    const auto kernel = uniform_kernel(alpha);
    const auto law = log_jump_density(kernel);
    const auto master = integrate_log_master(kernel, law, delta_field(grid, 0.0), 1.0);
    const auto ens = run_tagged_ensemble(kernel, law, delta_sampler(0.0), 1.0, 100000, 20240611 + static_cast<int>(alpha));
    const auto est = ensemble_density(ens, grid);
    const double gap = l1_gap(est.density, master);
    ok = ok && gap < 0.02;
    detail += "alpha=" + fmt(alpha) + ": L1=" + fmt(gap) + "  ";
  }
  return {ok, detail + "(R=1e5, h=0.1)"};
}

// 4 ---------------------------------------------------------------------------
Outcome compound_poisson() {
  const auto kernel = uniform_kernel(0.0);
  const auto law = log_jump_density(kernel);
  const double t = 10.0;
  const std::size_t r = 100000;
  const auto ens = run_tagged_ensemble(kernel, law, delta_sampler(0.0), t, r, 7);
  double mean = 0.0;
  for (double x : ens.positions) mean += x;
  mean /= static_cast<double>(r);
  double m2 = 0.0, m4 = 0.0;
  for (double x : ens.positions) {
    const double d = x - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  const double var = m2 / static_cast<double>(r - 1);
  m4 /= static_cast<double>(r);
  const double se_mean = std::sqrt(var / static_cast<double>(r));
  const double se_var = std::sqrt((m4 - var * var) / static_cast<double>(r));
  const double target_mean = -law.moment(1) * t;
  const double target_var = law.moment(2) * t;
  const double z_mean = (mean - target_mean) / se_mean;
  const double z_var = (var - target_var) / se_var;
  const bool ok = std::abs(z_mean) <= 3 && std::abs(z_var) <= 3;
  return {ok, "mean=" + fmt(mean) + " (z=" + fmt(z_mean) + ") var=" + fmt(var) + " (z=" + fmt(z_var) + ")"};
}

// 5 ---------------------------------------------------------------------------
Outcome branching_mean_field() {
  std::string detail;
  bool ok = true;
  double worst_mass = 0.0;
  {
    const auto kernel = uniform_kernel(1.0);
    const SizeGrid fine(1.0, 12.0, 240);
    const auto ens = run_branching_ensemble(kernel, monodisperse_population(1.0, 1), 1.0, 10000, 99, fine);
    for (double e : ens.mass_error) worst_mass = std::max(worst_mass, e);
    const auto mc = coarsen(number_density_estimate(ens).mean, 3);
    const auto pbe = coarsen(solve_pbe_number(kernel, monodisperse_field(fine, 1.0), 1.0), 3);
    const double na = mc.total_number(), nb = pbe.total_number();
    double l1 = 0.0;
    for (std::size_t i = 0; i < mc.numbers.size(); ++i) l1 += std::abs(mc.numbers[i] / na - pbe.numbers[i] / nb);
    ok = ok && l1 < 0.05;
    detail += "alpha=1 L1=" + fmt(l1) + "; ";
  }
  {
    const auto kernel = uniform_kernel(0.0);
    const SizeGrid bins(1.0, 4.0, 40);
    const auto ens = run_branching_ensemble(kernel, monodisperse_population(1.0, 1), 1.0, 10000, 100, bins);
    for (double e : ens.mass_error) worst_mass = std::max(worst_mass, e);
    const auto est = number_density_estimate(ens);
    const double z = (est.mean_particles - std::exp(1.0)) / est.stderr_particles;
    ok = ok && std::abs(z) <= 3;
    detail += "alpha=0 N(1)=" + fmt(est.mean_particles) + " vs e (z=" + fmt(z) + "); ";
  }
  ok = ok && worst_mass <= 1e-12;
  return {ok, detail + "max mass error " + fmt(worst_mass)};
}

// 6 ---------------------------------------------------------------------------
Outcome lindblad() {
  double worst = 0.0, offdiag = 0.0;
  const UniformGrid grid(-4.0, 2.0, 32);
  for (const auto& daughter : {DaughterLaw::uniform_binary(), DaughterLaw::symmetric_beta(2.0)}) {
    for (double alpha : {0.0, 1.0}) {
      const HomogeneousKernel kernel(alpha, 1.0, 1.0, daughter);
      const auto r = check_lindblad(kernel, log_jump_density(kernel), grid);
      worst = std::max(worst, r.max_abs_difference);
      offdiag = std::max(offdiag, r.max_offdiagonal);
    }
  }
  return {worst <= 1e-12, "max|G - Lindblad|=" + fmt(worst) + " max off-diagonal=" + fmt(offdiag)};
}

// 7 ---------------------------------------------------------------------------
Outcome airy_spectrum() {
  const auto kernel = uniform_kernel(1.0);
  const auto params = calibrate_airy_params(kernel, log_jump_density(kernel), 0.0);
  const double a1 = airy_ai_zero(1);
  auto leading = [&](std::size_t n) -> Eigen::VectorXd {
    const auto op = build_airy_operator(params, UniformGrid(0.0, 16.0, n));
    return airy_sector(op, 3).eigenvalues.real();
  };
  const Eigen::VectorXd l512 = leading(512), l1024 = leading(1024), l2048 = leading(2048);
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double exact = airy_eigenvalue(params, k + 1);
    worst = std::max(worst, std::abs(l2048(k) - exact) / std::abs(exact));
  }
  const double order = std::log2(std::abs(l512(0) - l1024(0)) / std::abs(l1024(0) - l2048(0)));
  const bool ok = worst <= 1e-4 && std::abs(order - 2.0) <= 0.2 && std::abs(a1 + 2.338107) < 1e-6;
  return {ok, "a1=" + std::to_string(a1) + " max rel err (3 modes, n=2048)=" + fmt(worst) + " order=" + fmt(order)};
}

// 8 ---------------------------------------------------------------------------
Outcome mode_sum() {
  const auto kernel = uniform_kernel(1.0);
  auto params = calibrate_airy_params(kernel, log_jump_density(kernel), 0.0, 0.1);
  const auto op = build_airy_operator(params, UniformGrid(0.0, 8.0, 130));
  const auto sector = airy_sector(op, 0);
  const auto n = static_cast<Eigen::Index>(op.size());
  Eigen::MatrixXd c0(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = op.node(static_cast<std::size_t>(i)) - op.node(static_cast<std::size_t>(j));
      c0(i, j) = std::exp(-d * d / 0.5) + (i == j ? 0.1 : 0.0);
    }
  }
  const auto modes = project_grid_covariance(sector, c0);
  double worst = 0.0;
  for (double t : {0.0, 0.1, 1.0}) {
    const Eigen::MatrixXd oracle = propagate_covariance_oracle(op.matrix, c0, t);
    const Eigen::MatrixXd g = mode_sum_correlator(sector, modes, t).gc;
    worst = std::max(worst, (g - oracle).norm() / oracle.norm());
  }
  ModeCovariance diag = ModeCovariance::Zero(n, n);
  for (Eigen::Index m = 0; m < n; ++m) diag(m, m) = 1.0 / (1.0 + static_cast<double>(m));
  const Eigen::MatrixXd fast = mode_sum_correlator(sector, diag, 0.5, {}, ModeSumPath::diagonal).gc;
  const Eigen::MatrixXd general = mode_sum_correlator(sector, diag, 0.5, {}, ModeSumPath::general).gc;
  const double path_gap = (fast - general).cwiseAbs().maxCoeff() / general.cwiseAbs().maxCoeff();
  return {worst <= 1e-6 && path_gap <= 1e-12,
          "rel Frobenius gap=" + fmt(worst) + " diagonal-vs-general=" + fmt(path_gap)};
}

// 9 ---------------------------------------------------------------------------
Outcome similarity() {
  const double gamma = 1.0, d = 1.0;
  const UniformGrid grid(-8.0, 8.0, 5001);
  FPCoefficients ou = constant_coefficients(grid, 0.0, d);
  for (std::size_t i = 0; i < grid.n; ++i) ou.drift[i] = -gamma * grid.node(i);
  const auto tp = similarity_transform(ou, 0.0);
  double closed_form_gap = 0.0, corrected_gap = 0.0;
  for (std::size_t i = 1; i + 1 < grid.n; ++i) {
    const double x = grid.node(i);
    closed_form_gap = std::max(closed_form_gap, std::abs(tp.potential[i] - (gamma * gamma * x * x / (4 * d) + gamma / 2)));
    corrected_gap = std::max(corrected_gap, std::abs(tp.potential[i] - (gamma * gamma * x * x / (4 * d) - gamma / 2)));
  }
  const auto p0 = gaussian_field(grid, 0.5, 1.0);
  const auto direct = integrate_fokker_planck(ou, p0, 0.1);
  const auto psi = integrate_gauge_form(tp, ou.diffusion, to_gauge(tp, p0.values), 0.1);
  GridField back(grid, from_gauge(tp, psi));
  const double round_trip = l1_gap(direct, back);
  const bool ok = closed_form_gap <= 1e-10 && round_trip < 1e-6;
  return {ok, "max|U - (g^2 x^2/4D + g/2)|=" + fmt(closed_form_gap) + " max|U - (g^2 x^2/4D - g/2)|=" +
                  fmt(corrected_gap) + " round-trip L1=" + fmt(round_trip)};
}

// 10 --------------------------------------------------------------------------
Outcome km_trend() {
  const auto kernel = uniform_kernel(1.0);
  const auto base = log_jump_density(kernel);
  const UniformGrid grid(-4.0, 2.0, 601);
  const auto p0 = gaussian_field(grid, 0.0, 0.3);
  std::vector<double> gaps;
  std::string detail;
  for (double eps : {0.5, 0.25, 0.125}) {
    const auto law = base.scaled(eps);
    const auto exact = integrate_log_master(kernel, law, p0, 1.0);
    const auto fp = integrate_fokker_planck(km_reduce(kernel, law, grid), p0, 1.0);
    gaps.push_back(l1_gap(exact, fp));
    detail += "eps=" + fmt(eps) + ": L1=" + fmt(gaps.back()) + "  ";
  }
  const bool ok = gaps[1] < gaps[0] && gaps[2] < gaps[1];
  return {ok, detail};
}

// 11 --------------------------------------------------------------------------
Outcome correlators() {
  std::string detail;
  bool tagged_ok = true;
  {
    const auto kernel = uniform_kernel(1.0);
    const auto law = log_jump_density(kernel);
    const std::size_t tags = 50;
    const UniformGrid bins(-2.25, 0.25, 6);
    const auto g = tagged_correlator(kernel, law, delta_sampler(0.0), 1.0, 2000, tags, bins, 31337);
    const Eigen::MatrixXd oracle = multinomial_covariance(g.mean, static_cast<double>(tags));
    double worst = 0.0;
    for (Eigen::Index i = 0; i < g.gc.rows(); ++i) {
      for (Eigen::Index j = 0; j < g.gc.cols(); ++j) {
        worst = std::max(worst, std::abs(g.gc(i, j) - oracle(i, j)) / g.stderr_gc(i, j));
      }
    }
    tagged_ok = worst <= 3.0;
    detail += "tagged max |G-multinomial|/SE=" + fmt(worst) + "; ";
  }
  bool cascade_ok = false;
  {
    const auto kernel = uniform_kernel(1.0);
    const SizeGrid bins(1.0 / std::sqrt(std::sqrt(2.0)), 2.0, 10);
    const auto ens = run_branching_ensemble(kernel, monodisperse_population(1.0, 1), 1.0, 10000, 4242, bins);
    const auto g = branching_correlator(ens);
    double mean_n = 0.0;
    for (double n : ens.particles) mean_n += n;
    mean_n /= static_cast<double>(ens.particles.size());
    const Eigen::MatrixXd oracle = multinomial_covariance(g.mean, mean_n);
    double best = -1e300;
    for (Eigen::Index i = 0; i < g.gc.rows(); ++i) {
      for (Eigen::Index j = 0; j < g.gc.cols(); ++j) {
        if (i == j || g.stderr_gc(i, j) == 0.0) continue;
        best = std::max(best, (g.gc(i, j) - oracle(i, j)) / g.stderr_gc(i, j));
      }
    }
    cascade_ok = best > 3.0;
    detail += "branching max (G-multinomial)/SE=" + fmt(best);
  }
  return {tagged_ok && cascade_ok, detail};
}

}  // namespace

// Optional arguments pick criteria by id; none runs all.
int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  const std::vector<Criterion> criteria{
      {1, "kernel identities", 1, kernel_identities},
      {2, "change-of-variables commutation", 30, commutation},
      {3, "tagged MC vs master equation", 60, mc_master},
      {4, "compound-Poisson moments", 30, compound_poisson},
      {5, "branching mean field", 120, branching_mean_field},
      {6, "Lindblad diagonal equivalence", 5, lindblad},
      {7, "Airy spectrum", 30, airy_spectrum},
      {8, "mode sum vs matrix exponential", 10, mode_sum},
      {9, "similarity transform", 10, similarity},
      {10, "Kramers-Moyal validity trend", 60, km_trend},
      {11, "correlator structure", 120, correlators},
  };
  int failures = 0;
  std::size_t ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_seconds;
    const bool pass = out.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s  [%2d] %-34s %s | %.2f s (budget %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                out.detail.c_str(), secs, c.budget_seconds, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(ran) - failures, ran);
  return failures == 0 ? 0 : 1;
}
