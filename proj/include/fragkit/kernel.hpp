#pragma once

// Homogeneous breakage kernels and the induced log-size jump law.

#include "fragkit/errors.hpp"
#include "fragkit/inverse_cdf.hpp"
#include "fragkit/quadrature.hpp"
#include "fragkit/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace fragkit {

/// Split law of a binary break: density pi(z) of the fraction z handed to
/// one daughter, and the induced daughter number density B(z) = pi(z) + pi(1-z).
class DaughterLaw {
 public:
  enum class Kind { uniform_binary, symmetric_beta, tabulated, number_density };

  static DaughterLaw uniform_binary() { return DaughterLaw(Kind::uniform_binary); }

  static DaughterLaw symmetric_beta(double a) {
    if (!(a > 0.0) || !std::isfinite(a)) fail(ErrorCode::invalid_kernel, "symmetric-beta parameter must be positive");
    DaughterLaw law(Kind::symmetric_beta);
    law.beta_a_ = a;
    law.log_beta_norm_ = 2.0 * std::lgamma(a) - std::lgamma(2.0 * a);
    law.build_split_table();
    return law;
  }

  /// Piecewise-linear split density through (z[i], pi[i]); zero outside the
  /// table. Renormalized to unit mass, with a warning when the correction
  /// exceeds 1e-6.
  static DaughterLaw tabulated(std::vector<double> z, std::vector<double> pi) {
    if (z.size() != pi.size() || z.size() < 2) {
      fail(ErrorCode::invalid_kernel, "tabulated split density needs >= 2 matching (z, pi) rows");
    }
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (!std::isfinite(z[i]) || !std::isfinite(pi[i])) fail(ErrorCode::invalid_kernel, "tabulated split density has non-finite entries");
      if (z[i] < 0.0 || z[i] > 1.0) fail(ErrorCode::invalid_kernel, "tabulated z outside [0, 1]");
      if (pi[i] < 0.0) fail(ErrorCode::invalid_kernel, "tabulated split density is negative");
      if (i > 0 && !(z[i] > z[i - 1])) fail(ErrorCode::invalid_kernel, "tabulated z must be strictly increasing");
    }
    double mass = 0.0;
    for (std::size_t i = 1; i < z.size(); ++i) mass += 0.5 * (pi[i] + pi[i - 1]) * (z[i] - z[i - 1]);
    if (!(mass > 0.0)) fail(ErrorCode::invalid_kernel, "tabulated split density has zero mass");
    DaughterLaw law(Kind::tabulated);
    law.adjustment_ = std::abs(mass - 1.0);
    if (law.adjustment_ > 1e-6) {
      std::ostringstream msg;
      msg << "tabulated split density renormalized (integral was " << mass << ")";
      warn(msg.str());
    }
    for (auto& v : pi) v /= mass;
    law.table_z_ = std::move(z);
    law.table_pi_ = std::move(pi);
    law.build_split_table();
    return law;
  }

  /// A bare daughter number density B(z) with no binary split law behind it.
  /// Usable for validation and for the log-jump law, not for branching.
  static DaughterLaw number_density(std::function<double(double)> b, std::string label = "custom") {
    DaughterLaw law(Kind::number_density);
    law.raw_b_ = std::make_shared<std::function<double(double)>>(std::move(b));
    law.label_ = std::move(label);
    return law;
  }

  Kind kind() const { return kind_; }
  bool has_split_density() const { return kind_ != Kind::number_density; }
  double beta_a() const { return beta_a_; }
  double renormalization_adjustment() const { return adjustment_; }

  std::string label() const {
    switch (kind_) {
      case Kind::uniform_binary: return "uniform-binary";
      case Kind::symmetric_beta: return "symmetric-beta";
      case Kind::tabulated: return "tabulated";
      case Kind::number_density: return label_;
    }
    return label_;
  }

  double split_density(double z) const { return split_density(z, 1.0 - z); }

  /// Same with the complement zc = 1 - z supplied exactly, so the
  /// (1 - z)^{a-1} end of a beta law resolves below one ulp of z = 1.
  double split_density(double z, double zc) const {
    if (!(z > 0.0 && zc > 0.0)) return 0.0;
    switch (kind_) {
      case Kind::uniform_binary: return 1.0;
      case Kind::symmetric_beta:
        return std::exp((beta_a_ - 1.0) * (std::log(z) + std::log(zc)) - log_beta_norm_);
      case Kind::tabulated: return table_value(z);
      case Kind::number_density: break;
    }
    fail(ErrorCode::invalid_kernel, "daughter law '" + label_ + "' has no split density");
  }

  double number_density(double z) const { return number_density(z, 1.0 - z); }

  double number_density(double z, double zc) const {
    if (kind_ == Kind::number_density) return (z > 0.0 && zc >= 0.0) ? (*raw_b_)(z) : 0.0;
    if (kind_ == Kind::uniform_binary) return (z > 0.0 && zc >= 0.0) ? 2.0 : 0.0;
    return split_density(z, zc) + split_density(zc, z);
  }

  /// Points in (0, 1) where B(z) has kinks; quadrature splits there.
  std::vector<double> breakpoints() const {
    std::vector<double> points;
    if (kind_ == Kind::tabulated) {
      for (double z : table_z_) {
        if (z > 0.0 && z < 1.0) {
          points.push_back(z);
          points.push_back(1.0 - z);
        }
      }
      std::sort(points.begin(), points.end());
      points.erase(std::unique(points.begin(), points.end()), points.end());
    }
    return points;
  }

  double sample_split(RandomStream& rng) const {
    switch (kind_) {
      case Kind::uniform_binary: return uniform_open(rng);
      case Kind::symmetric_beta:
      case Kind::tabulated: {
        const double z = split_table_->sample(rng);
        return std::clamp(z, 0x1.0p-60, 1.0 - 0x1.0p-53);
      }
      case Kind::number_density: break;
    }
    fail(ErrorCode::invalid_kernel, "daughter law '" + label_ + "' cannot be sampled as a binary split");
  }

  const std::vector<double>& table_z() const { return table_z_; }
  const std::vector<double>& table_pi() const { return table_pi_; }

 private:
  explicit DaughterLaw(Kind kind) : kind_(kind), label_("custom") {}

  double table_value(double z) const {
    if (z < table_z_.front() || z > table_z_.back()) return 0.0;
    const auto it = std::upper_bound(table_z_.begin(), table_z_.end(), z);
    if (it == table_z_.end()) return table_pi_.back();
    const std::size_t i = static_cast<std::size_t>(it - table_z_.begin());
    const double w = (z - table_z_[i - 1]) / (table_z_[i] - table_z_[i - 1]);
    return (1.0 - w) * table_pi_[i - 1] + w * table_pi_[i];
  }

  void build_split_table() {
    const DaughterLaw* self = this;
    auto density = [self](double z) { return self->split_density(z); };
    split_table_ = std::make_shared<const InverseCdfTable>(density, 0.0, 1.0);
  }

  Kind kind_;
  double beta_a_ = 0.0;
  double log_beta_norm_ = 0.0;
  double adjustment_ = 0.0;
  std::vector<double> table_z_;
  std::vector<double> table_pi_;
  std::shared_ptr<std::function<double(double)>> raw_b_;
  std::shared_ptr<const InverseCdfTable> split_table_;
  std::string label_;
};

/// Selection S(x) = k x^alpha with homogeneous daughter law B(x/y)/y.
class HomogeneousKernel {
 public:
  HomogeneousKernel(double alpha, double k, double x0, DaughterLaw daughter)
      : alpha_(alpha), k_(k), x0_(x0), daughter_(std::move(daughter)) {
    if (!std::isfinite(alpha)) fail(ErrorCode::invalid_kernel, "alpha must be finite");
    if (!(k > 0.0) || !std::isfinite(k)) fail(ErrorCode::invalid_kernel, "rate constant k must be positive");
    if (!(x0 > 0.0) || !std::isfinite(x0)) fail(ErrorCode::invalid_kernel, "reference size x0 must be positive");
    if (alpha < 0.0) warn("alpha < 0: small fragments break ever faster; long-time behaviour is not validated");
  }

  double alpha() const { return alpha_; }
  double k() const { return k_; }
  double x0() const { return x0_; }
  const DaughterLaw& daughter() const { return daughter_; }

  double selection_rate(double x) const { return k_ * std::pow(x, alpha_); }

 private:
  double alpha_;
  double k_;
  double x0_;
  DaughterLaw daughter_;
};

/// lambda(xi) = k x0^alpha e^{alpha xi}.
inline double breakage_rate(const HomogeneousKernel& kernel, double xi) {
  const double rate = kernel.k() * std::exp(kernel.alpha() * (std::log(kernel.x0()) + xi));
  if (!std::isfinite(rate) || !(rate > 0.0)) {
    std::ostringstream msg;
    msg << "breakage rate out of floating-point range at xi = " << xi;
    fail(ErrorCode::range, msg.str());
  }
  return rate;
}

struct ValidationReport {
  std::string variant;
  std::optional<double> integral_split;  // int pi dz, absent for bare B
  double integral_mass = 0.0;            // int z B(z) dz
  bool split_nonnegative = true;
  bool split_ok = true;
  bool mass_ok = false;
  bool pass = false;
  double tolerance = 1e-8;
};

namespace detail {

template <typename F>
double integrate_with_breaks(const F& f, double a, double b, const std::vector<double>& breaks,
                             double tolerance = 1e-13) {
  double total = 0.0;
  double left = a;
  for (double p : breaks) {
    if (p <= left || p >= b) continue;
    total += quadrature::integrate_singular(f, left, p, tolerance);
    left = p;
  }
  return total + quadrature::integrate_singular(f, left, b, tolerance);
}

/// int_a^b g(z) B(z) dz over [a, b] in [0, 1], or with the split density
/// when `split` is set. Pieces above one half run in w = 1 - z so the
/// density sees an exact complement.
template <typename G>
double integrate_daughter(const DaughterLaw& daughter, const G& g, double a, double b, double tolerance = 1e-13,
                          bool split = false) {
  auto density = [&](double z, double zc) {
    return split ? daughter.split_density(z, zc) : daughter.number_density(z, zc);
  };
  std::vector<double> cuts;
  for (double p : daughter.breakpoints()) cuts.push_back(p);
  cuts.push_back(0.5);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  auto piece = [&](double lo, double hi) {
    if (!(hi > lo)) return;
    if (hi <= 0.5) {
      total += quadrature::integrate_singular([&](double z) { return g(z) * density(z, 1.0 - z); }, lo, hi, tolerance);
    } else {
      auto h = [&](double w) { return g(1.0 - w) * density(1.0 - w, w); };
      total += quadrature::integrate_singular(h, 1.0 - hi, 1.0 - lo, tolerance);
    }
  };
  double left = a;
  for (double p : cuts) {
    if (p <= left || p >= b) continue;
    piece(left, p);
    left = p;
  }
  piece(left, b);
  return total;
}

}  // namespace detail

inline ValidationReport validate_daughter_law(const DaughterLaw& daughter, double tolerance = 1e-8) {
  ValidationReport report;
  report.variant = daughter.label();
  report.tolerance = tolerance;
  bool finite = true;
  bool nonnegative = true;
  auto mass_weight = [&](double z) { return z; };
  report.integral_mass = detail::integrate_daughter(daughter, mass_weight, 0.0, 1.0);
  for (double z = 0.0005; z < 1.0; z += 0.001) {
    if (!std::isfinite(daughter.number_density(z))) finite = false;
  }
  if (daughter.has_split_density()) {
    for (double z = 0.0005; z < 1.0; z += 0.001) {
      const double p = daughter.split_density(z);
      if (!std::isfinite(p)) finite = false;
      if (p < 0.0) nonnegative = false;
    }
    auto unit = [](double) { return 1.0; };
    report.integral_split = detail::integrate_daughter(daughter, unit, 0.0, 1.0, 1e-13, true);
    report.split_nonnegative = nonnegative;
    report.split_ok = nonnegative && std::abs(*report.integral_split - 1.0) <= tolerance;
  }
  if (!finite || !std::isfinite(report.integral_mass)) {
    fail(ErrorCode::invalid_kernel, "daughter law '" + daughter.label() + "' has non-finite density values");
  }
  report.mass_ok = std::abs(report.integral_mass - 1.0) <= tolerance;
  report.pass = report.mass_ok && report.split_ok;
  return report;
}

/// Normalized density K(u) of the log-size decrement of a tagged mass
/// element, with truncation point, cached moments and a sampler.
class LogJumpLaw {
 public:
  static constexpr double tail_tolerance = 1e-10;
  static constexpr double normalization_tolerance = 1e-8;

  /// K(u) = e^{-2u} B(e^{-u}) for a homogeneous kernel.
  static LogJumpLaw from_daughter(const DaughterLaw& daughter) {
    auto law = std::make_shared<const DaughterLaw>(daughter);
    auto density = [law](double u) {
      if (u < 0.0) return 0.0;
      const double z = std::exp(-u);
      return z * z * law->number_density(z, -std::expm1(-u));
    };
    auto breaks_z = daughter.breakpoints();
    std::vector<double> breaks_u;
    for (double z : breaks_z) breaks_u.push_back(-std::log(z));
    std::sort(breaks_u.begin(), breaks_u.end());
    auto tail = [law](double u) {
      // int_u^inf K = int_0^{e^-u} z B(z) dz
      auto weight = [](double z) { return z; };
      return detail::integrate_daughter(*law, weight, 0.0, std::exp(-u), 1e-14);
    };
    std::optional<double> rate;
    if (daughter.kind() == DaughterLaw::Kind::uniform_binary) rate = 2.0;
    return LogJumpLaw(density, tail, std::move(breaks_u), rate, daughter.label());
  }

  /// Arbitrary jump density on u >= 0 (used for rescaled families and
  /// synthetic laws). Must integrate to one.
  static LogJumpLaw from_density(std::function<double(double)> k, std::string label = "custom",
                                 std::optional<double> exponential_rate = std::nullopt) {
    auto shared = std::make_shared<std::function<double(double)>>(std::move(k));
    auto density = [shared](double u) { return u < 0.0 ? 0.0 : (*shared)(u); };
    auto tail = [density](double u) { return quadrature::integrate_to_infinity(density, u, 1e-14); };
    return LogJumpLaw(density, tail, {}, exponential_rate, std::move(label));
  }

  /// K_eps(u) = K(u / eps) / eps.
  LogJumpLaw scaled(double eps) const {
    if (!(eps > 0.0)) fail(ErrorCode::domain, "jump scale factor must be positive");
    auto base = density_;
    std::optional<double> rate;
    if (exponential_rate_) rate = *exponential_rate_ / eps;
    auto density = [base, eps](double u) { return u < 0.0 ? 0.0 : base(u / eps) / eps; };
    auto base_tail = tail_;
    auto tail = [base_tail, eps](double u) { return base_tail(u / eps); };
    std::vector<double> breaks;
    for (double b : breaks_) breaks.push_back(b * eps);
    std::ostringstream label;
    label << label_ << " x" << eps;
    return LogJumpLaw(density, tail, std::move(breaks), rate, label.str());
  }

  double density(double u) const { return density_(u); }
  double operator()(double u) const { return density_(u); }
  double tail_mass(double u) const { return tail_(u); }
  double u_max() const { return u_max_; }
  double normalization() const { return normalization_; }
  const std::string& label() const { return label_; }
  const std::vector<double>& breakpoints() const { return breaks_; }
  std::optional<double> exponential_rate() const { return exponential_rate_; }

  /// m_n = int u^n K(u) du for n in {1, 2, 3}.
  double moment(int n) const {
    if (n < 1 || n > 3) fail(ErrorCode::domain, "jump moments are available for n = 1, 2, 3");
    const auto& m = moments_[static_cast<std::size_t>(n - 1)];
    if (!m) {
      std::ostringstream msg;
      msg << "jump moment m" << n << " diverges for '" << label_ << "'";
      fail(ErrorCode::moment_divergence, msg.str());
    }
    return *m;
  }

  double sample(RandomStream& rng) const {
    if (exponential_rate_) return -std::log1p(-uniform01(rng)) / *exponential_rate_;
    return table_->sample(rng);
  }

  /// Inverse CDF; exact for exponential laws, tabulated otherwise.
  double quantile(double probability) const {
    if (exponential_rate_) return -std::log1p(-probability) / *exponential_rate_;
    return table_->quantile(probability);
  }

 private:
  template <typename Density, typename Tail>
  LogJumpLaw(Density density, Tail tail, std::vector<double> breaks, std::optional<double> rate,
             std::string label)
      : density_(std::move(density)),
        tail_(std::move(tail)),
        breaks_(std::move(breaks)),
        exponential_rate_(rate),
        label_(std::move(label)) {
    normalization_ = tail_(0.0);
    if (!std::isfinite(normalization_) || std::abs(normalization_ - 1.0) > normalization_tolerance) {
      std::ostringstream msg;
      msg << "log-jump density '" << label_ << "' is not normalizable to one (integral " << normalization_
          << "); the daughter law does not conserve mass";
      fail(ErrorCode::invalid_kernel, msg.str());
    }
    find_truncation();
    compute_moments();
    if (!exponential_rate_) {
      table_ = std::make_shared<const InverseCdfTable>(density_, 0.0, u_max_);
    }
  }

  void find_truncation() {
    double hi = 1.0;
    while (tail_(hi) >= tail_tolerance) {
      hi *= 2.0;
      if (hi > 1e12) fail(ErrorCode::invalid_kernel, "log-jump density tail does not decay");
    }
    double lo = 0.0;
    for (int iter = 0; iter < 200 && hi - lo > 1e-10 * hi; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (tail_(mid) < tail_tolerance) hi = mid;
      else lo = mid;
    }
    u_max_ = hi;
  }

  double truncated_moment(int n, double upper) const {
    auto f = [&](double u) { return std::pow(u, n) * density_(u); };
    return detail::integrate_with_breaks(f, 0.0, upper, breaks_, 1e-13);
  }

  void compute_moments() {
    for (int n = 1; n <= 3; ++n) {
      auto f = [&](double u) { return std::pow(u, n) * density_(u); };
      const double body = truncated_moment(n, u_max_);
      const double wide = truncated_moment(n, 4.0 * u_max_);
      const double tail = quadrature::integrate_to_infinity(f, u_max_, 1e-12);
      const double value = body + tail;
      const bool converged = std::isfinite(value) && std::isfinite(wide) &&
                             std::abs(wide - body) <= 1e-6 * std::max(1.0, std::abs(body));
      moments_[static_cast<std::size_t>(n - 1)] = converged ? std::optional<double>(value) : std::nullopt;
    }
  }

  std::function<double(double)> density_;
  std::function<double(double)> tail_;
  std::vector<double> breaks_;
  std::optional<double> exponential_rate_;
  std::string label_;
  double normalization_ = 0.0;
  double u_max_ = 0.0;
  std::array<std::optional<double>, 3> moments_{};
  std::shared_ptr<const InverseCdfTable> table_;
};

inline LogJumpLaw log_jump_density(const HomogeneousKernel& kernel) {
  return LogJumpLaw::from_daughter(kernel.daughter());
}

inline double jump_moments(const LogJumpLaw& law, int n) { return law.moment(n); }

inline double sample_jump(const LogJumpLaw& law, RandomStream& rng) { return law.sample(rng); }

struct ValidityParameters {
  double eps1 = 0.0;  // sqrt(Var u) / ell
  double eps2 = 0.0;  // <|u|^3>^{1/3} / ell
};

inline ValidityParameters validity_parameters(const LogJumpLaw& law, double ell) {
  if (!(ell > 0.0)) fail(ErrorCode::domain, "observation scale must be positive");
  const double m1 = law.moment(1);
  const double m2 = law.moment(2);
  const double m3 = law.moment(3);
  const double variance = std::max(0.0, m2 - m1 * m1);
  return {std::sqrt(variance) / ell, std::cbrt(m3) / ell};
}

}  // namespace fragkit
