#pragma once

// Run configuration read from a JSON file. Every section is optional and
// falls back to the defaults below; unknown keys are rejected.

#include "fragkit/errors.hpp"
#include "fragkit/grid.hpp"
#include "fragkit/io.hpp"
#include "fragkit/kernel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fragkit {

struct KernelConfig {
  double alpha = 1.0;
  double k = 1.0;
  double x0 = 1.0;
  std::string variant = "uniform-binary";
  double a = 2.0;
  std::string table_path;
};

struct InitialConfig {
  std::string kind = "delta";  // delta | gaussian
  double xi0 = 0.0;
  double sigma = 0.3;
};

struct SolverConfig {
  double xi_min = -6.0;
  double xi_max = 2.0;
  std::size_t n = 256;
  std::optional<double> q;  // size-grid resolution; aligned with the xi grid when absent
  double t = 1.0;
  std::optional<double> dt;
  BoundaryCondition bc = BoundaryCondition::absorb_left;
  InitialConfig initial;
};

struct McConfig {
  std::size_t replicas = 100000;
  std::uint64_t seed = 1;
  std::size_t max_events = 1000000;
  std::size_t max_particles = 10000000;
  std::optional<double> xi_min_cutoff;
  std::size_t runs = 10000;
  std::size_t tags = 100;
  std::size_t particles = 1;
  double bins_q = 4.0;
  std::size_t bins_n = 16;
  std::size_t correlator_bins = 8;
};

struct SpectralConfig {
  std::optional<double> xi_star;  // median of the initial density when absent
  double gamma_star = 0.0;
  double width = 15.0;            // right wall at xi_star + width
  std::size_t n = 512;
  std::size_t n_modes = 8;
  std::string covariance_path;
  std::vector<double> times{0.0};
};

struct RunConfig {
  KernelConfig kernel;
  SolverConfig solver;
  McConfig mc;
  SpectralConfig spectral;
  std::string output = "out";
  std::string hash = "none";  // FNV-1a of the normalized JSON text
  std::filesystem::path base_dir;
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(ErrorCode::config, where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) fail(ErrorCode::config, where + "." + it.key() + ": unknown key");
  }
}

template <typename T>
void read_field(const json& j, const std::string& where, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::config, where + "." + key + ": wrong type");
  }
}

template <typename T>
void read_optional(const json& j, const std::string& where, const char* key, std::optional<T>& out) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  T v{};
  read_field(j, where, key, v);
  out = v;
}

inline void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) fail(ErrorCode::config, field + ": " + what);
}

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(offset, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
  using detail::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // byte is one past the offending character
    const auto [line, col] = detail::line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    std::ostringstream msg;
    msg << "line " << line << ", column " << col << ": " << e.what();
    fail(ErrorCode::config, msg.str());
  }
  RunConfig c;
  c.base_dir = base_dir;
  detail::reject_unknown(root, "config", {"kernel", "solver", "mc", "spectral", "output"});
  detail::read_field(root, "config", "output", c.output);

  if (root.contains("kernel")) {
    const auto& k = root["kernel"];
    detail::reject_unknown(k, "kernel", {"alpha", "k", "x0", "daughter"});
    detail::read_field(k, "kernel", "alpha", c.kernel.alpha);
    detail::read_field(k, "kernel", "k", c.kernel.k);
    detail::read_field(k, "kernel", "x0", c.kernel.x0);
    if (k.contains("daughter")) {
      const auto& d = k["daughter"];
      detail::reject_unknown(d, "kernel.daughter", {"variant", "a", "table_path"});
      detail::read_field(d, "kernel.daughter", "variant", c.kernel.variant);
      detail::read_field(d, "kernel.daughter", "a", c.kernel.a);
      detail::read_field(d, "kernel.daughter", "table_path", c.kernel.table_path);
    }
  }
  if (root.contains("solver")) {
    const auto& s = root["solver"];
    detail::reject_unknown(s, "solver", {"xi_min", "xi_max", "n", "q", "t", "dt", "bc", "initial"});
    detail::read_field(s, "solver", "xi_min", c.solver.xi_min);
    detail::read_field(s, "solver", "xi_max", c.solver.xi_max);
    detail::read_field(s, "solver", "n", c.solver.n);
    detail::read_optional(s, "solver", "q", c.solver.q);
    detail::read_field(s, "solver", "t", c.solver.t);
    detail::read_optional(s, "solver", "dt", c.solver.dt);
    std::string bc = std::string(to_string(c.solver.bc));
    detail::read_field(s, "solver", "bc", bc);
    try {
      c.solver.bc = boundary_from_string(bc);
    } catch (const Error&) {
      fail(ErrorCode::config, "solver.bc: expected absorb-left or reflect-left, got '" + bc + "'");
    }
    if (s.contains("initial")) {
      const auto& i = s["initial"];
      detail::reject_unknown(i, "solver.initial", {"kind", "xi0", "sigma"});
      detail::read_field(i, "solver.initial", "kind", c.solver.initial.kind);
      detail::read_field(i, "solver.initial", "xi0", c.solver.initial.xi0);
      detail::read_field(i, "solver.initial", "sigma", c.solver.initial.sigma);
    }
  }
  if (root.contains("mc")) {
    const auto& m = root["mc"];
    detail::reject_unknown(m, "mc", {"replicas", "seed", "max_events", "max_particles", "xi_min_cutoff", "runs", "tags",
                                     "particles", "bins_q", "bins_n", "correlator_bins"});
    detail::read_field(m, "mc", "replicas", c.mc.replicas);
    detail::read_field(m, "mc", "seed", c.mc.seed);
    detail::read_field(m, "mc", "max_events", c.mc.max_events);
    detail::read_field(m, "mc", "max_particles", c.mc.max_particles);
    detail::read_optional(m, "mc", "xi_min_cutoff", c.mc.xi_min_cutoff);
    detail::read_field(m, "mc", "runs", c.mc.runs);
    detail::read_field(m, "mc", "tags", c.mc.tags);
    detail::read_field(m, "mc", "particles", c.mc.particles);
    detail::read_field(m, "mc", "bins_q", c.mc.bins_q);
    detail::read_field(m, "mc", "bins_n", c.mc.bins_n);
    detail::read_field(m, "mc", "correlator_bins", c.mc.correlator_bins);
  }
  if (root.contains("spectral")) {
    const auto& s = root["spectral"];
    detail::reject_unknown(s, "spectral", {"xi_star", "gamma_star", "width", "n", "n_modes", "covariance_path", "times"});
    detail::read_optional(s, "spectral", "xi_star", c.spectral.xi_star);
    detail::read_field(s, "spectral", "gamma_star", c.spectral.gamma_star);
    detail::read_field(s, "spectral", "width", c.spectral.width);
    detail::read_field(s, "spectral", "n", c.spectral.n);
    detail::read_field(s, "spectral", "n_modes", c.spectral.n_modes);
    detail::read_field(s, "spectral", "covariance_path", c.spectral.covariance_path);
    detail::read_field(s, "spectral", "times", c.spectral.times);
  }

  using detail::require;
  require(c.kernel.k > 0.0, "kernel.k", "must be positive");
  require(c.kernel.x0 > 0.0, "kernel.x0", "must be positive");
  require(std::isfinite(c.kernel.alpha), "kernel.alpha", "must be finite");
  require(c.kernel.variant == "uniform-binary" || c.kernel.variant == "symmetric-beta" || c.kernel.variant == "tabulated",
          "kernel.daughter.variant", "expected uniform-binary, symmetric-beta or tabulated");
  require(c.kernel.a > 0.0, "kernel.daughter.a", "must be positive");
  require(c.kernel.variant != "tabulated" || !c.kernel.table_path.empty(), "kernel.daughter.table_path",
          "required for the tabulated variant");
  require(c.solver.xi_max > c.solver.xi_min, "solver.xi_max", "must exceed solver.xi_min");
  require(c.solver.n >= 2 && c.solver.n <= 1000000, "solver.n", "must lie in [2, 1e6]");
  require(!c.solver.q || *c.solver.q > 0.0, "solver.q", "must be positive");
  require(c.solver.t >= 0.0, "solver.t", "must be non-negative");
  require(!c.solver.dt || *c.solver.dt > 0.0, "solver.dt", "must be positive");
  require(c.solver.initial.kind == "delta" || c.solver.initial.kind == "gaussian", "solver.initial.kind",
          "expected delta or gaussian");
  require(c.solver.initial.sigma > 0.0, "solver.initial.sigma", "must be positive");
  require(c.mc.replicas >= 100, "mc.replicas", "must be at least 100");
  require(c.mc.max_events >= 1, "mc.max_events", "must be positive");
  require(c.mc.max_particles >= 1, "mc.max_particles", "must be positive");
  require(c.mc.runs >= 2, "mc.runs", "must be at least 2");
  require(c.mc.tags >= 1, "mc.tags", "must be positive");
  require(c.mc.particles >= 1, "mc.particles", "must be positive");
  require(c.mc.bins_q > 0.0, "mc.bins_q", "must be positive");
  require(c.mc.bins_n >= 2, "mc.bins_n", "must be at least 2");
  require(c.mc.correlator_bins >= 2, "mc.correlator_bins", "must be at least 2");
  require(c.spectral.width > 0.0, "spectral.width", "must be positive");
  require(c.spectral.n >= 66 && c.spectral.n <= 20000, "spectral.n", "must lie in [66, 20000]");
  require(std::isfinite(c.spectral.gamma_star), "spectral.gamma_star", "must be finite");

  auto resolve = [&](std::string& p, const char* field) {
    if (p.empty()) return;
    std::filesystem::path path(p);
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    require(std::filesystem::exists(path), field, "file '" + path.string() + "' does not exist");
    p = path.string();
  };
  resolve(c.kernel.table_path, "kernel.daughter.table_path");
  resolve(c.spectral.covariance_path, "spectral.covariance_path");

  c.hash = hex64(fnv1a(root.dump()));
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::config, "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::filesystem::path(path).parent_path());
}

inline DaughterLaw make_daughter(const KernelConfig& k) {
  if (k.variant == "uniform-binary") return DaughterLaw::uniform_binary();
  if (k.variant == "symmetric-beta") return DaughterLaw::symmetric_beta(k.a);
  const auto table = read_csv(k.table_path);
  const std::size_t cz = table.column("z");
  const std::size_t cp = table.column("pi");
  std::vector<double> z, pi;
  for (const auto& row : table.rows) {
    z.push_back(row[cz]);
    pi.push_back(row[cp]);
  }
  return DaughterLaw::tabulated(std::move(z), std::move(pi));
}

inline HomogeneousKernel make_kernel(const KernelConfig& k) {
  return HomogeneousKernel(k.alpha, k.k, k.x0, make_daughter(k));
}

inline UniformGrid make_grid(const SolverConfig& s) { return UniformGrid(s.xi_min, s.xi_max, s.n); }

}  // namespace fragkit
