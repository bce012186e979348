// Command-line front end: validate, solve, simulate, spectrum, correlate,
// compare, check-lindblad.

#include "fragkit/fragkit.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace fragkit;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned threads = 1;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool needs_config = true) {
  auto* opt = cmd->add_option("--config", flags.config, "run configuration (JSON)");
  if (needs_config) opt->required();
  cmd->add_option("--seed", flags.seed, "master seed (overrides mc.seed)");
  cmd->add_option("--out", flags.out, "output directory (overrides output)");
  cmd->add_option("--threads", flags.threads, "worker threads (0 = hardware)");
}

struct Context {
  RunConfig config;
  std::uint64_t seed = 1;
  fs::path out;
  unsigned threads = 1;

  CsvMetadata meta() const {
    CsvMetadata m;
    m.config_hash = config.hash;
    m.seed = seed;
    return m;
  }
};

Context make_context(const CommonFlags& flags) {
  Context ctx;
  ctx.config = flags.config.empty() ? parse_config("{}") : load_config(flags.config);
  ctx.seed = flags.seed.value_or(ctx.config.mc.seed);
  ctx.out = flags.out.empty() ? fs::path(ctx.config.output) : fs::path(flags.out);
  if (flags.out.empty() && ctx.out.is_relative() && !ctx.config.base_dir.empty()) ctx.out = ctx.config.base_dir / ctx.out;
  ctx.threads = flags.threads;
  return ctx;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create output directory '" + dir.string() + "'");
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
}

GridField initial_density(const RunConfig& c, const UniformGrid& grid) {
  const auto& init = c.solver.initial;
  if (init.kind == "gaussian") return gaussian_field(grid, init.xi0, init.sigma, c.solver.bc);
  return delta_field(grid, init.xi0, c.solver.bc);
}

InitialSampler initial_sampler(const RunConfig& c, const UniformGrid& grid) {
  if (c.solver.initial.kind == "delta") return delta_sampler(c.solver.initial.xi0);
  return field_sampler(initial_density(c, grid));
}

json kernel_json(const RunConfig& c) {
  return {{"alpha", c.kernel.alpha}, {"k", c.kernel.k}, {"x0", c.kernel.x0}, {"daughter", c.kernel.variant}};
}

json report_json(const ValidationReport& r) {
  json j{{"variant", r.variant},
         {"integral_mass", r.integral_mass},
         {"mass_ok", r.mass_ok},
         {"split_ok", r.split_ok},
         {"split_nonnegative", r.split_nonnegative},
         {"tolerance", r.tolerance},
         {"pass", r.pass}};
  j["integral_split"] = r.integral_split ? json(*r.integral_split) : json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------

int cmd_validate(const Context& ctx) {
  const auto daughter = make_daughter(ctx.config.kernel);
  const auto report = validate_daughter_law(daughter);
  json j = report_json(report);
  if (report.pass) {
    const auto law = LogJumpLaw::from_daughter(daughter);
    j["log_jump"] = {{"u_max", law.u_max()}, {"normalization", law.normalization()}, {"m1", law.moment(1)},
                     {"m2", law.moment(2)}, {"m3", law.moment(3)}};
  }
  std::cout << j.dump(2) << '\n';
  if (!report.pass) {
    std::cerr << json{{"error", "invalid-kernel"}, {"message", "daughter law failed validation"}}.dump() << '\n';
    return 2;
  }
  return 0;
}

int cmd_solve(const Context& ctx, const std::string& which) {
  const auto& c = ctx.config;
  const auto kernel = make_kernel(c.kernel);
  const auto grid = make_grid(c.solver);
  const auto p0 = initial_density(c, grid);
  ensure_dir(ctx.out);
  auto meta = ctx.meta();
  meta.set("solver", which);
  meta.set("t", c.solver.t);
  json info{{"solver", which}, {"kernel", kernel_json(c)}, {"t", c.solver.t}, {"config_hash", c.hash},
            {"grid", {{"xi_min", grid.xi_min}, {"xi_max", grid.xi_max}, {"n", grid.n}}}};

  GridField result;
  if (which == "log-master") {
    const auto law = log_jump_density(kernel);
    result = integrate_log_master(kernel, law, p0, c.solver.t);
  } else if (which == "fp") {
    const auto coeffs = km_reduce(kernel, grid);
    FokkerPlanckOptions opt;
    opt.dt = c.solver.dt;
    result = integrate_fokker_planck(coeffs, p0, c.solver.t, opt);
  } else {
    const double log_ratio = c.solver.q ? std::log(2.0) / *c.solver.q : grid.spacing();
    const SizeGrid sizes(c.kernel.x0 * std::exp(grid.xi_max), std::log(2.0) / log_ratio,
                         static_cast<std::size_t>(std::floor((grid.xi_max - grid.xi_min) / log_ratio)) + 1);
    const auto f0 = size_field_from_log_density(p0, c.kernel.x0, sizes);
    const auto f = solve_pbe_number(kernel, f0, c.solver.t);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < sizes.n; ++i) rows.push_back({sizes.pivot(i), f.numbers[i], f.density(i)});
    auto size_meta = meta;
    size_meta.set("q", sizes.q);
    size_meta.set("x_max", sizes.x_max);
    size_meta.set("n", std::to_string(sizes.n));
    write_csv((ctx.out / "size_density.csv").string(), size_meta, {"x", "number", "value"}, rows);
    result = mass_weighted_transform(f, c.kernel.x0, grid);
    info["number_initial"] = f0.total_number();
    info["number_final"] = f.total_number();
    info["mass_initial"] = f0.total_mass();
    info["mass_final"] = f.total_mass();
  }
  write_density_csv((ctx.out / "density.csv").string(), meta, result);
  info["mass_in_grid"] = result.mass();
  info["leaked_mass"] = result.leaked_mass;
  info["files"] = json::array({"density.csv"});
  if (which == "pbe") info["files"].push_back("size_density.csv");
  write_json(ctx.out / "metadata.json", info);
  return 0;
}

void write_correlator(const fs::path& path, CsvMetadata meta, const CorrelationEstimate& g,
                      const std::string& coord = "xi") {
  std::vector<std::vector<double>> rows;
  for (Eigen::Index i = 0; i < g.gc.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.gc.cols(); ++j) {
      rows.push_back({g.centres[static_cast<std::size_t>(i)], g.centres[static_cast<std::size_t>(j)], g.gc(i, j),
                      g.stderr_gc(i, j)});
    }
  }
  meta.set("runs", std::to_string(g.runs));
  write_csv(path.string(), meta, {coord + "_i", coord + "_j", "gc", "stderr"}, rows);
}

int cmd_simulate(const Context& ctx, const std::string& which) {
  const auto& c = ctx.config;
  const auto kernel = make_kernel(c.kernel);
  ensure_dir(ctx.out);
  auto meta = ctx.meta();
  meta.set("engine", which);
  meta.set("t", c.solver.t);
  json info{{"engine", which}, {"kernel", kernel_json(c)}, {"t", c.solver.t}, {"seed", ctx.seed},
            {"config_hash", c.hash}};

  if (which == "tagged") {
    const auto law = log_jump_density(kernel);
    const auto grid = make_grid(c.solver);
    const auto sampler = initial_sampler(c, grid);
    EnsembleOptions opt{ctx.threads, c.mc.max_events};
    const auto ens = run_tagged_ensemble(kernel, law, sampler, c.solver.t, c.mc.replicas, ctx.seed, opt);
    const auto est = ensemble_density(ens, grid);
    auto dmeta = meta;
    dmeta.set("replicas", std::to_string(c.mc.replicas));
    write_density_csv((ctx.out / "density.csv").string(), dmeta, est.density, &est.stderr_values);
    const UniformGrid bins(grid.xi_min, grid.xi_max, c.mc.correlator_bins);
    // Independent seed family for the correlator runs.
    const auto g = tagged_correlator(kernel, law, sampler, c.solver.t, c.mc.runs, c.mc.tags, bins,
                                     splitmix64(ctx.seed ^ 0x7461676765645f63ULL), opt);
    auto cmeta = meta;
    cmeta.set("tags", std::to_string(c.mc.tags));
    write_correlator(ctx.out / "correlator.csv", cmeta, g);
    info["replicas"] = c.mc.replicas;
    info["leaked_mass"] = est.density.leaked_mass;
    info["files"] = {"density.csv", "correlator.csv"};
  } else {
    const double x_start = c.kernel.x0 * std::exp(c.solver.initial.xi0);
    const auto initial = monodisperse_population(x_start, c.mc.particles);
    const SizeGrid bins(x_start, c.mc.bins_q, c.mc.bins_n);
    BranchingControls controls;
    controls.max_particles = c.mc.max_particles;
    controls.xi_min_cutoff = c.mc.xi_min_cutoff;
    const auto ens = run_branching_ensemble(kernel, initial, c.solver.t, c.mc.runs, ctx.seed, bins, controls,
                                            ctx.threads);
    const auto est = number_density_estimate(ens);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < bins.n; ++i) {
      rows.push_back({bins.pivot(i), est.mean.numbers[i], est.stderr_counts[i], est.mean.density(i)});
    }
    auto dmeta = meta;
    dmeta.set("runs", std::to_string(c.mc.runs));
    dmeta.set("q", bins.q);
    dmeta.set("x_max", bins.x_max);
    write_csv((ctx.out / "number_density.csv").string(), dmeta, {"x", "count", "stderr", "value"}, rows);
    write_correlator(ctx.out / "correlator.csv", meta, branching_correlator(ens), "x");
    // Snapshot of the first run's population.
    auto rng = replica_stream(ctx.seed, 0);
    const auto first = simulate_branching(kernel, initial, c.solver.t, rng, controls);
    std::vector<std::vector<double>> snap;
    for (double x : first.population.sizes) snap.push_back({x});
    write_csv((ctx.out / "snapshot.csv").string(), meta, {"size"}, snap);
    double worst = 0.0;
    for (double e : ens.mass_error) worst = std::max(worst, e);
    info["runs"] = c.mc.runs;
    info["mean_particles"] = est.mean_particles;
    info["stderr_particles"] = est.stderr_particles;
    info["max_mass_error"] = worst;
    info["files"] = {"number_density.csv", "correlator.csv", "snapshot.csv"};
  }
  write_json(ctx.out / "metadata.json", info);
  return 0;
}

struct SectorBuild {
  AiryOperator op;
  SpectralSector sector;
};

SectorBuild build_sector(const Context& ctx) {
  const auto& c = ctx.config;
  const auto kernel = make_kernel(c.kernel);
  const auto law = log_jump_density(kernel);
  double xi_star = 0.0;
  if (c.spectral.xi_star) {
    xi_star = *c.spectral.xi_star;
  } else {
    const auto grid = make_grid(c.solver);
    const auto snapshot = integrate_log_master(kernel, law, initial_density(c, grid), c.solver.t);
    xi_star = snapshot.median();
  }
  const auto params = calibrate_airy_params(kernel, law, xi_star, c.spectral.gamma_star);
  if (!(params.F_star > 0.0)) fail(ErrorCode::domain, "calibrated F_star is not positive; no confined Airy sector");
  const UniformGrid grid(xi_star, xi_star + c.spectral.width, c.spectral.n);
  auto op = build_airy_operator(params, grid);
  auto sector = airy_sector(op, c.spectral.n_modes);
  return {std::move(op), std::move(sector)};
}

int cmd_spectrum(const Context& ctx) {
  const auto [op, s] = build_sector(ctx);
  ensure_dir(ctx.out);
  json eig = json::array(), reference = json::array();
  for (Eigen::Index k = 0; k < s.eigenvalues.size(); ++k) {
    eig.push_back({{"re", s.eigenvalues(k).real()}, {"im", s.eigenvalues(k).imag()}});
    reference.push_back(airy_eigenvalue(s.params, static_cast<int>(k + 1)));
  }
  const auto& p = s.params;
  json j{{"D_star", p.D_star},         {"F_star", p.F_star},
         {"Gamma_star", p.Gamma_star}, {"xi_star", p.xi_star},
         {"lambda_star", p.lambda_star}, {"ell_A", p.ell_A},
         {"walls", {op.grid.xi_min, op.grid.xi_max}},
         {"n", op.grid.n},            {"eigenvalues", eig},
         {"airy_reference", reference}, {"biorthonormality_error", biorthonormality_error(s)},
         {"residual", residual_norm(op.matrix, s)},
         {"config_hash", ctx.config.hash}, {"modes", "modes.csv"}};
  write_json(ctx.out / "spectrum.json", j);
  std::vector<std::string> cols{"xi"};
  for (Eigen::Index k = 0; k < s.right.cols(); ++k) cols.push_back("u" + std::to_string(k + 1));
  for (Eigen::Index k = 0; k < s.left.cols(); ++k) cols.push_back("v" + std::to_string(k + 1));
  std::vector<std::vector<double>> rows;
  for (Eigen::Index i = 0; i < s.right.rows(); ++i) {
    std::vector<double> row{s.nodes[static_cast<std::size_t>(i)]};
    for (Eigen::Index k = 0; k < s.right.cols(); ++k) row.push_back(s.right(i, k).real());
    for (Eigen::Index k = 0; k < s.left.cols(); ++k) row.push_back(s.left(i, k).real());
    rows.push_back(std::move(row));
  }
  auto meta = ctx.meta();
  meta.set("D_star", p.D_star);
  meta.set("F_star", p.F_star);
  meta.set("Gamma_star", p.Gamma_star);
  meta.set("xi_star", p.xi_star);
  write_csv((ctx.out / "modes.csv").string(), meta, cols, rows);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_correlate(const Context& ctx, std::string covariance_path, std::vector<double> times, std::size_t points) {
  if (covariance_path.empty()) covariance_path = ctx.config.spectral.covariance_path;
  if (covariance_path.empty()) fail(ErrorCode::config, "no covariance file (use --covariance or spectral.covariance_path)");
  if (times.empty()) times = ctx.config.spectral.times;
  const auto [op, s] = build_sector(ctx);
  const auto table = read_csv(covariance_path);
  const std::size_t cm = table.column("m"), cn = table.column("n"), cv = table.column("value");
  const auto modes = s.right.cols();
  ModeCovariance cov = ModeCovariance::Zero(modes, modes);
  for (const auto& row : table.rows) {
    const auto m = static_cast<Eigen::Index>(row[cm]);
    const auto n = static_cast<Eigen::Index>(row[cn]);
    if (m < 0 || n < 0 || m >= modes || n >= modes) fail(ErrorCode::shape, "covariance index outside retained modes");
    cov(m, n) = row[cv];
  }
  const std::size_t total = s.nodes.size();
  const std::size_t stride = std::max<std::size_t>(1, total / std::max<std::size_t>(points, 1));
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < total; i += stride) idx.push_back(i);
  ensure_dir(ctx.out);
  json files = json::array();
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto g = mode_sum_correlator(s, cov, times[k], idx);
    auto meta = ctx.meta();
    meta.set("t", times[k]);
    const std::string name = "correlator_" + std::to_string(k) + ".csv";
    write_correlator(ctx.out / name, meta, g);
    files.push_back({{"t", times[k]}, {"file", name}});
  }
  std::cout << json{{"files", files}}.dump(2) << '\n';
  return 0;
}

int cmd_compare(const std::string& a, const std::string& b) {
  const auto fa = read_density_csv(a);
  const auto fb = read_density_csv(b);
  const auto m = compare_densities(fa, fb);
  std::cout << json{{"l1", m.l1}, {"sup", m.sup}, {"mean_gap", m.mean_gap}, {"var_gap", m.var_gap}}.dump() << '\n';
  return 0;
}

int cmd_check_lindblad(const Context& ctx) {
  const auto& c = ctx.config;
  const auto kernel = make_kernel(c.kernel);
  const auto law = log_jump_density(kernel);
  const auto r = check_lindblad(kernel, law, make_grid(c.solver));
  const json j{{"grid_size", r.grid_size},
               {"max_abs_difference", r.max_abs_difference},
               {"max_offdiagonal", r.max_offdiagonal},
               {"max_trace", r.max_trace},
               {"pass", r.pass}};
  std::cout << j.dump(2) << '\n';
  return r.pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fragkit: pure-breakage fragmentation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fragkit::version));

  CommonFlags validate_flags, solve_flags, sim_flags, spec_flags, corr_flags, lind_flags;
  auto* validate = app.add_subcommand("validate", "check the daughter law and print its report");
  add_common(validate, validate_flags);

  auto* solve = app.add_subcommand("solve", "run a deterministic solver");
  std::string solve_which;
  solve->add_option("which", solve_which, "pbe | log-master | fp")
      ->required()
      ->check(CLI::IsMember({"pbe", "log-master", "fp"}));
  add_common(solve, solve_flags);

  auto* simulate = app.add_subcommand("simulate", "run a Monte Carlo engine");
  std::string sim_which;
  simulate->add_option("which", sim_which, "tagged | branching")
      ->required()
      ->check(CLI::IsMember({"tagged", "branching"}));
  add_common(simulate, sim_flags);

  auto* spectrum = app.add_subcommand("spectrum", "calibrate and diagonalize the Airy sector");
  add_common(spectrum, spec_flags);

  auto* correlate = app.add_subcommand("correlate", "mode-sum two-point functions");
  std::string covariance;
  std::vector<double> times;
  std::size_t points = 64;
  correlate->add_option("--covariance", covariance, "mode covariance CSV (m,n,value)");
  correlate->add_option("--times", times, "evaluation times");
  correlate->add_option("--points", points, "approximate number of output nodes");
  add_common(correlate, corr_flags);

  auto* compare = app.add_subcommand("compare", "density comparison metrics");
  std::string file_a, file_b;
  compare->add_option("a", file_a, "first density CSV")->required();
  compare->add_option("b", file_b, "second density CSV")->required();

  auto* lindblad = app.add_subcommand("check-lindblad", "compare jump generator and Lindblad diagonal action");
  add_common(lindblad, lind_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", "usage"}, {"message", e.what()}}.dump() << '\n';
    return 64;
  }

  try {
    if (*validate) return cmd_validate(make_context(validate_flags));
    if (*solve) return cmd_solve(make_context(solve_flags), solve_which);
    if (*simulate) return cmd_simulate(make_context(sim_flags), sim_which);
    if (*spectrum) return cmd_spectrum(make_context(spec_flags));
    if (*correlate) return cmd_correlate(make_context(corr_flags), covariance, times, points);
    if (*compare) return cmd_compare(file_a, file_b);
    if (*lindblad) return cmd_check_lindblad(make_context(lind_flags));
  } catch (const fragkit::Error& e) {
    std::cerr << json{{"error", std::string(e.name())}, {"message", e.what()}}.dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
  return 0;
}
