// Runs the fragkit binary on the shipped configs.

#include "fragkit/io.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path work_dir() {
  const auto dir = fs::temp_directory_path() / "fragkit_test_cli";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Run run_cli(const std::string& args) {
  const auto dir = work_dir();
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string(FRAGKIT_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string config(const std::string& name) { return (fs::path(FRAGKIT_CONFIG_DIR) / name).string(); }

std::string out_dir(const std::string& name) {
  const auto d = work_dir() / name;
  fs::remove_all(d);
  return d.string();
}

}  // namespace

TEST(Cli, Version) {
  const auto r = run_cli("--version");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find(fragkit::version), std::string::npos);
}

TEST(Cli, ValidatePrintsReport) {
  const auto r = run_cli("validate --config " + config("beta2.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_TRUE(j.at("pass").get<bool>());
  EXPECT_NEAR(j.at("integral_mass").get<double>(), 1.0, 1e-8);
}

TEST(Cli, SolversWriteDensities) {
  for (const char* which : {"log-master", "fp", "pbe"}) {
    const auto dir = out_dir(std::string("solve_") + which);
    const auto r = run_cli(std::string("solve ") + which + " --config " + config("uniform_binary.json") + " --out " + dir);
    ASSERT_EQ(r.code, 0) << which << ": " << r.err;
    const auto density = fragkit::read_density_csv((fs::path(dir) / "density.csv").string());
    EXPECT_NEAR(density.mass() + density.leaked_mass, 1.0, 1e-3) << which;
    const auto table = fragkit::read_csv((fs::path(dir) / "density.csv").string());
    EXPECT_EQ(table.meta.at("solver"), which);
    EXPECT_EQ(table.meta.at("config_hash").size(), 16u);
    const auto meta = json::parse(slurp(fs::path(dir) / "metadata.json"));
    EXPECT_EQ(meta.at("solver"), which);
  }
  EXPECT_TRUE(fs::exists(fs::path(work_dir()) / "solve_pbe" / "size_density.csv"));
}

TEST(Cli, CompareSolverOutputs) {
  const auto a = out_dir("cmp_a");
  const auto b = out_dir("cmp_b");
  ASSERT_EQ(run_cli("solve log-master --config " + config("uniform_binary.json") + " --out " + a).code, 0);
  ASSERT_EQ(run_cli("solve pbe --config " + config("uniform_binary.json") + " --out " + b).code, 0);
  const auto r = run_cli("compare " + a + "/density.csv " + b + "/density.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LT(json::parse(r.out).at("l1").get<double>(), 0.02);
}

TEST(Cli, TaggedSimulationIsSeedReproducible) {
  const auto a = out_dir("tag_a");
  const auto b = out_dir("tag_b");
  ASSERT_EQ(run_cli("simulate tagged --config " + config("beta2.json") + " --seed 5 --out " + a).code, 0);
  ASSERT_EQ(run_cli("simulate tagged --config " + config("beta2.json") + " --seed 5 --threads 2 --out " + b).code, 0);
  EXPECT_EQ(slurp(fs::path(a) / "density.csv"), slurp(fs::path(b) / "density.csv"));
  EXPECT_EQ(slurp(fs::path(a) / "correlator.csv"), slurp(fs::path(b) / "correlator.csv"));
  EXPECT_NE(slurp(fs::path(a) / "density.csv").find("seed=5"), std::string::npos);
}

TEST(Cli, BranchingSimulation) {
  const auto dir = out_dir("branch");
  const auto r = run_cli("simulate branching --config " + config("uniform_binary.json") + " --out " + dir);
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"number_density.csv", "correlator.csv", "snapshot.csv", "metadata.json"}) {
    EXPECT_TRUE(fs::exists(fs::path(dir) / f)) << f;
  }
  const auto meta = json::parse(slurp(fs::path(dir) / "metadata.json"));
  EXPECT_LE(meta.at("max_mass_error").get<double>(), 1e-12);
  EXPECT_NEAR(meta.at("mean_particles").get<double>(), 2.0, 5 * meta.at("stderr_particles").get<double>());
}

TEST(Cli, SpectrumAndCorrelate) {
  const auto dir = out_dir("spectrum");
  const auto r = run_cli("spectrum --config " + config("spectrum.json") + " --out " + dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(slurp(fs::path(dir) / "spectrum.json"));
  EXPECT_NEAR(j.at("F_star").get<double>(), 0.5, 1e-9);
  const double first = j.at("eigenvalues")[0].at("re").get<double>();
  EXPECT_NEAR(first, j.at("airy_reference")[0].get<double>(), 1e-3);
  EXPECT_LT(j.at("biorthonormality_error").get<double>(), 1e-9);

  const auto c = run_cli("correlate --config " + config("spectrum.json") + " --times 0 2 --points 16 --out " + dir);
  ASSERT_EQ(c.code, 0) << c.err;
  const auto t0 = fragkit::read_csv((fs::path(dir) / "correlator_0.csv").string());
  const auto t1 = fragkit::read_csv((fs::path(dir) / "correlator_1.csv").string());
  double diag0 = 0.0, diag1 = 0.0;
  for (std::size_t i = 0; i < t0.rows.size(); ++i) {
    if (t0.rows[i][0] == t0.rows[i][1]) {
      diag0 += t0.rows[i][2];
      diag1 += t1.rows[i][2];
    }
  }
  EXPECT_GT(diag0, 0.0);
  EXPECT_LT(diag1, diag0);  // all modes decay
}

TEST(Cli, CheckLindblad) {
  const auto r = run_cli("check-lindblad --config " + config("lindblad32.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(json::parse(r.out).at("pass").get<bool>());
}

TEST(Cli, ErrorsAreStructured) {
  const auto missing = run_cli("solve log-master --config /nonexistent.json");
  EXPECT_EQ(missing.code, 2);
  EXPECT_EQ(json::parse(missing.err).at("error"), "config");

  const auto usage = run_cli("solve nonsense --config " + config("beta2.json"));
  EXPECT_EQ(usage.code, 64);
  EXPECT_EQ(json::parse(usage.err).at("error"), "usage");

  const auto bad = work_dir() / "bad.json";
  std::ofstream(bad) << "{\"solver\": {\"n\": 1}}";
  const auto range = run_cli("solve log-master --config " + bad.string());
  EXPECT_EQ(range.code, 2);
  EXPECT_NE(json::parse(range.err).at("message").get<std::string>().find("solver.n"), std::string::npos);
}
