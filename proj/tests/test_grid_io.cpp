#include "fragkit/grid.hpp"
#include "fragkit/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace fragkit;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "fragkit_test_grid_io";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Grid, NodesAndCells) {
  const UniformGrid g(-1.0, 1.0, 21);
  EXPECT_DOUBLE_EQ(g.spacing(), 0.1);
  EXPECT_DOUBLE_EQ(g.node(20), 1.0);
  EXPECT_EQ(g.cell_of(-1.04), 0);
  EXPECT_EQ(g.cell_of(-1.06), -1);
  EXPECT_EQ(g.cell_of(0.0), 10);
  EXPECT_EQ(g.cell_of(1.06), 21);
  EXPECT_THROW(UniformGrid(1.0, 0.0, 5), Error);
  EXPECT_THROW(UniformGrid(0.0, 1.0, 1), Error);
}

TEST(Grid, FieldMoments) {
  const UniformGrid g(-10.0, 10.0, 2001);
  const auto p = gaussian_field(g, 1.5, 0.8);
  EXPECT_NEAR(p.mass(), 1.0, 1e-14);
  EXPECT_NEAR(p.mean(), 1.5, 1e-12);
  EXPECT_NEAR(p.variance(), 0.64, 1e-6);
  EXPECT_NEAR(p.median(), 1.5, 1e-3);
  EXPECT_NEAR(p.quantile(0.8413447460685429), 2.3, 2e-3);
  const auto d = delta_field(g, 0.0);
  EXPECT_NEAR(d.mass(), 1.0, 1e-12);
  EXPECT_THROW(delta_field(g, 20.0), Error);
}

TEST(Grid, CompareDensities) {
  const UniformGrid g(-5.0, 5.0, 101);
  const auto a = gaussian_field(g, 0.0, 1.0);
  const auto b = gaussian_field(g, 0.1, 1.0);
  const auto c = compare_densities(a, b);
  EXPECT_GT(c.l1, 0.0);
  EXPECT_NEAR(c.mean_gap, -0.1, 1e-5);  // tails cut at +-5
  EXPECT_EQ(compare_densities(a, a).l1, 0.0);
  EXPECT_THROW(compare_densities(a, gaussian_field(UniformGrid(-5.0, 5.0, 51), 0.0, 1.0)), Error);
}

TEST(SizeGridTest, PivotsAndCells) {
  const SizeGrid g(2.0, 4.0, 9);
  EXPECT_DOUBLE_EQ(g.pivot(8), 2.0);
  EXPECT_NEAR(g.pivot(4), 1.0, 1e-14);
  EXPECT_NEAR(g.ratio(), std::pow(2.0, 0.25), 1e-15);
  EXPECT_EQ(g.cell_of(1.0), 4);
  EXPECT_EQ(g.cell_of(g.upper_edge(8) * 1.001), 9);
  EXPECT_EQ(g.cell_of(g.lower_edge(0) * 0.999), -1);
}

TEST(SizeGridTest, CoarseningPreservesCountsAndEdges) {
  const SizeGrid fine(1.0, 6.0, 30);
  SizeField f(fine);
  for (std::size_t i = 0; i < fine.n; ++i) f.numbers[i] = 1.0 + static_cast<double>(i);
  const auto c = coarsen(f, 3);
  EXPECT_EQ(c.grid.n, 10u);
  EXPECT_NEAR(c.grid.q, 2.0, 1e-15);
  EXPECT_NEAR(c.total_number(), f.total_number(), 1e-12);
  EXPECT_NEAR(c.grid.upper_edge(9), fine.upper_edge(29), 1e-14);
  EXPECT_NEAR(c.grid.lower_edge(0), fine.lower_edge(0), 1e-14);
  EXPECT_THROW(coarsen(f, 2), Error);
}

TEST(Io, FormatRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    EXPECT_EQ(parse_double(format_double(x), "t"), x);
  }
  EXPECT_THROW(parse_double("1.0x", "t"), Error);
}

TEST(Io, HashIsStable) {
  EXPECT_EQ(hex64(fnv1a("")), "cbf29ce484222325");
  EXPECT_EQ(hex64(fnv1a("a")), "af63dc4c8601ec8c");
}

TEST(Io, DensityCsvRoundTrip) {
  const UniformGrid g(-3.0, 1.0, 41);
  auto p = gaussian_field(g, -1.0, 0.4, BoundaryCondition::reflect_left);
  p.leaked_mass = 0.125;
  std::vector<double> se(g.n, 0.01);
  CsvMetadata meta;
  meta.config_hash = "abc";
  meta.seed = 42;
  meta.set("t", 1.5);
  const auto path = scratch("density.csv").string();
  write_density_csv(path, meta, p, &se);
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first.rfind("# fragkit 0.1.0 config_hash=abc seed=42 t=1.5", 0), 0u);
  const auto back = read_density_csv(path);
  EXPECT_TRUE(back.grid.same_as(g));
  EXPECT_EQ(back.values, p.values);
  EXPECT_EQ(back.bc, BoundaryCondition::reflect_left);
  EXPECT_EQ(back.leaked_mass, 0.125);
  const auto table = read_csv(path);
  EXPECT_EQ(table.meta.at("seed"), "42");
  EXPECT_EQ(table.rows[0][table.column("stderr")], 0.01);
}

TEST(Io, ReadErrors) {
  EXPECT_THROW(read_csv(scratch("missing.csv").string()), Error);
  const auto bad = scratch("bad.csv");
  std::ofstream(bad) << "xi,value\n0,1\n1\n";
  EXPECT_THROW(read_csv(bad.string()), Error);
  const auto uneven = scratch("uneven.csv");
  std::ofstream(uneven) << "xi,value\n0,1\n1,1\n3,1\n";
  EXPECT_THROW(read_density_csv(uneven.string()), Error);
}
