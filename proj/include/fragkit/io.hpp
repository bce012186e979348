#pragma once

// CSV exchange with a one-line metadata header:
//   # fragkit 0.1.0 config_hash=<hex> seed=<n> key=value ...

#include "fragkit/errors.hpp"
#include "fragkit/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace fragkit {

inline constexpr std::string_view version = "0.1.0";

/// Shortest decimal string that round-trips.
inline std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << v;
  return s.str();
}

struct CsvMetadata {
  std::string config_hash = "none";
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> extra;

  void set(std::string key, std::string value) { extra.emplace_back(std::move(key), std::move(value)); }
  void set(std::string key, double value) { extra.emplace_back(std::move(key), format_double(value)); }

  std::string header_line() const {
    std::string out = "# fragkit " + std::string(version) + " config_hash=" + config_hash + " seed=" + std::to_string(seed);
    for (const auto& [k, v] : extra) out += " " + k + "=" + v;
    return out;
  }
};

inline void write_csv(const std::string& path, const CsvMetadata& meta, const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot open '" + path + "' for writing");
  out << meta.header_line() << '\n';
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != columns.size()) fail(ErrorCode::shape, "CSV row width does not match header");
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
    out << '\n';
  }
  if (!out) fail(ErrorCode::io, "write to '" + path + "' failed");
}

struct CsvTable {
  std::map<std::string, std::string> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    fail(ErrorCode::io, "CSV has no column '" + std::string(name) + "'");
  }
};

inline double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    fail(ErrorCode::io, where + ": cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open '" + path + "'");
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream words(line.substr(1));
      std::string w;
      while (words >> w) {
        const auto eq = w.find('=');
        if (eq != std::string::npos) t.meta[w.substr(0, eq)] = w.substr(eq + 1);
      }
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!have_header) {
      for (auto& c : cells) {
        while (!c.empty() && c.back() == ' ') c.pop_back();
        while (!c.empty() && c.front() == ' ') c.erase(c.begin());
      }
      t.columns = cells;
      have_header = true;
      continue;
    }
    if (cells.size() != t.columns.size()) {
      fail(ErrorCode::io, path + ":" + std::to_string(line_no) + ": expected " + std::to_string(t.columns.size()) +
                              " fields");
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_double(c, path + ":" + std::to_string(line_no)));
    t.rows.push_back(std::move(row));
  }
  if (!have_header) fail(ErrorCode::io, "'" + path + "' has no column header");
  return t;
}

/// Density file with columns xi,value[,stderr]; the grid is rebuilt from the
/// xi column, which must be uniform.
inline GridField read_density_csv(const std::string& path) {
  const auto t = read_csv(path);
  const std::size_t cx = t.column("xi");
  const std::size_t cv = t.column("value");
  if (t.rows.size() < 2) fail(ErrorCode::io, "'" + path + "' needs at least two rows");
  double lo = t.rows.front()[cx];
  double hi = t.rows.back()[cx];
  if (auto a = t.meta.find("xi_min"), b = t.meta.find("xi_max"); a != t.meta.end() && b != t.meta.end()) {
    lo = parse_double(a->second, path);
    hi = parse_double(b->second, path);
  }
  const UniformGrid grid(lo, hi, t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (std::abs(t.rows[i][cx] - grid.node(i)) > 1e-9 * std::max(1.0, std::abs(hi - lo))) {
      fail(ErrorCode::io, "'" + path + "' xi column is not a uniform grid");
    }
  }
  GridField f(grid);
  for (std::size_t i = 0; i < t.rows.size(); ++i) f.values[i] = t.rows[i][cv];
  if (auto it = t.meta.find("bc"); it != t.meta.end()) f.bc = boundary_from_string(it->second);
  if (auto it = t.meta.find("leaked_mass"); it != t.meta.end()) f.leaked_mass = parse_double(it->second, path);
  return f;
}

inline void write_density_csv(const std::string& path, CsvMetadata meta, const GridField& f,
                              const std::vector<double>* stderr_values = nullptr) {
  meta.set("xi_min", f.grid.xi_min);
  meta.set("xi_max", f.grid.xi_max);
  meta.set("n", std::to_string(f.grid.n));
  meta.set("bc", std::string(to_string(f.bc)));
  meta.set("leaked_mass", f.leaked_mass);
  std::vector<std::string> cols{"xi", "value"};
  if (stderr_values) cols.push_back("stderr");
  std::vector<std::vector<double>> rows;
  rows.reserve(f.grid.n);
  for (std::size_t i = 0; i < f.grid.n; ++i) {
    std::vector<double> row{f.grid.node(i), f.values[i]};
    if (stderr_values) row.push_back((*stderr_values)[i]);
    rows.push_back(std::move(row));
  }
  write_csv(path, meta, cols, rows);
}

}  // namespace fragkit
