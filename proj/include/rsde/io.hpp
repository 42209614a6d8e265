#pragma once

// CSV formats:
//   driver path   t,z1,...,zd,is_jump
//   solution      t,x1,...,xd,k1,...,kd,kvar
//   rate table    mesh,err_unif_med,err_unif_p90,err_grid_med,k_err_med,slope_partial

#include "rsde/analysis.hpp"
#include "rsde/driver.hpp"
#include "rsde/skorokhod.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace rsde::io {

/// Shortest round-trip decimal form; identical bytes for identical doubles.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line_no) + ": not a number: '" + s + "'");
  }
}

inline void write_path_csv(std::ostream& out, const GridPath& z) {
  const auto d = z.dimension();
  out << "t";
  for (Eigen::Index c = 0; c < d; ++c) out << ",z" << (c + 1);
  out << ",is_jump\n";
  for (std::size_t i = 0; i < z.size(); ++i) {
    out << fmt(z.times[i]);
    for (Eigen::Index c = 0; c < d; ++c) out << ',' << fmt(z.values[i][c]);
    out << ',' << (z.jump_at(z.times[i]) ? 1 : 0) << '\n';
  }
}

/// Jump sizes are reconstructed as the value increment at flagged rows.
inline GridPath read_path_csv(std::istream& in, Interp interp = Interp::cadlag_step) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty path CSV");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header.front() != "t" || header.back() != "is_jump") {
    throw Error(ErrorCode::ParseError, "path CSV header must be t,z1,...,zd,is_jump");
  }
  const auto d = static_cast<Eigen::Index>(header.size() - 2);
  for (Eigen::Index c = 0; c < d; ++c) {
    if (header[c + 1] != "z" + std::to_string(c + 1)) {
      throw Error(ErrorCode::ParseError, "unexpected column '" + header[c + 1] + "'");
    }
  }
  GridPath z;
  z.interp = interp;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                             std::to_string(header.size()) + " columns");
    }
    const double t = parse_double(cells[0], line_no);
    if (!z.times.empty() && !(t > z.times.back())) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line_no) + ": time column must be strictly increasing");
    }
    Vec v(d);
    for (Eigen::Index c = 0; c < d; ++c) v[c] = parse_double(cells[c + 1], line_no);
    const auto& flag = cells.back();
    if (flag != "0" && flag != "1") {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": is_jump must be 0 or 1");
    }
    if (flag == "1" && !z.values.empty()) z.jumps.push_back({t, v - z.values.back()});
    z.times.push_back(t);
    z.values.push_back(std::move(v));
  }
  if (z.times.empty()) throw Error(ErrorCode::ParseError, "path CSV has no rows");
  if (z.times.front() != 0.0) throw Error(ErrorCode::ParseError, "path must start at t = 0");
  if (interp == Interp::linear) z.jumps.clear();
  return z;
}

inline void write_solution_csv(std::ostream& out, const SkorokhodSolution& sol) {
  const auto d = sol.x.dimension();
  out << "t";
  for (Eigen::Index c = 0; c < d; ++c) out << ",x" << (c + 1);
  for (Eigen::Index c = 0; c < d; ++c) out << ",k" << (c + 1);
  out << ",kvar\n";
  for (std::size_t i = 0; i < sol.x.size(); ++i) {
    out << fmt(sol.x.times[i]);
    for (Eigen::Index c = 0; c < d; ++c) out << ',' << fmt(sol.x.values[i][c]);
    for (Eigen::Index c = 0; c < d; ++c) out << ',' << fmt(sol.k.values[i][c]);
    out << ',' << fmt(sol.k_variation[i]) << '\n';
  }
}

inline void write_rate_table_csv(std::ostream& out, const RateTable& table) {
  out << "mesh,err_unif_med,err_unif_p90,err_grid_med,k_err_med,slope_partial\n";
  for (const auto& r : table.rows) {
    out << fmt(r.mesh) << ',' << fmt(r.err_unif_med) << ',' << fmt(r.err_unif_p90) << ','
        << fmt(r.err_grid_med) << ',' << fmt(r.k_err_med) << ','
        << (std::isnan(r.slope_partial) ? std::string() : fmt(r.slope_partial)) << '\n';
  }
}

}  // namespace rsde::io
