#pragma once

// Plain-text artifacts.
//
// Matrix CSV: one row per line, comma separated, no header, '.' decimal point.
// Values are written with std::to_chars (shortest round-trip form), so a
// write/read cycle reproduces every double exactly and files do not depend on
// the locale.
//
// Trace CSV header: k,elapsed_s,objective,step_norm,rank_x,r,inner_iters

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "lowrank/linalg.hpp"
#include "lowrank/solver.hpp"

namespace lowrank {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& context) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw IoError(context + ": cannot parse '" + std::string(s) + "' as a number");
  }
  return v;
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_for_write(path);
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string matrix_to_csv(const Matrix& a) {
  std::string out;
  out.reserve(static_cast<std::size_t>(a.size()) * 24);
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(a(i, j));
    }
    out += '\n';
  }
  return out;
}

inline Matrix matrix_from_csv(std::string_view text, const std::string& context) {
  std::vector<double> values;
  Index rows = 0;
  Index cols = -1;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    Index count = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string_view cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
      values.push_back(parse_double(cell, context + " row " + std::to_string(rows + 1)));
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cols >= 0 && count != cols) {
      throw IoError(context + ": row " + std::to_string(rows + 1) + " has " + std::to_string(count) +
                    " values, expected " + std::to_string(cols));
    }
    cols = count;
    ++rows;
  }
  if (rows == 0) throw IoError(context + ": no data");
  return make_matrix(rows, cols, std::span<const double>(values));
}

inline void write_matrix_csv(const std::filesystem::path& path, const Matrix& a) { write_text(path, matrix_to_csv(a)); }

/// Reads a matrix; with an expected shape, a mismatch raises DimensionError.
inline Matrix read_matrix_csv(const std::filesystem::path& path, std::optional<Index> rows = std::nullopt,
                              std::optional<Index> cols = std::nullopt) {
  Matrix a = matrix_from_csv(read_text(path), path.string());
  if ((rows && a.rows() != *rows) || (cols && a.cols() != *cols)) {
    throw DimensionError(path.string() + ": shape " + shape_string(a) + " does not match the expected " +
                         (rows ? std::to_string(*rows) : std::string("?")) + "x" +
                         (cols ? std::to_string(*cols) : std::string("?")));
  }
  return a;
}

inline constexpr std::string_view kTraceHeader = "k,elapsed_s,objective,step_norm,rank_x,r,inner_iters";

/// With include_elapsed = false the elapsed_s column is written as 0, which
/// makes traces from repeated runs byte-comparable.
inline std::string trace_to_csv(const SolveTrace& trace, bool include_elapsed = true) {
  std::string out(kTraceHeader);
  out += '\n';
  for (const auto& rec : trace.records) {
    out += std::to_string(rec.k);
    out += ',';
    out += include_elapsed ? format_double(rec.elapsed_seconds) : std::string("0");
    out += ',';
    out += format_double(rec.objective);
    out += ',';
    out += format_double(rec.step_norm);
    out += ',';
    out += std::to_string(rec.rank_x);
    out += ',';
    out += std::to_string(rec.r);
    out += ',';
    out += std::to_string(rec.inner_iterations);
    out += '\n';
  }
  return out;
}

inline void write_trace_csv(const std::filesystem::path& path, const SolveTrace& trace) {
  write_text(path, trace_to_csv(trace));
}

}  // namespace lowrank
