#pragma once

// Comma-separated ingestion of kernel samples, strain histories and isochrone
// matrices, plus the matching writers and a content digest for reports.
//
// Lines that are blank or start with '#' are skipped. Parse failures carry
// the 1-based line and column of the offending cell.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hkid/error.hpp"
#include "hkid/samples.hpp"
#include "hkid/spline.hpp"

namespace hkid::io {

struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> cells;
};

struct CsvDocument {
  std::string source;
  std::vector<CsvRow> rows;
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline CsvDocument split_csv(std::string_view text, std::string source) {
  CsvDocument doc{std::move(source), {}};
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    CsvRow row{line_no, {}};
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      row.cells.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    doc.rows.push_back(std::move(row));
  }
  return doc;
}

inline std::optional<double> to_number(std::string_view cell) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || end != cell.data() + cell.size() || cell.empty()) return std::nullopt;
  return v;
}

inline double cell_number(const CsvDocument& doc, const CsvRow& row, std::size_t col, const char* where) {
  const auto v = to_number(row.cells[col]);
  if (!v) {
    throw ParseError(where, doc.source + ": line " + std::to_string(row.line) + ", column " + std::to_string(col + 1) +
                                ": not a number: '" + row.cells[col] + "'");
  }
  return *v;
}

inline bool is_header(const CsvRow& row) {
  return std::any_of(row.cells.begin(), row.cells.end(), [](const std::string& c) { return !to_number(c); });
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

inline std::optional<std::size_t> find_column(const CsvRow& header, std::initializer_list<std::string_view> names) {
  for (std::size_t c = 0; c < header.cells.size(); ++c) {
    const std::string name = lower(header.cells[c]);
    for (std::string_view n : names) {
      if (name == n) return c;
    }
  }
  return std::nullopt;
}

inline std::string read_file(const std::string& path, const char* where) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError(where, "cannot open '" + path + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Two-column series (time, value). A header, if present, names the columns;
/// otherwise two cells mean (t, value) and three mean (j, t, value).
inline KernelSamples parse_series(std::string_view text, const std::string& source,
                                  std::initializer_list<std::string_view> value_names, const char* where) {
  const CsvDocument doc = split_csv(text, source);
  if (doc.rows.empty()) {
    throw ParseError(where, source + ": no data rows");
  }
  std::size_t first = 0;
  std::size_t t_col = 0;
  std::size_t v_col = 1;
  if (is_header(doc.rows.front())) {
    const CsvRow& h = doc.rows.front();
    const auto tc = find_column(h, {"t", "t_j", "tj", "time"});
    const auto vc = find_column(h, value_names);
    if (!tc || !vc) {
      throw ParseError(where, source + ": line " + std::to_string(h.line) + ": header lacks a time or value column");
    }
    t_col = *tc;
    v_col = *vc;
    first = 1;
  } else if (doc.rows.front().cells.size() == 3) {
    t_col = 1;
    v_col = 2;
  } else if (doc.rows.front().cells.size() != 2) {
    throw ParseError(where, source + ": line " + std::to_string(doc.rows.front().line) +
                                ": expected 2 or 3 columns without a header");
  }
  if (first == doc.rows.size()) {
    throw ParseError(where, source + ": header but no data rows");
  }
  const std::size_t width = doc.rows[first].cells.size();
  KernelSamples s;
  for (std::size_t r = first; r < doc.rows.size(); ++r) {
    const CsvRow& row = doc.rows[r];
    if (row.cells.size() != width || row.cells.size() <= std::max(t_col, v_col)) {
      throw ParseError(where, source + ": line " + std::to_string(row.line) + ": expected " + std::to_string(width) +
                                  " columns, found " + std::to_string(row.cells.size()));
    }
    const double t = cell_number(doc, row, t_col, where);
    const double v = cell_number(doc, row, v_col, where);
    if (!std::isfinite(t) || !std::isfinite(v)) {
      throw DomainError(where, source + ": line " + std::to_string(row.line) + ": non-finite value");
    }
    if (!s.times.empty() && !(t > s.times.back())) {
      throw DomainError(where, source + ": line " + std::to_string(row.line) + ": non-increasing time " +
                                   std::string(row.cells[t_col]));
    }
    s.times.push_back(t);
    s.values.push_back(v);
  }
  return s;
}

inline KernelSamples parse_kernel_samples(std::string_view text, const std::string& source = "<text>") {
  return parse_series(text, source, {"k", "k_j", "kj", "value", "k(t)"}, "pipeline_cli::ingest_kernel_samples");
}

inline KernelSamples ingest_kernel_samples(const std::string& path) {
  return parse_kernel_samples(read_file(path, "pipeline_cli::ingest_kernel_samples"), path);
}

/// Creep record (t, strain) at constant stress.
inline KernelSamples parse_strain_history(std::string_view text, const std::string& source = "<text>") {
  return parse_series(text, source, {"strain", "eps", "epsilon", "value"}, "pipeline_cli::ingest_strain_history");
}

inline KernelSamples ingest_strain_history(const std::string& path) {
  return parse_strain_history(read_file(path, "pipeline_cli::ingest_strain_history"), path);
}

/// Matrix layout: the first row holds the times after a corner cell, each
/// following row a strain level and its φ_t values.
inline IsochroneDataset parse_isochrones(std::string_view text, const std::string& source = "<text>") {
  constexpr const char* where = "pipeline_cli::ingest_isochrones";
  const CsvDocument doc = split_csv(text, source);
  if (doc.rows.size() < 2) {
    throw ParseError(where, source + ": need a time row and at least one strain row");
  }
  IsochroneDataset d;
  const CsvRow& head = doc.rows.front();
  for (std::size_t c = 1; c < head.cells.size(); ++c) {
    d.times.push_back(cell_number(doc, head, c, where));
  }
  for (std::size_t r = 1; r < doc.rows.size(); ++r) {
    const CsvRow& row = doc.rows[r];
    if (row.cells.size() != head.cells.size()) {
      throw ParseError(where, source + ": line " + std::to_string(row.line) + ": ragged row with " +
                                  std::to_string(row.cells.size()) + " cells, expected " +
                                  std::to_string(head.cells.size()));
    }
    d.strain_levels.push_back(cell_number(doc, row, 0, where));
    d.phi_t.emplace_back();
    for (std::size_t c = 1; c < row.cells.size(); ++c) {
      d.phi_t.back().push_back(cell_number(doc, row, c, where));
    }
  }
  validate(d, where);
  return d;
}

inline IsochroneDataset ingest_isochrones(const std::string& path) {
  return parse_isochrones(read_file(path, "pipeline_cli::ingest_isochrones"), path);
}

inline std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_series(const KernelSamples& s, std::string_view t_name, std::string_view v_name) {
  std::string out;
  out.append(t_name).append(",").append(v_name).append("\n");
  for (std::size_t j = 0; j < s.size(); ++j) {
    out += format_g17(s.times[j]) + "," + format_g17(s.values[j]) + "\n";
  }
  return out;
}

inline std::string format_isochrones(const IsochroneDataset& d) {
  std::string out = "strain";
  for (double t : d.times) out += "," + format_g17(t);
  out += "\n";
  for (std::size_t i = 0; i < d.levels(); ++i) {
    out += format_g17(d.strain_levels[i]);
    for (double v : d.phi_t[i]) out += "," + format_g17(v);
    out += "\n";
  }
  return out;
}

inline void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !out.write(contents.data(), static_cast<std::streamsize>(contents.size()))) {
    throw DomainError("pipeline_cli::write_file", "cannot write '" + path + "'");
  }
}

/// 64-bit FNV-1a, incremental.
class Fnv1a {
 public:
  Fnv1a& update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      h_ ^= c;
      h_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  std::uint64_t value() const { return h_; }
  std::string hex() const {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h_));
    return buf;
  }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace hkid::io
