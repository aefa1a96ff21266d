#pragma once

//! \file report.hpp
//! \brief Structured run report with a key-value text form and a JSON form.
//!
//! A report is an ordered header of key-value entries followed by named
//! sections. Each section holds its own entries and any number of tables.
//! Doubles are rounded to 9 significant digits when they enter the report, so
//! both renderings reproduce the stored values exactly and parse back equal.
//!
//! Text layout:
//!
//!     tool_version = "0.1.0"
//!
//!     [identify]
//!     lambda_hat = 0.8
//!
//!     [identify.samples]
//!     columns = "j", "t_j", "K_obs"
//!     row = 1, 0.0634920635, 2.2
//!
//! Strings are double-quoted with backslash escapes, doubles always carry a
//! '.', 'e', "inf" or "nan" so they stay distinct from integers, and an absent
//! value is written as null.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hkid/error.hpp"

namespace hkid {

using Value = std::variant<std::monostate, bool, std::int64_t, double, std::string>;

inline double round9(double v) {
  if (!std::isfinite(v)) return v;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

inline Value normalized(Value v) {
  if (auto* d = std::get_if<double>(&v)) *d = round9(*d);
  return v;
}

struct Entry {
  std::string key;
  Value value;
  friend bool operator==(const Entry&, const Entry&) = default;
};

struct ReportTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;

  void add_row(std::vector<Value> row) {
    if (row.size() != columns.size()) {
      throw DomainError("report::add_row", "table '" + name + "' row width " + std::to_string(row.size()) +
                                               " differs from " + std::to_string(columns.size()) + " columns");
    }
    for (Value& v : row) v = normalized(std::move(v));
    rows.push_back(std::move(row));
  }
  friend bool operator==(const ReportTable&, const ReportTable&) = default;
};

struct Section {
  std::string name;
  std::vector<Entry> entries;
  std::deque<ReportTable> tables;  // deque keeps references from table() valid

  void set(std::string key, Value v) { entries.push_back({std::move(key), normalized(std::move(v))}); }
  ReportTable& table(std::string table_name, std::vector<std::string> columns) {
    tables.push_back({std::move(table_name), std::move(columns), {}});
    return tables.back();
  }
  const Value* find(std::string_view key) const {
    for (const Entry& e : entries)
      if (e.key == key) return &e.value;
    return nullptr;
  }
  const ReportTable* find_table(std::string_view table_name) const {
    for (const ReportTable& t : tables)
      if (t.name == table_name) return &t;
    return nullptr;
  }
  friend bool operator==(const Section&, const Section&) = default;
};

struct Report {
  std::vector<Entry> header;
  std::deque<Section> sections;

  void set(std::string key, Value v) { header.push_back({std::move(key), normalized(std::move(v))}); }
  Section& section(std::string name) {
    sections.push_back({std::move(name), {}, {}});
    return sections.back();
  }
  const Value* find(std::string_view key) const {
    for (const Entry& e : header)
      if (e.key == key) return &e.value;
    return nullptr;
  }
  const Section* find_section(std::string_view name) const {
    for (const Section& s : sections)
      if (s.name == name) return &s;
    return nullptr;
  }
  friend bool operator==(const Report&, const Report&) = default;
};

// ---------------------------------------------------------------------------
// text form

namespace detail {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  std::string s = buf;
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

inline std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

inline std::string format_value(const Value& v) {
  struct Visitor {
    std::string operator()(std::monostate) const { return "null"; }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const { return format_double(d); }
    std::string operator()(const std::string& s) const { return quote(s); }
  };
  return std::visit(Visitor{}, v);
}

inline std::string join_values(const std::vector<Value>& vals) {
  std::string out;
  for (std::size_t k = 0; k < vals.size(); ++k) {
    if (k) out += ", ";
    out += format_value(vals[k]);
  }
  return out;
}

class ValueLexer {
 public:
  ValueLexer(std::string_view text, std::size_t line) : s_(text), line_(line) {}

  std::vector<Value> list() {
    std::vector<Value> out;
    skip_space();
    if (pos_ == s_.size()) return out;
    while (true) {
      out.push_back(value());
      skip_space();
      if (pos_ == s_.size()) return out;
      if (s_[pos_] != ',') fail("expected ','");
      ++pos_;
    }
  }

  Value single() {
    auto vals = list();
    if (vals.size() != 1) fail("expected exactly one value");
    return vals.front();
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("report::parse_text", "line " + std::to_string(line_) + ", column " + std::to_string(pos_ + 1) +
                                               ": " + msg);
  }

  void skip_space() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  Value value() {
    skip_space();
    if (pos_ == s_.size()) fail("missing value");
    if (s_[pos_] == '"') return string_value();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ' ' && s_[pos_] != '\t') ++pos_;
    const std::string tok(s_.substr(start, pos_ - start));
    if (tok == "null") return std::monostate{};
    if (tok == "true") return true;
    if (tok == "false") return false;
    if (tok == "nan") return std::nan("");
    if (tok == "inf") return INFINITY;
    if (tok == "-inf") return -INFINITY;
    char* end = nullptr;
    if (tok.find_first_of(".e") == std::string::npos) {
      const long long i = std::strtoll(tok.c_str(), &end, 10);
      if (end == tok.c_str() + tok.size() && !tok.empty()) return static_cast<std::int64_t>(i);
    } else {
      const double d = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() + tok.size()) return d;
    }
    pos_ = start;
    fail("unrecognised value '" + tok + "'");
  }

  Value string_value() {
    std::string out;
    ++pos_;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ == s_.size()) fail("dangling escape");
        const char e = s_[pos_++];
        c = e == 'n' ? '\n' : e == 't' ? '\t' : e;
      }
      out += c;
    }
    if (pos_ == s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  std::string_view s_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string render_text(const Report& r) {
  std::string out;
  for (const Entry& e : r.header) out += e.key + " = " + detail::format_value(e.value) + "\n";
  for (const Section& s : r.sections) {
    out += "\n[" + s.name + "]\n";
    for (const Entry& e : s.entries) out += e.key + " = " + detail::format_value(e.value) + "\n";
    for (const ReportTable& t : s.tables) {
      out += "\n[" + s.name + "." + t.name + "]\n";
      std::vector<Value> cols(t.columns.begin(), t.columns.end());
      out += "columns = " + detail::join_values(cols) + "\n";
      for (const auto& row : t.rows) out += "row = " + detail::join_values(row) + "\n";
    }
  }
  return out;
}

inline Report parse_text(std::string_view text) {
  constexpr const char* where = "report::parse_text";
  Report r;
  Section* section = nullptr;
  ReportTable* table = nullptr;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(where, "line " + std::to_string(line_no) + ": unclosed bracket");
      const std::string name(line.substr(1, line.size() - 2));
      const std::size_t dot = name.find('.');
      if (dot == std::string::npos) {
        section = &r.section(name);
        table = nullptr;
      } else {
        if (!section || name.substr(0, dot) != section->name) {
          throw ParseError(where, "line " + std::to_string(line_no) + ": table '" + name + "' outside its section");
        }
        section->tables.push_back({name.substr(dot + 1), {}, {}});
        table = &section->tables.back();
      }
      continue;
    }
    const std::size_t eq = line.find(" = ");
    if (eq == std::string_view::npos) {
      throw ParseError(where, "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(line.substr(0, eq));
    detail::ValueLexer lex(line.substr(eq + 3), line_no);
    if (table) {
      if (key == "columns") {
        for (const Value& v : lex.list()) {
          if (!std::holds_alternative<std::string>(v)) {
            throw ParseError(where, "line " + std::to_string(line_no) + ": column names must be strings");
          }
          table->columns.push_back(std::get<std::string>(v));
        }
      } else if (key == "row") {
        auto row = lex.list();
        if (row.size() != table->columns.size()) {
          throw ParseError(where, "line " + std::to_string(line_no) + ": row width differs from columns");
        }
        table->rows.push_back(std::move(row));
      } else {
        throw ParseError(where, "line " + std::to_string(line_no) + ": unexpected key '" + key + "' in table");
      }
    } else if (section) {
      section->entries.push_back({key, lex.single()});
    } else {
      r.header.push_back({key, lex.single()});
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// JSON form

using ordered_json = nlohmann::ordered_json;

namespace detail {

inline ordered_json to_json(const Value& v) {
  struct Visitor {
    ordered_json operator()(std::monostate) const { return nullptr; }
    ordered_json operator()(bool b) const { return b; }
    ordered_json operator()(std::int64_t i) const { return i; }
    ordered_json operator()(double d) const {
      // JSON has no non-finite numbers
      if (std::isnan(d)) return "NaN";
      if (std::isinf(d)) return d > 0 ? "Infinity" : "-Infinity";
      return d;
    }
    ordered_json operator()(const std::string& s) const { return s; }
  };
  return std::visit(Visitor{}, v);
}

inline Value from_json(const ordered_json& j) {
  switch (j.type()) {
    case ordered_json::value_t::null: return std::monostate{};
    case ordered_json::value_t::boolean: return j.get<bool>();
    case ordered_json::value_t::number_integer: return j.get<std::int64_t>();
    case ordered_json::value_t::number_unsigned: return static_cast<std::int64_t>(j.get<std::uint64_t>());
    case ordered_json::value_t::number_float: return j.get<double>();
    case ordered_json::value_t::string: {
      const auto s = j.get<std::string>();
      if (s == "NaN") return std::nan("");
      if (s == "Infinity") return INFINITY;
      if (s == "-Infinity") return -INFINITY;
      return s;
    }
    default: throw ParseError("report::parse_json", "unsupported value type " + std::string(j.type_name()));
  }
}

inline ordered_json entries_json(const std::vector<Entry>& entries) {
  ordered_json o = ordered_json::object();
  for (const Entry& e : entries) o[e.key] = to_json(e.value);
  return o;
}

inline std::vector<Entry> entries_from(const ordered_json& o) {
  std::vector<Entry> out;
  for (const auto& [k, v] : o.items()) out.push_back({k, from_json(v)});
  return out;
}

}  // namespace detail

inline std::string render_json(const Report& r) {
  ordered_json root;
  root["header"] = detail::entries_json(r.header);
  root["sections"] = ordered_json::array();
  for (const Section& s : r.sections) {
    ordered_json js;
    js["name"] = s.name;
    js["entries"] = detail::entries_json(s.entries);
    js["tables"] = ordered_json::array();
    for (const ReportTable& t : s.tables) {
      ordered_json jt;
      jt["name"] = t.name;
      jt["columns"] = t.columns;
      jt["rows"] = ordered_json::array();
      for (const auto& row : t.rows) {
        ordered_json jr = ordered_json::array();
        for (const Value& v : row) jr.push_back(detail::to_json(v));
        jt["rows"].push_back(std::move(jr));
      }
      js["tables"].push_back(std::move(jt));
    }
    root["sections"].push_back(std::move(js));
  }
  return root.dump(2) + "\n";
}

inline Report parse_json(std::string_view text) {
  constexpr const char* where = "report::parse_json";
  try {
    const ordered_json root = ordered_json::parse(text);
    Report r;
    r.header = detail::entries_from(root.at("header"));
    for (const auto& js : root.at("sections")) {
      Section& s = r.section(js.at("name").get<std::string>());
      s.entries = detail::entries_from(js.at("entries"));
      for (const auto& jt : js.at("tables")) {
        ReportTable t{jt.at("name").get<std::string>(), jt.at("columns").get<std::vector<std::string>>(), {}};
        for (const auto& jr : jt.at("rows")) {
          std::vector<Value> row;
          for (const auto& v : jr) row.push_back(detail::from_json(v));
          if (row.size() != t.columns.size()) throw ParseError(where, "row width differs from columns in " + t.name);
          t.rows.push_back(std::move(row));
        }
        s.tables.push_back(std::move(t));
      }
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where, e.what());
  }
}

}  // namespace hkid
