// Copyright 2026 The nplm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// CSV reports. A report starts with "# key=value" comment lines (always
// including the run seed), then a header row, then data rows. Reals are
// written with 17 significant digits so parsing a report reproduces the
// written values exactly. Fields containing commas, quotes or newlines are
// quoted.

#include <cstdio>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nplm/error.hpp"

namespace nplm {

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_real(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw FormatError("not a number: '" + s + "'");
  return v;
}

inline std::uint64_t parse_count(const std::string& s) {
  char* end = nullptr;
  const auto v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || s[0] == '-') throw FormatError("not a count: '" + s + "'");
  return v;
}

struct CsvTable {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::string> meta_value(const std::string& key) const {
    for (const auto& [k, v] : meta)
      if (k == key) return v;
    return std::nullopt;
  }

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw FormatError("report has no column " + name);
  }
};

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q.push_back('"');
    q.push_back(c);
  }
  q.push_back('"');
  return q;
}

inline void write_csv(std::ostream& out, const CsvTable& t) {
  for (const auto& [k, v] : t.meta) out << "# " << k << '=' << v << '\n';
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << csv_field(fields[i]);
    out << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
}

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t i = 0;
  // Parses one record starting at i; returns false at end of input.
  auto record = [&](std::vector<std::string>& fields) {
    fields.clear();
    if (i >= text.size()) return false;
    std::string f;
    bool quoted = false;
    for (; i < text.size(); ++i) {
      const char c = text[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < text.size() && text[i + 1] == '"') {
            f.push_back('"');
            ++i;
          } else {
            quoted = false;
          }
        } else {
          f.push_back(c);
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(f));
        f.clear();
      } else if (c == '\n') {
        ++i;
        break;
      } else if (c != '\r') {
        f.push_back(c);
      }
    }
    if (quoted) throw FormatError("unterminated quoted CSV field");
    fields.push_back(std::move(f));
    return true;
  };
  while (i < text.size() && text[i] == '#') {
    const auto nl = text.find('\n', i);
    std::string line = text.substr(i + 1, nl == std::string::npos ? std::string::npos : nl - i - 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] == ' ') line.erase(0, 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos) t.meta.emplace_back(line, "");
    else t.meta.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    i = nl == std::string::npos ? text.size() : nl + 1;
  }
  if (!record(t.header)) throw FormatError("report has no header row");
  std::vector<std::string> fields;
  while (record(fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != t.header.size()) throw FormatError("report row has wrong number of fields");
    t.rows.push_back(fields);
  }
  return t;
}

// One perplexity evaluation. tokens_per_second is left empty unless timing
// was requested, so that repeated runs produce identical bytes.
struct EvalRow {
  std::string domain;
  std::string method;
  std::uint64_t datastore_tokens = 0;
  double perplexity = 0.0;
  std::optional<double> tokens_per_second;
  friend bool operator==(const EvalRow&, const EvalRow&) = default;
};

struct SweepRow {
  double fraction = 0.0;
  std::string method;
  std::uint64_t datastore_tokens = 0;
  double perplexity = 0.0;
  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct BenchRow {
  std::string method;
  std::uint64_t datastore_tokens = 0;
  std::uint64_t probe = 0;  // 0 when not applicable
  double tokens_per_second = 0.0;
  double perplexity = 0.0;
  friend bool operator==(const BenchRow&, const BenchRow&) = default;
};

struct OptOutRow {
  std::string method;
  std::uint64_t documents_removed = 0;
  double before = 0.0;
  double after = 0.0;
  double parametric = 0.0;
  friend bool operator==(const OptOutRow&, const OptOutRow&) = default;
};

inline CsvTable make_report(std::uint64_t seed, std::vector<std::string> header) {
  CsvTable t;
  t.meta.emplace_back("seed", std::to_string(seed));
  t.header = std::move(header);
  return t;
}

inline CsvTable eval_table(std::uint64_t seed, const std::vector<EvalRow>& rows) {
  auto t = make_report(seed, {"domain", "method", "datastore_tokens", "perplexity", "tokens_per_second"});
  for (const auto& r : rows)
    t.rows.push_back({r.domain, r.method, std::to_string(r.datastore_tokens), format_real(r.perplexity),
                      r.tokens_per_second ? format_real(*r.tokens_per_second) : ""});
  return t;
}

inline std::vector<EvalRow> eval_rows(const CsvTable& t) {
  const auto d = t.column("domain"), m = t.column("method"), n = t.column("datastore_tokens"),
             p = t.column("perplexity"), s = t.column("tokens_per_second");
  std::vector<EvalRow> rows;
  for (const auto& r : t.rows)
    rows.push_back({r[d], r[m], parse_count(r[n]), parse_real(r[p]),
                    r[s].empty() ? std::nullopt : std::optional<double>(parse_real(r[s]))});
  return rows;
}

inline CsvTable sweep_table(std::uint64_t seed, const std::vector<SweepRow>& rows) {
  auto t = make_report(seed, {"fraction", "method", "datastore_tokens", "perplexity"});
  for (const auto& r : rows)
    t.rows.push_back({format_real(r.fraction), r.method, std::to_string(r.datastore_tokens), format_real(r.perplexity)});
  return t;
}

inline std::vector<SweepRow> sweep_rows(const CsvTable& t) {
  const auto f = t.column("fraction"), m = t.column("method"), n = t.column("datastore_tokens"),
             p = t.column("perplexity");
  std::vector<SweepRow> rows;
  for (const auto& r : t.rows) rows.push_back({parse_real(r[f]), r[m], parse_count(r[n]), parse_real(r[p])});
  return rows;
}

inline CsvTable bench_table(std::uint64_t seed, const std::vector<BenchRow>& rows) {
  auto t = make_report(seed, {"method", "datastore_tokens", "probe", "tokens_per_second", "perplexity"});
  for (const auto& r : rows)
    t.rows.push_back({r.method, std::to_string(r.datastore_tokens), std::to_string(r.probe),
                      format_real(r.tokens_per_second), format_real(r.perplexity)});
  return t;
}

inline std::vector<BenchRow> bench_rows(const CsvTable& t) {
  const auto m = t.column("method"), n = t.column("datastore_tokens"), pr = t.column("probe"),
             s = t.column("tokens_per_second"), p = t.column("perplexity");
  std::vector<BenchRow> rows;
  for (const auto& r : t.rows)
    rows.push_back({r[m], parse_count(r[n]), parse_count(r[pr]), parse_real(r[s]), parse_real(r[p])});
  return rows;
}

inline CsvTable opt_out_table(std::uint64_t seed, const std::vector<OptOutRow>& rows) {
  auto t = make_report(seed, {"method", "documents_removed", "before", "after", "parametric"});
  for (const auto& r : rows)
    t.rows.push_back({r.method, std::to_string(r.documents_removed), format_real(r.before), format_real(r.after),
                      format_real(r.parametric)});
  return t;
}

inline std::vector<OptOutRow> opt_out_rows(const CsvTable& t) {
  const auto m = t.column("method"), n = t.column("documents_removed"), b = t.column("before"),
             a = t.column("after"), p = t.column("parametric");
  std::vector<OptOutRow> rows;
  for (const auto& r : t.rows)
    rows.push_back({r[m], parse_count(r[n]), parse_real(r[b]), parse_real(r[a]), parse_real(r[p])});
  return rows;
}

inline std::string to_csv_string(const CsvTable& t) {
  std::ostringstream out;
  write_csv(out, t);
  return out.str();
}

}  // namespace nplm
