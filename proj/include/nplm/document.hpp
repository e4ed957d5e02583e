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

#include <algorithm>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "nplm/error.hpp"
#include "nplm/license.hpp"

namespace nplm {

// Half-open code point interval.
struct PiiSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const PiiSpan&, const PiiSpan&) = default;
};

struct Document {
  std::string id;
  std::string text;
  std::string domain;
  std::string license_tag;
  LicenseClass license_class = LicenseClass::kOther;
  std::vector<PiiSpan> pii_spans;

  static Document make(std::string id, std::string text, std::string domain = "default", std::string license = "") {
    Document d{std::move(id), std::move(text), std::move(domain), std::move(license), LicenseClass::kOther, {}};
    d.license_class = classify_license(d.license_tag);
    return d;
  }
};

inline std::size_t code_point_count(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

// Sorts nothing: spans must already be sorted, disjoint and in bounds.
inline void validate_pii_spans(const Document& doc) {
  const std::size_t length = code_point_count(doc.text);
  std::size_t prev_end = 0;
  for (const auto& s : doc.pii_spans) {
    if (s.begin >= s.end || s.end > length || s.begin < prev_end)
      throw InvalidArgument("document " + doc.id + ": pii_spans must be sorted, non-overlapping and within the text");
    prev_end = s.end;
  }
}

// One JSON object per line: {"id", "text", "domain", "license",
// optional "pii_spans": [[start, end], ...]}.
inline Document document_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("id") || !j.contains("text"))
    throw InvalidArgument("corpus record needs at least \"id\" and \"text\"");
  Document d;
  d.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
  d.text = j.at("text").get<std::string>();
  d.domain = j.value("domain", std::string("default"));
  d.license_tag = j.value("license", std::string());
  d.license_class = classify_license(d.license_tag);
  if (j.contains("pii_spans")) {
    for (const auto& span : j.at("pii_spans")) {
      if (!span.is_array() || span.size() != 2) throw InvalidArgument("pii_spans entries must be [start, end]");
      d.pii_spans.push_back({span[0].get<std::size_t>(), span[1].get<std::size_t>()});
    }
  }
  validate_pii_spans(d);
  return d;
}

inline nlohmann::json document_to_json(const Document& d) {
  nlohmann::json j{{"id", d.id}, {"text", d.text}, {"domain", d.domain}, {"license", d.license_tag},
                   {"license_class", std::string(to_string(d.license_class))}};
  if (!d.pii_spans.empty()) {
    auto spans = nlohmann::json::array();
    for (const auto& s : d.pii_spans) spans.push_back({s.begin, s.end});
    j["pii_spans"] = std::move(spans);
  }
  return j;
}

inline std::vector<Document> read_jsonl(std::istream& in, const std::string& name = "<stream>") {
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      docs.push_back(document_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(name + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(name + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return docs;
}

inline std::vector<Document> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus: " + path);
  return read_jsonl(in, path);
}

inline void write_jsonl(std::ostream& out, const std::vector<Document>& docs) {
  for (const auto& d : docs) out << document_to_json(d).dump() << '\n';
}

inline void write_jsonl(const std::string& path, const std::vector<Document>& docs) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write corpus: " + path);
  write_jsonl(out, docs);
}

}  // namespace nplm
