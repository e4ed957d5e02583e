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

// License permissiveness taxonomy.
//
// Tags are normalized (trimmed, ASCII-lowercased, runs of spaces/underscores
// turned into '-') and then matched against this table:
//
//   PD    public-domain, publicdomain, pd, cc0, cc0-1.0, cc-zero, pddl,
//         cc-pdm, cc-pdm-1.0, pdm
//   SW    mit, isc, and any tag starting with "apache" or "bsd"
//   BY    any tag starting with "cc-by" that contains neither "-nc" nor "-nd"
//         (so CC-BY and CC-BY-SA of every version)
//   OTHER everything else, including the empty tag
//
// Tags spelled "cc by" / "cc_by" normalize to "cc-by".

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace nplm {

enum class LicenseClass : std::uint8_t { kPublicDomain = 0, kSoftware = 1, kAttribution = 2, kOther = 3 };

inline constexpr std::array<LicenseClass, 4> kAllLicenseClasses = {
    LicenseClass::kPublicDomain, LicenseClass::kSoftware, LicenseClass::kAttribution, LicenseClass::kOther};

inline std::string_view to_string(LicenseClass c) {
  switch (c) {
    case LicenseClass::kPublicDomain: return "PD";
    case LicenseClass::kSoftware: return "SW";
    case LicenseClass::kAttribution: return "BY";
    case LicenseClass::kOther: return "OTHER";
  }
  return "OTHER";
}

inline std::optional<LicenseClass> parse_license_class(std::string_view s) {
  std::string up(s);
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (auto c : kAllLicenseClasses)
    if (to_string(c) == up) return c;
  return std::nullopt;
}

inline std::string normalize_license_tag(std::string_view tag) {
  std::string out;
  bool pending_sep = false;
  for (unsigned char c : tag) {
    if (c == ' ' || c == '_' || c == '\t' || c == '\n' || c == '\r') {
      pending_sep = !out.empty();
      continue;
    }
    if (pending_sep) {
      if (out.back() != '-' && c != '-') out.push_back('-');
      pending_sep = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

inline LicenseClass classify_license(std::string_view license_tag) {
  const std::string t = normalize_license_tag(license_tag);
  if (t.empty()) return LicenseClass::kOther;
  static constexpr std::array<std::string_view, 10> kPublicDomain = {
      "public-domain", "publicdomain", "pd", "cc0", "cc0-1.0", "cc-zero", "pddl", "cc-pdm", "cc-pdm-1.0", "pdm"};
  if (std::find(kPublicDomain.begin(), kPublicDomain.end(), t) != kPublicDomain.end()) return LicenseClass::kPublicDomain;
  if (t == "mit" || t == "isc" || t.starts_with("apache") || t.starts_with("bsd")) return LicenseClass::kSoftware;
  if (t.starts_with("cc-by") && t.find("-nc") == std::string::npos && t.find("-nd") == std::string::npos)
    return LicenseClass::kAttribution;
  return LicenseClass::kOther;
}

}  // namespace nplm
