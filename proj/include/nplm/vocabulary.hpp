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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nplm/binary_io.hpp"
#include "nplm/error.hpp"

namespace nplm {

using TokenId = std::uint32_t;

inline constexpr TokenId kBeginOfText = 0;
inline constexpr TokenId kUnknown = 1;
inline constexpr std::string_view kBeginOfTextString = "<s>";
inline constexpr std::string_view kUnknownString = "<unk>";

// Bijective token <-> id map. Ids are dense and assigned in insertion order;
// id 0 is begin-of-text and id 1 is unknown.
class Vocabulary {
 public:
  Vocabulary() {
    add(kBeginOfTextString);
    add(kUnknownString);
  }

  TokenId add(std::string_view token) {
    if (auto it = index_.find(std::string(token)); it != index_.end()) return it->second;
    if (frozen_) return kUnknown;
    const auto id = static_cast<TokenId>(tokens_.size());
    tokens_.emplace_back(token);
    index_.emplace(tokens_.back(), id);
    return id;
  }

  std::optional<TokenId> find(std::string_view token) const {
    if (auto it = index_.find(std::string(token)); it != index_.end()) return it->second;
    return std::nullopt;
  }

  TokenId lookup(std::string_view token) const { return find(token).value_or(kUnknown); }

  std::vector<TokenId> lookup(std::span<const std::string> tokens) const {
    std::vector<TokenId> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(lookup(t));
    return ids;
  }

  const std::string& token(TokenId id) const {
    if (id >= tokens_.size()) throw InvalidArgument("token id out of range: " + std::to_string(id));
    return tokens_[id];
  }

  std::size_t size() const noexcept { return tokens_.size(); }
  bool frozen() const noexcept { return frozen_; }
  void freeze() noexcept { frozen_ = true; }

  // FNV-1a over the ordered token table; two vocabularies with equal
  // fingerprints map every token to the same id.
  std::uint64_t fingerprint() const noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const auto& t : tokens_) {
      for (unsigned char c : t) h = (h ^ c) * 0x100000001B3ULL;
      h = (h ^ 0xFF) * 0x100000001B3ULL;
    }
    return h;
  }

  void save(BinaryWriter& w) const {
    w.u32(static_cast<std::uint32_t>(tokens_.size()));
    for (const auto& t : tokens_) w.str(t);
  }

  static Vocabulary load(BinaryReader& r) {
    const auto n = r.u32();
    if (n < 2) throw FormatError("vocabulary lacks reserved entries");
    Vocabulary v;
    v.tokens_.clear();
    v.index_.clear();
    for (std::uint32_t i = 0; i < n; ++i) {
      auto t = r.str();
      if (!v.index_.emplace(t, i).second) throw FormatError("duplicate vocabulary entry: " + t);
      v.tokens_.push_back(std::move(t));
    }
    if (v.tokens_[kBeginOfText] != kBeginOfTextString || v.tokens_[kUnknown] != kUnknownString)
      throw FormatError("vocabulary reserved ids are wrong");
    v.frozen_ = true;
    return v;
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  bool frozen_ = false;
};

}  // namespace nplm
