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
#include <span>
#include <vector>

#include "nplm/binary_io.hpp"
#include "nplm/topk.hpp"

namespace nplm {

// Immutable-after-publication bitmap of deleted ids. Writers copy, modify and
// publish a new instance; readers keep whatever snapshot they started with.
class Tombstones {
 public:
  bool contains(VectorId id) const noexcept {
    const auto w = id >> 6;
    return w < words_.size() && ((words_[w] >> (id & 63)) & 1U);
  }

  std::size_t count() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }

  void insert(VectorId id) {
    const auto w = id >> 6;
    if (w >= words_.size()) words_.resize(w + 1, 0);
    const std::uint64_t bit = std::uint64_t{1} << (id & 63);
    if (!(words_[w] & bit)) {
      words_[w] |= bit;
      ++count_;
    }
  }

  // Layout: u64 #words, then the words (bit i of word w is id 64*w + i).
  void save(BinaryWriter& w) const {
    w.u64(words_.size());
    w.u64s(words_);
  }

  static Tombstones load(BinaryReader& r) {
    Tombstones t;
    t.words_.resize(r.count(std::uint64_t{1} << 34, "tombstone word"));
    r.u64s(t.words_);
    for (auto word : t.words_) t.count_ += static_cast<std::size_t>(__builtin_popcountll(word));
    return t;
  }

  friend bool operator==(const Tombstones& a, const Tombstones& b) {
    const auto n = std::max(a.words_.size(), b.words_.size());
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = i < a.words_.size() ? a.words_[i] : 0;
      const auto y = i < b.words_.size() ? b.words_[i] : 0;
      if (x != y) return false;
    }
    return true;
  }

 private:
  std::vector<std::uint64_t> words_;
  std::size_t count_ = 0;
};

}  // namespace nplm
