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

// Okapi BM25 over token-id blocks.
//
//   score(q, b) = sum over distinct terms t of q:
//       qtf(t) * idf(t) * tf(t, b) * (k1 + 1) / (tf(t, b) + k1 * (1 - b_ + b_ * |b| / avgdl))
//   idf(t)      = ln(1 + (N - df(t) + 0.5) / (df(t) + 0.5))
//
// N, df and avgdl are computed over live (non-removed) blocks, so removing
// blocks yields exactly the scores of an index built without them. Begin-of-
// text and unknown tokens are neither indexed nor queried. Only blocks sharing
// at least one query term are returned; ties rank by ascending block id.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "nplm/error.hpp"
#include "nplm/tombstones.hpp"
#include "nplm/vocabulary.hpp"

namespace nplm {

struct Bm25Params {
  double k1 = 0.9;
  double b = 0.4;
  friend bool operator==(const Bm25Params&, const Bm25Params&) = default;
};

struct ScoredBlock {
  std::uint64_t id = 0;
  double score = 0.0;
  friend bool operator==(const ScoredBlock&, const ScoredBlock&) = default;
};

class Bm25Index {
 public:
  // Corpus statistics over live blocks; published copy-on-write.
  struct Stats {
    std::uint64_t live_blocks = 0;
    std::uint64_t total_length = 0;
    std::vector<std::uint32_t> df;  // by token id
    Tombstones removed;

    double average_length() const {
      return live_blocks ? static_cast<double>(total_length) / static_cast<double>(live_blocks) : 0.0;
    }
  };

  Bm25Index() : stats_(std::make_shared<const Stats>()) {}

  // `blocks[i]` is the token content of block id i; vocab_size bounds ids.
  Bm25Index(const std::vector<std::span<const TokenId>>& blocks, std::size_t vocab_size, Bm25Params params = {})
      : params_(params) {
    if (!(params.k1 >= 0.0) || !(params.b >= 0.0 && params.b <= 1.0)) throw InvalidArgument("invalid BM25 parameters");
    postings_.resize(vocab_size);
    lengths_.reserve(blocks.size());
    auto stats = std::make_shared<Stats>();
    stats->df.assign(vocab_size, 0);
    std::map<TokenId, std::uint32_t> tf;
    for (std::size_t id = 0; id < blocks.size(); ++id) {
      tf.clear();
      for (TokenId t : blocks[id]) {
        if (t >= vocab_size) throw InvalidArgument("block token outside vocabulary");
        if (t == kBeginOfText || t == kUnknown) continue;
        ++tf[t];
      }
      lengths_.push_back(static_cast<std::uint32_t>(blocks[id].size()));
      for (const auto& [t, f] : tf) {
        postings_[t].push_back({static_cast<std::uint32_t>(id), f});
        ++stats->df[t];
      }
      stats->total_length += blocks[id].size();
    }
    stats->live_blocks = blocks.size();
    stats_ = std::move(stats);
  }

  Bm25Index(Bm25Index&& other) noexcept
      : params_(other.params_), postings_(std::move(other.postings_)), lengths_(std::move(other.lengths_)),
        stats_(std::move(other.stats_)) {}
  Bm25Index& operator=(Bm25Index&& other) noexcept {
    params_ = other.params_;
    postings_ = std::move(other.postings_);
    lengths_ = std::move(other.lengths_);
    stats_ = std::move(other.stats_);
    return *this;
  }

  const Bm25Params& params() const noexcept { return params_; }
  std::size_t block_count() const noexcept { return lengths_.size(); }

  std::shared_ptr<const Stats> stats() const {
    std::lock_guard lock(mu_);
    return stats_;
  }

  // Removes blocks from the live statistics and from every later result.
  // Returns the number of blocks newly removed.
  std::size_t remove(std::span<const std::uint64_t> ids, const std::vector<std::span<const TokenId>>& blocks) {
    std::lock_guard lock(mu_);
    auto next = std::make_shared<Stats>(*stats_);
    std::size_t removed = 0;
    std::map<TokenId, bool> seen;
    for (auto id : ids) {
      if (id >= lengths_.size() || next->removed.contains(id)) continue;
      next->removed.insert(id);
      --next->live_blocks;
      next->total_length -= lengths_[id];
      seen.clear();
      for (TokenId t : blocks[id])
        if (t != kBeginOfText && t != kUnknown && seen.emplace(t, true).second) --next->df[t];
      ++removed;
    }
    stats_ = std::move(next);
    return removed;
  }

  std::vector<ScoredBlock> top_k(std::span<const TokenId> query, std::size_t k) const { return top_k(query, k, *stats()); }

  std::vector<ScoredBlock> top_k(std::span<const TokenId> query, std::size_t k, const Stats& stats) const {
    if (k == 0) throw InvalidArgument("k must be >= 1");
    std::map<TokenId, std::uint32_t> qtf;
    for (TokenId t : query)
      if (t < postings_.size() && t != kBeginOfText && t != kUnknown) ++qtf[t];
    if (qtf.empty() || stats.live_blocks == 0) return {};

    const double n = static_cast<double>(stats.live_blocks);
    const double avgdl = stats.average_length();
    const double k1 = params_.k1, b = params_.b;
    std::vector<double> scores(lengths_.size(), 0.0);
    std::vector<std::uint8_t> hit(lengths_.size(), 0);
    std::vector<std::uint64_t> touched;
    for (const auto& [t, q] : qtf) {
      const double df = stats.df[t];
      if (df == 0) continue;
      const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
      for (const auto& p : postings_[t]) {
        if (stats.removed.contains(p.block)) continue;
        const double tf = p.tf;
        const double norm = k1 * (1.0 - b + b * static_cast<double>(lengths_[p.block]) / avgdl);
        scores[p.block] += q * idf * tf * (k1 + 1.0) / (tf + norm);
        if (!hit[p.block]) {
          hit[p.block] = 1;
          touched.push_back(p.block);
        }
      }
    }
    std::vector<ScoredBlock> result;
    result.reserve(touched.size());
    for (auto id : touched) result.push_back({id, scores[id]});
    auto better = [](const ScoredBlock& a, const ScoredBlock& b) { return a.score > b.score || (a.score == b.score && a.id < b.id); };
    const auto keep = std::min(k, result.size());
    std::partial_sort(result.begin(), result.begin() + static_cast<std::ptrdiff_t>(keep), result.end(), better);
    result.resize(keep);
    return result;
  }

  // Restores removal state when loading a persisted store.
  void restore_removed(const Tombstones& removed, const std::vector<std::span<const TokenId>>& blocks) {
    std::vector<std::uint64_t> ids;
    for (std::uint64_t id = 0; id < lengths_.size(); ++id)
      if (removed.contains(id)) ids.push_back(id);
    remove(ids, blocks);
  }

 private:
  struct Posting {
    std::uint32_t block;
    std::uint32_t tf;
  };

  Bm25Params params_;
  std::vector<std::vector<Posting>> postings_;  // by token id, ascending block id
  std::vector<std::uint32_t> lengths_;
  mutable std::mutex mu_;
  std::shared_ptr<const Stats> stats_;
};

}  // namespace nplm
