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

// Reference parametric model: interpolated Kneser-Ney n-gram mixed with a
// context-cache unigram.
//
//   P(y | x) = (1 - lambda_c) * KN(y | last N-1 tokens of x)
//            + lambda_c * (count_W(y) + 1) / (W + |V|)
//
// where count_W counts y among the last `cache_window` context tokens
// (begin-of-text markers excluded) and W is the number of counted tokens.
//
// KN recursion, for order n with context h (n-1 tokens) and discount d:
//
//   KN_n(w | h) = max(c(h w) - d, 0) / c(h .) + d * T(h) / c(h .) * KN_{n-1}(w | h')
//
// c is the raw count at the highest order and the continuation count
// N1+(. h w) below it; T(h) is the number of distinct followers of h; h' drops
// the oldest token. KN_0 is uniform over the vocabulary. Contexts never seen
// at order n fall through to order n-1.

#include <algorithm>
#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nplm/binary_io.hpp"
#include "nplm/distribution.hpp"
#include "nplm/error.hpp"
#include "nplm/vocabulary.hpp"

namespace nplm {

inline constexpr std::size_t kMaxNgramOrder = 8;

struct NgramKey {
  std::array<TokenId, kMaxNgramOrder> ids{};
  std::uint8_t len = 0;

  NgramKey() = default;
  explicit NgramKey(std::span<const TokenId> tokens) : len(static_cast<std::uint8_t>(tokens.size())) {
    std::copy(tokens.begin(), tokens.end(), ids.begin());
  }
  std::span<const TokenId> view() const { return {ids.data(), len}; }

  friend bool operator==(const NgramKey& a, const NgramKey& b) { return a.len == b.len && a.ids == b.ids; }
  friend bool operator<(const NgramKey& a, const NgramKey& b) {
    return std::lexicographical_compare(a.ids.begin(), a.ids.begin() + a.len, b.ids.begin(), b.ids.begin() + b.len);
  }
};

struct NgramKeyHash {
  std::size_t operator()(const NgramKey& k) const noexcept {
    std::uint64_t h = k.len;
    for (std::size_t i = 0; i < k.len; ++i) h = mix64(h ^ k.ids[i]);
    return static_cast<std::size_t>(h);
  }
};

struct KneserNeyOptions {
  std::size_t order = 4;
  double discount = 0.75;
  double cache_weight = 0.2;
  std::size_t cache_window = 1024;
};

class KneserNeyCacheLM final : public ParametricLM {
 public:
  struct ContextStats {
    std::uint64_t total = 0;
    std::vector<std::pair<TokenId, std::uint32_t>> followers;  // sorted by id
  };
  using Table = std::unordered_map<NgramKey, ContextStats, NgramKeyHash>;

  static constexpr std::string_view kMagic = "SILM";
  static constexpr std::uint32_t kFormatVersion = 1;

  static KneserNeyCacheLM train(std::span<const TokenId> stream, Vocabulary vocab, const KneserNeyOptions& opts) {
    validate(opts);
    if (stream.empty()) throw InvalidArgument("train_kn: empty token stream");
    if (stream.size() <= opts.order) throw InvalidArgument("train_kn: stream must be longer than the model order");
    vocab.freeze();
    for (TokenId t : stream)
      if (t >= vocab.size()) throw InvalidArgument("train_kn: token id outside vocabulary");

    const std::size_t n_max = opts.order;
    // raw[n-1]: n-gram -> occurrence count
    std::vector<std::unordered_map<NgramKey, std::uint32_t, NgramKeyHash>> raw(n_max);
    for (std::size_t pos = 0; pos < stream.size(); ++pos) {
      for (std::size_t n = 1; n <= n_max && pos + n <= stream.size(); ++n) {
        ++raw[n - 1][NgramKey(stream.subspan(pos, n))];
      }
    }

    auto tables = std::make_shared<std::vector<Table>>(n_max);
    auto add_follower = [](Table& table, std::span<const TokenId> ngram, std::uint32_t count) {
      auto& stats = table[NgramKey(ngram.first(ngram.size() - 1))];
      stats.total += count;
      stats.followers.emplace_back(ngram.back(), count);
    };
    for (const auto& [gram, count] : raw[n_max - 1]) add_follower((*tables)[n_max - 1], gram.view(), count);
    for (std::size_t n = n_max - 1; n >= 1; --n) {
      std::unordered_map<NgramKey, std::uint32_t, NgramKeyHash> continuation;
      for (const auto& [gram, count] : raw[n]) ++continuation[NgramKey(gram.view().subspan(1))];
      for (const auto& [gram, count] : continuation) add_follower((*tables)[n - 1], gram.view(), count);
    }
    for (auto& table : *tables)
      for (auto& [key, stats] : table) std::sort(stats.followers.begin(), stats.followers.end());

    return KneserNeyCacheLM(std::move(vocab), opts, std::move(tables));
  }

  std::size_t vocab_size() const override { return vocab_.size(); }
  std::size_t context_length() const override { return std::max(opts_.order - 1, opts_.cache_window); }

  void predict(std::span<const TokenId> context, std::span<double> out) const override {
    predict_kn(context, out);
    const double lc = opts_.cache_weight;
    if (lc <= 0.0) return;
    const std::size_t window = std::min(opts_.cache_window, context.size());
    const auto recent = context.last(window);
    std::size_t counted = 0;
    for (TokenId t : recent) counted += (t != kBeginOfText);
    const double unit = lc / static_cast<double>(counted + out.size());
    for (auto& p : out) p = (1.0 - lc) * p + unit;
    for (TokenId t : recent) {
      if (t == kBeginOfText) continue;
      out[t < out.size() ? t : kUnknown] += unit;
    }
  }

  // Pure Kneser-Ney prediction, ignoring the cache term.
  void predict_kn(std::span<const TokenId> context, std::span<double> out) const {
    if (out.size() != vocab_.size()) throw InvalidArgument("predict: output size does not match vocabulary");
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
    const std::size_t top = std::min(opts_.order, context.size() + 1);
    const double d = opts_.discount;
    NgramKey key;
    for (std::size_t n = 1; n <= top; ++n) {
      const auto history = context.last(n - 1);
      key.len = static_cast<std::uint8_t>(n - 1);
      for (std::size_t i = 0; i < history.size(); ++i)
        key.ids[i] = history[i] < out.size() ? history[i] : kUnknown;
      const auto& table = (*tables_)[n - 1];
      const auto it = table.find(key);
      if (it == table.end() || it->second.total == 0) continue;
      const auto& stats = it->second;
      const double total = static_cast<double>(stats.total);
      const double backoff = d * static_cast<double>(stats.followers.size()) / total;
      for (auto& p : out) p *= backoff;
      for (const auto& [w, c] : stats.followers) out[w] += std::max(static_cast<double>(c) - d, 0.0) / total;
    }
  }

  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  const KneserNeyOptions& options() const noexcept { return opts_; }
  std::size_t order() const noexcept { return opts_.order; }
  const Table& table(std::size_t order) const { return tables_->at(order - 1); }

  // Same counts, different cache mixing. Count tables are shared.
  KneserNeyCacheLM with_cache(double cache_weight, std::size_t cache_window) const {
    auto opts = opts_;
    opts.cache_weight = cache_weight;
    opts.cache_window = cache_window;
    validate(opts);
    return KneserNeyCacheLM(vocab_, opts, tables_);
  }

  // Layout (little-endian):
  //   "SILM" u32 version u32 N f64 d f64 cache_weight u64 cache_window
  //   u32 |V| then |V| x (u32 len, bytes)
  //   for n = 1..N: u64 #contexts, then per context in lexicographic id order:
  //     (n-1) x u32 ids, u64 total, u32 #followers, #followers x (u32 id, u32 count)
  void save(std::ostream& out) const {
    BinaryWriter w(out);
    w.magic(kMagic);
    w.u32(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(opts_.order));
    w.f64(opts_.discount);
    w.f64(opts_.cache_weight);
    w.u64(opts_.cache_window);
    vocab_.save(w);
    for (std::size_t n = 1; n <= opts_.order; ++n) {
      const auto& table = (*tables_)[n - 1];
      std::vector<const Table::value_type*> entries;
      entries.reserve(table.size());
      for (const auto& e : table) entries.push_back(&e);
      std::sort(entries.begin(), entries.end(), [](auto* a, auto* b) { return a->first < b->first; });
      w.u64(entries.size());
      for (const auto* e : entries) {
        w.u32s(e->first.view());
        w.u64(e->second.total);
        w.u32(static_cast<std::uint32_t>(e->second.followers.size()));
        for (const auto& [id, count] : e->second.followers) {
          w.u32(id);
          w.u32(count);
        }
      }
    }
    w.check();
  }

  void save(const std::string& path) const {
    auto out = open_output(path);
    save(out);
  }

  static KneserNeyCacheLM load(std::istream& in) {
    BinaryReader r(in);
    r.expect_magic(kMagic);
    if (r.u32() != kFormatVersion) throw FormatError("unsupported model format version");
    KneserNeyOptions opts;
    opts.order = r.u32();
    opts.discount = r.f64();
    opts.cache_weight = r.f64();
    opts.cache_window = r.u64();
    validate(opts);
    auto vocab = Vocabulary::load(r);
    auto tables = std::make_shared<std::vector<Table>>(opts.order);
    for (std::size_t n = 1; n <= opts.order; ++n) {
      const auto count = r.count(std::uint64_t{1} << 40, "context");
      auto& table = (*tables)[n - 1];
      table.reserve(count);
      for (std::uint64_t i = 0; i < count; ++i) {
        NgramKey key;
        key.len = static_cast<std::uint8_t>(n - 1);
        r.u32s(std::span<TokenId>(key.ids.data(), n - 1));
        ContextStats stats;
        stats.total = r.u64();
        const auto followers = r.u32();
        stats.followers.resize(followers);
        for (auto& [id, c] : stats.followers) {
          id = r.u32();
          c = r.u32();
          if (id >= vocab.size()) throw FormatError("follower id outside vocabulary");
        }
        table.emplace(key, std::move(stats));
      }
    }
    return KneserNeyCacheLM(std::move(vocab), opts, std::move(tables));
  }

  static KneserNeyCacheLM load(const std::string& path) {
    auto in = open_input(path);
    return load(in);
  }

 private:
  KneserNeyCacheLM(Vocabulary vocab, KneserNeyOptions opts, std::shared_ptr<const std::vector<Table>> tables)
      : vocab_(std::move(vocab)), opts_(opts), tables_(std::move(tables)) {}

  static void validate(const KneserNeyOptions& o) {
    if (o.order < 1 || o.order > kMaxNgramOrder) throw InvalidArgument("model order must be in [1, 8]");
    if (!(o.discount > 0.0 && o.discount < 1.0)) throw InvalidArgument("discount must be in (0, 1)");
    if (!(o.cache_weight >= 0.0 && o.cache_weight < 1.0)) throw InvalidArgument("cache weight must be in [0, 1)");
  }

  Vocabulary vocab_;
  KneserNeyOptions opts_;
  std::shared_ptr<const std::vector<Table>> tables_;
};

// Builds the vocabulary from `stream` (in first-occurrence order) and trains.
// The literal "<s>" maps to begin-of-text.
inline KneserNeyCacheLM train_kn(std::span<const std::string> stream, const KneserNeyOptions& opts = {}) {
  Vocabulary vocab;
  std::vector<TokenId> ids;
  ids.reserve(stream.size());
  for (const auto& t : stream) ids.push_back(vocab.add(t));
  return KneserNeyCacheLM::train(ids, std::move(vocab), opts);
}

}  // namespace nplm
