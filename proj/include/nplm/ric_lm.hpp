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

// Retrieval-in-context LM: BM25-retrieved blocks are prepended to the
// context of the parametric model.
//
//   basic        P_LM(y | b1 + x)
//   ensemble     (1/k) sum_i P_LM(y | b_i + x)
//   concat       P_LM(y | b_k' + ... + b_1' + x), b_i' = first L/k tokens of b_i
//   concat_next  P_LM(y | b1' + succ(b1)' + x), b' = first L/2 tokens of b;
//                b1 alone when it ends its document
//
// With no block retrieved the model sees x alone.

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "nplm/datastore.hpp"
#include "nplm/distribution.hpp"
#include "nplm/knn_lm.hpp"

namespace nplm {

enum class RicVariant { kBasic, kEnsemble, kConcat, kConcatNext };

inline std::string_view to_string(RicVariant v) {
  switch (v) {
    case RicVariant::kBasic: return "basic";
    case RicVariant::kEnsemble: return "ensemble";
    case RicVariant::kConcat: return "concat";
    case RicVariant::kConcatNext: return "concat_next";
  }
  return "basic";
}

inline RicVariant parse_ric_variant(std::string_view s) {
  if (s == "basic") return RicVariant::kBasic;
  if (s == "ensemble" || s == "ensbl") return RicVariant::kEnsemble;
  if (s == "concat") return RicVariant::kConcat;
  if (s == "concat_next" || s == "concat-next") return RicVariant::kConcatNext;
  throw InvalidArgument("unknown RIC-LM variant: " + std::string(s));
}

struct RicConfig {
  RicVariant variant = RicVariant::kBasic;
  std::size_t k = 1;  // blocks for ensemble and concat
  std::size_t block_length = 1024;
  std::size_t stride = 512;

  void validate() const {
    if (k == 0) throw InvalidArgument("RIC-LM: k must be >= 1");
    if (block_length == 0 || stride == 0 || stride > block_length)
      throw InvalidArgument("RIC-LM: need block_length > 0 and 0 < stride <= block_length");
    if (variant == RicVariant::kConcat && block_length / k == 0) throw InvalidArgument("RIC-LM concat: k exceeds block length");
  }

  std::size_t blocks_to_retrieve() const {
    return variant == RicVariant::kEnsemble || variant == RicVariant::kConcat ? k : 1;
  }
};

// Blocks chosen for one query and the token prefixes built from them.
struct RicRetrieval {
  std::uint64_t version = 0;
  std::vector<ScoredBlock> retrieved;      // BM25 ranking
  std::vector<std::uint64_t> used_blocks;  // blocks placed in context
  std::vector<double> used_scores;
  std::vector<double> weights;             // contribution per used block
  std::vector<std::vector<TokenId>> prefixes;  // one per model call

  bool empty() const noexcept { return prefixes.empty(); }
};

class RicLM {
 public:
  RicLM(const ParametricLM& model, const Datastore& store, RicConfig cfg)
      : RicLM(model, store, cfg, store.snapshot()) {}

  RicLM(const ParametricLM& model, const Datastore& store, RicConfig cfg, StoreSnapshot snap)
      : model_(&model), store_(&store), cfg_(cfg), snap_(std::move(snap)) {
    cfg_.validate();
    if (model.vocab_size() != store.vocabulary().size())
      throw InvalidArgument("RIC-LM: model and store vocabularies differ in size");
    if (!store.has_block_store()) throw StateError("RIC-LM needs a block store");
  }

  const RicConfig& config() const noexcept { return cfg_; }
  const StoreSnapshot& snapshot() const noexcept { return snap_; }

  RicRetrieval retrieve(std::span<const TokenId> query) const {
    RicRetrieval r;
    r.version = snap_.version;
    if (query.empty()) return r;
    r.retrieved = store_->retrieve_blocks(query, cfg_.blocks_to_retrieve(), snap_).blocks;
    if (r.retrieved.empty()) return r;
    auto first = [&](std::uint64_t id, std::size_t n) {
      const auto t = store_->block_tokens(id);
      return t.first(std::min(n, t.size()));
    };
    auto use = [&](std::uint64_t id, double score) {
      r.used_blocks.push_back(id);
      r.used_scores.push_back(score);
    };
    switch (cfg_.variant) {
      case RicVariant::kBasic: {
        use(r.retrieved[0].id, r.retrieved[0].score);
        const auto t = store_->block_tokens(r.retrieved[0].id);
        r.prefixes.emplace_back(t.begin(), t.end());
        break;
      }
      case RicVariant::kEnsemble:
        for (const auto& b : r.retrieved) {
          use(b.id, b.score);
          const auto t = store_->block_tokens(b.id);
          r.prefixes.emplace_back(t.begin(), t.end());
        }
        break;
      case RicVariant::kConcat: {
        std::vector<TokenId> p;
        for (auto it = r.retrieved.rbegin(); it != r.retrieved.rend(); ++it) {
          const auto t = first(it->id, cfg_.block_length / cfg_.k);
          p.insert(p.end(), t.begin(), t.end());
        }
        for (const auto& b : r.retrieved) use(b.id, b.score);
        r.prefixes.push_back(std::move(p));
        break;
      }
      case RicVariant::kConcatNext: {
        const auto top = r.retrieved[0];
        const auto half = std::max<std::size_t>(cfg_.block_length / 2, 1);
        use(top.id, top.score);
        auto t = first(top.id, half);
        std::vector<TokenId> p(t.begin(), t.end());
        if (const auto succ = store_->block(top.id).successor) {
          use(*succ, 0.0);
          t = first(*succ, half);
          p.insert(p.end(), t.begin(), t.end());
        }
        r.prefixes.push_back(std::move(p));
        break;
      }
    }
    r.weights.assign(r.used_blocks.size(), 1.0 / static_cast<double>(r.used_blocks.size()));
    return r;
  }

  void predict(const RicRetrieval& r, std::span<const TokenId> context, std::span<double> out) const {
    if (r.empty()) {
      model_->predict(context, out);
      return;
    }
    if (r.prefixes.size() == 1) {
      model_->predict(joined(r.prefixes[0], context), out);
      return;
    }
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> p(out.size());
    for (const auto& prefix : r.prefixes) {
      model_->predict(joined(prefix, context), p);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += p[i];
    }
    const double inv = 1.0 / static_cast<double>(r.prefixes.size());
    for (auto& x : out) x *= inv;
  }

  // Retrieves with the context itself as the query.
  ScoredPrediction next(std::span<const TokenId> context, const AttributionOptions& opts = {}) const {
    const auto r = retrieve(context);
    std::vector<double> p(model_->vocab_size());
    predict(r, context, p);
    return {NextTokenDistribution(std::move(p)), attribute(r, opts)};
  }

  AttributionRecord attribute(const RicRetrieval& r, const AttributionOptions& opts = {}) const {
    return store_->attribute_blocks(r.used_blocks, r.used_scores, r.weights, opts);
  }

 private:
  // prefix + context, keeping only what the model can see.
  std::vector<TokenId> joined(const std::vector<TokenId>& prefix, std::span<const TokenId> context) const {
    const auto keep = model_->context_length();
    std::vector<TokenId> out;
    if (keep > 0 && context.size() >= keep) {
      out.assign(context.end() - static_cast<std::ptrdiff_t>(keep), context.end());
      return out;
    }
    const auto from_prefix = keep > 0 ? std::min(prefix.size(), keep - context.size()) : prefix.size();
    out.reserve(from_prefix + context.size());
    out.insert(out.end(), prefix.end() - static_cast<std::ptrdiff_t>(from_prefix), prefix.end());
    out.insert(out.end(), context.begin(), context.end());
    return out;
  }

  const ParametricLM* model_;
  const Datastore* store_;
  RicConfig cfg_;
  StoreSnapshot snap_;
};

inline ScoredPrediction ric_next(std::span<const TokenId> context, const ParametricLM& model, const Datastore& store,
                                 const RicConfig& cfg, const AttributionOptions& opts = {}) {
  return RicLM(model, store, cfg).next(context, opts);
}

}  // namespace nplm
