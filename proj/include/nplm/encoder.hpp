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

// Context encoder: a decayed bag of hashed token embeddings.
//
//   v = normalize( sum_{i=0}^{L-1} decay^i * e(token[last - i]) ),  L = min(|context|, max_context)
//
// e(t) is a unit Gaussian direction drawn from a generator seeded by
// (seed, t). Contexts that agree on their last `max_context` tokens encode to
// bit-identical vectors. An empty context encodes as begin-of-text alone.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "nplm/binary_io.hpp"
#include "nplm/error.hpp"
#include "nplm/random.hpp"
#include "nplm/vocabulary.hpp"

namespace nplm {

struct EncoderConfig {
  std::size_t dim = 64;
  double decay = 0.7;
  std::uint64_t seed = 0;
  std::size_t max_context = 32;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

class ContextEncoder {
 public:
  // Embeddings for ids below `cached_tokens` are precomputed.
  explicit ContextEncoder(EncoderConfig cfg = {}, std::size_t cached_tokens = 0) : cfg_(cfg) {
    if (cfg_.dim == 0) throw InvalidArgument("encoder dimension must be positive");
    if (!(cfg_.decay > 0.0 && cfg_.decay < 1.0)) throw InvalidArgument("encoder decay must be in (0, 1)");
    if (cfg_.max_context == 0) throw InvalidArgument("encoder max_context must be positive");
    table_.resize(cached_tokens * cfg_.dim);
    for (std::size_t t = 0; t < cached_tokens; ++t)
      fill_embedding(static_cast<TokenId>(t), std::span<double>(table_).subspan(t * cfg_.dim, cfg_.dim));
  }

  const EncoderConfig& config() const noexcept { return cfg_; }
  std::size_t dim() const noexcept { return cfg_.dim; }

  std::vector<double> embedding(TokenId token) const {
    std::vector<double> e(cfg_.dim);
    fill_embedding(token, e);
    return e;
  }

  void encode(std::span<const TokenId> context, std::span<float> out) const {
    if (out.size() != cfg_.dim) throw InvalidArgument("encode: output dimension mismatch");
    static constexpr TokenId kBos[] = {kBeginOfText};
    if (context.empty()) context = kBos;
    const std::size_t length = std::min(context.size(), cfg_.max_context);
    std::vector<double> acc(cfg_.dim, 0.0);
    std::vector<double> scratch;
    double weight = 1.0;
    for (std::size_t i = 0; i < length; ++i) {
      const TokenId t = context[context.size() - 1 - i];
      const double* e;
      if (static_cast<std::size_t>(t) * cfg_.dim < table_.size()) {
        e = table_.data() + static_cast<std::size_t>(t) * cfg_.dim;
      } else {
        scratch.resize(cfg_.dim);
        fill_embedding(t, scratch);
        e = scratch.data();
      }
      for (std::size_t j = 0; j < cfg_.dim; ++j) acc[j] += weight * e[j];
      weight *= cfg_.decay;
    }
    double norm = 0.0;
    for (double x : acc) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      acc = embedding(context.back());
      norm = 1.0;
    }
    for (std::size_t j = 0; j < cfg_.dim; ++j) out[j] = static_cast<float>(acc[j] / norm);
  }

  std::vector<float> encode(std::span<const TokenId> context) const {
    std::vector<float> v(cfg_.dim);
    encode(context, v);
    return v;
  }

  void save(BinaryWriter& w) const {
    w.u64(cfg_.dim);
    w.f64(cfg_.decay);
    w.u64(cfg_.seed);
    w.u64(cfg_.max_context);
  }

  static EncoderConfig load_config(BinaryReader& r) {
    EncoderConfig c;
    c.dim = r.u64();
    c.decay = r.f64();
    c.seed = r.u64();
    c.max_context = r.u64();
    return c;
  }

 private:
  void fill_embedding(TokenId token, std::span<double> out) const {
    Rng rng(mix64(cfg_.seed * 0xD1B54A32D192ED03ULL ^ mix64(token)));
    double norm = 0.0;
    for (auto& x : out) {
      x = rng.normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : out) x /= norm;
  }

  EncoderConfig cfg_;
  std::vector<double> table_;
};

}  // namespace nplm
