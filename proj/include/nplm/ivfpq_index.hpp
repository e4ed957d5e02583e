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

// Inverted-file index with product-quantized residuals.
//
// Training: seeded k-means for `nlist` coarse centroids, then per-subspace
// k-means (2^bits codewords each) over residuals x - c(x). Vectors are stored
// only as (id, m codes) in the list of their nearest coarse centroid unless
// `keep_originals` is set. Queries scan the `probe` lists with the nearest
// centroids and rank candidates by asymmetric distance
//
//   d(q, x) ~= sum_j || (q - c)_j - codeword_j(code_j) ||^2
//
// With `keep_originals`, the best k * rerank candidates by approximate
// distance are re-ranked by exact distance and cut back to k.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nplm/distance.hpp"
#include "nplm/kmeans.hpp"
#include "nplm/random.hpp"
#include "nplm/vector_index.hpp"

namespace nplm {

struct IvfPqConfig {
  std::size_t nlist = 256;
  std::size_t m = 64;
  std::size_t bits = 8;
  std::size_t probe = 8;
  std::size_t sample_cap = 50'000;
  std::size_t iterations = 15;
  std::uint64_t seed = 0;
  bool keep_originals = true;
  std::size_t rerank = 4;  // shortlist factor; only used with keep_originals

  friend bool operator==(const IvfPqConfig&, const IvfPqConfig&) = default;
};

class IvfPqIndex final : public VectorIndex {
 public:
  IvfPqIndex(std::size_t dim, IvfPqConfig cfg) : VectorIndex(dim), cfg_(cfg) {
    if (cfg_.nlist == 0) throw InvalidArgument("nlist must be positive");
    if (cfg_.m == 0 || dim % cfg_.m != 0) throw InvalidArgument("dimension must be divisible by m");
    if (cfg_.bits < 1 || cfg_.bits > 8) throw InvalidArgument("bits must be in [1, 8]");
    if (cfg_.probe < 1 || cfg_.probe > cfg_.nlist) throw InvalidArgument("probe must be in [1, nlist]");
    if (cfg_.rerank < 1) throw InvalidArgument("rerank must be >= 1");
    lists_.resize(cfg_.nlist);
  }

  IndexType type() const override { return IndexType::kIvfPq; }
  const IvfPqConfig& config() const noexcept { return cfg_; }
  bool trained() const noexcept { return trained_; }
  std::size_t ksub() const noexcept { return std::size_t{1} << cfg_.bits; }
  std::size_t dsub() const noexcept { return dim_ / cfg_.m; }
  std::size_t code_size() const noexcept { return cfg_.m; }

  std::size_t stored_count() const override { return where_.size(); }
  bool contains(VectorId id) const override { return where_.contains(id); }

  // Trains on a seeded sample of at most sample_cap rows of `data`.
  void train(std::span<const float> data) {
    if (data.size() % dim_ != 0) throw InvalidArgument("training data is not a whole number of rows");
    const std::size_t n = data.size() / dim_;
    if (n < cfg_.nlist) throw InvalidArgument("training sample smaller than nlist");
    if (n < ksub()) throw InvalidArgument("training sample smaller than 2^bits");
    std::vector<float> sample;
    if (n > cfg_.sample_cap) {
      if (cfg_.sample_cap < std::max(cfg_.nlist, ksub())) throw InvalidArgument("sample_cap too small for nlist / 2^bits");
      Rng rng(cfg_.seed);
      auto idx = rng.sample_indices(n, cfg_.sample_cap);
      std::sort(idx.begin(), idx.end());
      sample.reserve(idx.size() * dim_);
      for (auto i : idx) sample.insert(sample.end(), data.begin() + static_cast<std::ptrdiff_t>(i * dim_),
                                       data.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim_));
    } else {
      sample.assign(data.begin(), data.end());
    }
    const std::size_t rows = sample.size() / dim_;

    coarse_ = kmeans(sample, dim_, {cfg_.nlist, cfg_.iterations, cfg_.seed});

    std::vector<float> residuals(sample.size());
    for (std::size_t i = 0; i < rows; ++i) {
      const auto c = nearest_centroid(sample.data() + i * dim_, coarse_, dim_);
      for (std::size_t j = 0; j < dim_; ++j) residuals[i * dim_ + j] = sample[i * dim_ + j] - coarse_[c * dim_ + j];
    }
    const std::size_t ds = dsub();
    codebooks_.assign(cfg_.m * ksub() * ds, 0.0f);
    std::vector<float> sub(rows * ds);
    for (std::size_t s = 0; s < cfg_.m; ++s) {
      for (std::size_t i = 0; i < rows; ++i)
        std::copy_n(residuals.data() + i * dim_ + s * ds, ds, sub.data() + i * ds);
      const auto book = kmeans(sub, ds, {ksub(), cfg_.iterations, cfg_.seed + 1 + s});
      std::copy(book.begin(), book.end(), codebooks_.begin() + static_cast<std::ptrdiff_t>(s * ksub() * ds));
    }
    trained_ = true;
  }

  void add(VectorId id, std::span<const float> v) override {
    require_trained();
    check_vector(v);
    if (where_.contains(id)) throw InvalidArgument("duplicate vector id " + std::to_string(id));
    const auto list = nearest_centroid(v.data(), coarse_, dim_);
    auto& l = lists_[list];
    where_.emplace(id, std::make_pair(static_cast<std::uint32_t>(list), static_cast<std::uint32_t>(l.ids.size())));
    l.ids.push_back(id);
    encode_residual(v, list, l.codes);
    if (cfg_.keep_originals) l.originals.insert(l.originals.end(), v.begin(), v.end());
  }

  std::vector<Neighbor> search(std::span<const float> q, std::size_t k, const Tombstones& dead,
                               const SearchParams& params = {}) const override {
    require_trained();
    check_query(q, k);
    const std::size_t probe = params.probe ? params.probe : cfg_.probe;
    if (probe < 1 || probe > cfg_.nlist) throw InvalidArgument("probe must be in [1, nlist]");

    std::vector<std::pair<float, std::uint32_t>> coarse(cfg_.nlist);
    for (std::size_t c = 0; c < cfg_.nlist; ++c)
      coarse[c] = {l2_squared_f(q.data(), coarse_.data() + c * dim_, dim_), static_cast<std::uint32_t>(c)};
    std::partial_sort(coarse.begin(), coarse.begin() + static_cast<std::ptrdiff_t>(probe), coarse.end());

    const std::size_t ks = ksub(), ds = dsub(), m = cfg_.m;
    std::vector<float> residual(dim_), table(m * ks);
    TopK top(cfg_.keep_originals ? k * cfg_.rerank : k);
    const bool any_dead = !dead.empty();
    for (std::size_t p = 0; p < probe; ++p) {
      const auto list = coarse[p].second;
      const auto& l = lists_[list];
      if (l.ids.empty()) continue;
      for (std::size_t j = 0; j < dim_; ++j) residual[j] = q[j] - coarse_[list * dim_ + j];
      for (std::size_t s = 0; s < m; ++s)
        for (std::size_t c = 0; c < ks; ++c)
          table[s * ks + c] = l2_squared_f(residual.data() + s * ds, codebooks_.data() + (s * ks + c) * ds, ds);
      for (std::size_t i = 0; i < l.ids.size(); ++i) {
        if (any_dead && dead.contains(l.ids[i])) continue;
        const std::uint8_t* code = l.codes.data() + i * m;
        float d = 0.0f;
        for (std::size_t s = 0; s < m; ++s) d += table[s * ks + code[s]];
        top.push(l.ids[i], d);
      }
    }
    auto result = top.take_sorted();
    if (cfg_.keep_originals) {
      for (auto& n : result) {
        const auto [list, pos] = where_.at(n.id);
        n.distance = l2_squared(q.data(), lists_[list].originals.data() + static_cast<std::size_t>(pos) * dim_, dim_);
      }
      std::sort(result.begin(), result.end(), closer);
      if (result.size() > k) result.resize(k);
    }
    return result;
  }

  // Decoded approximation of a stored vector.
  std::vector<float> reconstruct(VectorId id) const {
    const auto it = where_.find(id);
    if (it == where_.end()) throw InvalidArgument("unknown vector id " + std::to_string(id));
    const auto [list, pos] = it->second;
    return decode(list, lists_[list].codes.data() + static_cast<std::size_t>(pos) * cfg_.m);
  }

  // ||v - decode(encode(v))||^2 for an arbitrary vector.
  double reconstruction_error(std::span<const float> v) const {
    require_trained();
    check_vector(v);
    const auto list = nearest_centroid(v.data(), coarse_, dim_);
    std::vector<std::uint8_t> code;
    encode_residual(v, list, code);
    const auto approx = decode(list, code.data());
    return l2_squared(v.data(), approx.data(), dim_);
  }

  std::size_t list_of(VectorId id) const { return where_.at(id).first; }
  std::span<const float> coarse_centroids() const noexcept { return coarse_; }
  std::size_t list_size(std::size_t list) const { return lists_.at(list).ids.size(); }

  void compact() override {
    const auto dead = tombstones();
    where_.clear();
    for (std::size_t li = 0; li < lists_.size(); ++li) {
      auto& l = lists_[li];
      InvertedList kept;
      for (std::size_t i = 0; i < l.ids.size(); ++i) {
        if (dead->contains(l.ids[i])) continue;
        where_.emplace(l.ids[i], std::make_pair(static_cast<std::uint32_t>(li), static_cast<std::uint32_t>(kept.ids.size())));
        kept.ids.push_back(l.ids[i]);
        kept.codes.insert(kept.codes.end(), l.codes.begin() + static_cast<std::ptrdiff_t>(i * cfg_.m),
                          l.codes.begin() + static_cast<std::ptrdiff_t>((i + 1) * cfg_.m));
        if (cfg_.keep_originals)
          kept.originals.insert(kept.originals.end(), l.originals.begin() + static_cast<std::ptrdiff_t>(i * dim_),
                                l.originals.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim_));
      }
      l = std::move(kept);
    }
    reset_tombstones({});
  }

  std::unique_ptr<VectorIndex> empty_clone() const override {
    auto copy = std::make_unique<IvfPqIndex>(dim_, cfg_);
    copy->coarse_ = coarse_;
    copy->codebooks_ = codebooks_;
    copy->trained_ = trained_;
    return copy;
  }

  // Body: u64 probe, u64 sample_cap, u64 iterations, u64 seed,
  // u8 keep_originals, u64 rerank, u8 trained, [nlist*dim f32 centroids,
  // m*2^bits*(dim/m) f32 codebooks], then per list: u64 n, n x u64 ids,
  // n*m code bytes, [n*dim f32 originals when kept].
  static std::unique_ptr<IvfPqIndex> load_body(BinaryReader& r, std::size_t dim, std::size_t nlist, std::size_t m,
                                               std::size_t bits) {
    IvfPqConfig cfg;
    cfg.nlist = nlist;
    cfg.m = m;
    cfg.bits = bits;
    cfg.probe = r.u64();
    cfg.sample_cap = r.u64();
    cfg.iterations = r.u64();
    cfg.seed = r.u64();
    cfg.keep_originals = r.u8() != 0;
    cfg.rerank = r.u64();
    auto index = std::make_unique<IvfPqIndex>(dim, cfg);
    index->trained_ = r.u8() != 0;
    if (index->trained_) {
      index->coarse_.resize(nlist * dim);
      r.f32s(index->coarse_);
      index->codebooks_.resize(m * index->ksub() * index->dsub());
      r.f32s(index->codebooks_);
    }
    for (std::size_t li = 0; li < nlist; ++li) {
      auto& l = index->lists_[li];
      const auto n = r.count(std::uint64_t{1} << 36, "posting");
      l.ids.resize(n);
      r.u64s(l.ids);
      l.codes.resize(n * m);
      r.bytes(l.codes);
      if (cfg.keep_originals) {
        l.originals.resize(n * dim);
        r.f32s(l.originals);
      }
      for (std::size_t i = 0; i < n; ++i)
        if (!index->where_.emplace(l.ids[i], std::make_pair(static_cast<std::uint32_t>(li), static_cast<std::uint32_t>(i))).second)
          throw FormatError("duplicate id in ivfpq index");
    }
    index->reset_tombstones(Tombstones::load(r));
    return index;
  }

 protected:
  Shape shape() const override { return {cfg_.nlist, cfg_.m, cfg_.bits}; }

  void save_body(BinaryWriter& w) const override {
    w.u64(cfg_.probe);
    w.u64(cfg_.sample_cap);
    w.u64(cfg_.iterations);
    w.u64(cfg_.seed);
    w.u8(cfg_.keep_originals ? 1 : 0);
    w.u64(cfg_.rerank);
    w.u8(trained_ ? 1 : 0);
    if (trained_) {
      w.f32s(coarse_);
      w.f32s(codebooks_);
    }
    for (const auto& l : lists_) {
      w.u64(l.ids.size());
      w.u64s(l.ids);
      w.bytes(l.codes);
      if (cfg_.keep_originals) w.f32s(l.originals);
    }
  }

 private:
  struct InvertedList {
    std::vector<VectorId> ids;
    std::vector<std::uint8_t> codes;  // ids.size() * m
    std::vector<float> originals;     // only with keep_originals
  };

  void require_trained() const {
    if (!trained_) throw StateError("ivfpq index is not trained");
  }

  void encode_residual(std::span<const float> v, std::size_t list, std::vector<std::uint8_t>& out) const {
    const std::size_t ds = dsub(), ks = ksub();
    std::vector<float> residual(dim_);
    for (std::size_t j = 0; j < dim_; ++j) residual[j] = v[j] - coarse_[list * dim_ + j];
    for (std::size_t s = 0; s < cfg_.m; ++s) {
      const auto book = std::span<const float>(codebooks_).subspan(s * ks * ds, ks * ds);
      out.push_back(static_cast<std::uint8_t>(nearest_centroid(residual.data() + s * ds, book, ds)));
    }
  }

  std::vector<float> decode(std::size_t list, const std::uint8_t* code) const {
    const std::size_t ds = dsub(), ks = ksub();
    std::vector<float> v(coarse_.begin() + static_cast<std::ptrdiff_t>(list * dim_),
                         coarse_.begin() + static_cast<std::ptrdiff_t>((list + 1) * dim_));
    for (std::size_t s = 0; s < cfg_.m; ++s)
      for (std::size_t j = 0; j < ds; ++j) v[s * ds + j] += codebooks_[(s * ks + code[s]) * ds + j];
    return v;
  }

  IvfPqConfig cfg_;
  bool trained_ = false;
  std::vector<float> coarse_;
  std::vector<float> codebooks_;
  std::vector<InvertedList> lists_;
  std::unordered_map<VectorId, std::pair<std::uint32_t, std::uint32_t>> where_;  // id -> (list, position)
};

}  // namespace nplm
