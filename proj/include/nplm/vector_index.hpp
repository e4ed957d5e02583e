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

#include <memory>
#include <mutex>
#include <span>
#include <string_view>
#include <vector>

#include "nplm/binary_io.hpp"
#include "nplm/error.hpp"
#include "nplm/tombstones.hpp"
#include "nplm/topk.hpp"

namespace nplm {

enum class IndexType : std::uint8_t { kFlat = 0, kIvfPq = 1 };

struct SearchParams {
  std::size_t probe = 0;  // inverted lists to scan; 0 selects the index default
};

// Id-addressed vector index with tombstone deletion.
//
// Threading: any number of concurrent search()/query() calls; add(),
// compact() and load need exclusive access. remove() publishes a new
// tombstone snapshot atomically, so it may run alongside readers; readers
// that captured tombstones() earlier keep a consistent view.
class VectorIndex {
 public:
  static constexpr std::string_view kMagic = "SIIX";
  static constexpr std::uint32_t kFormatVersion = 2;

  explicit VectorIndex(std::size_t dim) : dim_(dim), tombstones_(std::make_shared<const Tombstones>()) {
    if (dim == 0) throw InvalidArgument("index dimension must be positive");
  }
  virtual ~VectorIndex() = default;
  VectorIndex(const VectorIndex&) = delete;
  VectorIndex& operator=(const VectorIndex&) = delete;

  virtual IndexType type() const = 0;
  std::size_t dim() const noexcept { return dim_; }

  // Vectors physically present, tombstoned ones included.
  virtual std::size_t stored_count() const = 0;
  virtual bool contains(VectorId id) const = 0;
  virtual void add(VectorId id, std::span<const float> vector) = 0;

  // Top-k live neighbors by (distance, id), skipping ids in `dead`.
  virtual std::vector<Neighbor> search(std::span<const float> query, std::size_t k, const Tombstones& dead,
                                       const SearchParams& params = {}) const = 0;

  std::vector<Neighbor> query(std::span<const float> query, std::size_t k, const SearchParams& params = {}) const {
    const auto dead = tombstones();
    return search(query, k, *dead, params);
  }

  // Tombstones every stored id in `ids`; unknown ids are ignored. Returns the
  // number of ids newly tombstoned.
  std::size_t remove(std::span<const VectorId> ids) {
    std::lock_guard lock(mu_);
    auto next = std::make_shared<Tombstones>(*tombstones_);
    const auto before = next->count();
    for (auto id : ids)
      if (contains(id)) next->insert(id);
    const auto added = next->count() - before;
    tombstones_ = std::move(next);
    return added;
  }

  std::shared_ptr<const Tombstones> tombstones() const {
    std::lock_guard lock(mu_);
    return tombstones_;
  }

  std::size_t live_count() const { return stored_count() - tombstones()->count(); }

  // Physically drops tombstoned vectors; query results are unchanged.
  virtual void compact() = 0;

  // Untrained-data copy: same configuration and trained quantizers, no vectors.
  virtual std::unique_ptr<VectorIndex> empty_clone() const = 0;

  // Layout: "SIIX" u32 version u8 type u64 dim u64 nlist u64 m u64 bits,
  // type-specific body, then the tombstone bitmap.
  void save(std::ostream& out) const {
    BinaryWriter w(out);
    w.magic(kMagic);
    w.u32(kFormatVersion);
    w.u8(static_cast<std::uint8_t>(type()));
    w.u64(dim_);
    const auto [nlist, m, bits] = shape();
    w.u64(nlist);
    w.u64(m);
    w.u64(bits);
    save_body(w);
    tombstones()->save(w);
    w.check();
  }

 protected:
  struct Shape {
    std::uint64_t nlist = 0, m = 0, bits = 0;
  };
  virtual Shape shape() const = 0;
  virtual void save_body(BinaryWriter& w) const = 0;

  void check_query(std::span<const float> q, std::size_t k) const {
    if (q.size() != dim_) throw InvalidArgument("query dimension mismatch: expected " + std::to_string(dim_) + ", got " + std::to_string(q.size()));
    if (k == 0) throw InvalidArgument("k must be >= 1");
  }
  void check_vector(std::span<const float> v) const {
    if (v.size() != dim_) throw InvalidArgument("vector dimension mismatch: expected " + std::to_string(dim_) + ", got " + std::to_string(v.size()));
  }

  void reset_tombstones(Tombstones t) {
    std::lock_guard lock(mu_);
    tombstones_ = std::make_shared<const Tombstones>(std::move(t));
  }

  std::size_t dim_;

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const Tombstones> tombstones_;
};

}  // namespace nplm
