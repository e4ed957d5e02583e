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
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "nplm/distance.hpp"
#include "nplm/vector_index.hpp"

namespace nplm {

// Exact brute-force L2 index.
class FlatIndex final : public VectorIndex {
 public:
  static constexpr double kPrefilterSlack = 1e-4;

  explicit FlatIndex(std::size_t dim) : VectorIndex(dim) {}

  IndexType type() const override { return IndexType::kFlat; }
  std::size_t stored_count() const override { return ids_.size(); }
  bool contains(VectorId id) const override { return rows_.contains(id); }

  void add(VectorId id, std::span<const float> v) override {
    check_vector(v);
    if (!rows_.emplace(id, ids_.size()).second) throw InvalidArgument("duplicate vector id " + std::to_string(id));
    ids_.push_back(id);
    data_.insert(data_.end(), v.begin(), v.end());
  }

  std::span<const float> vector(VectorId id) const {
    const auto it = rows_.find(id);
    if (it == rows_.end()) throw InvalidArgument("unknown vector id " + std::to_string(id));
    return std::span<const float>(data_).subspan(it->second * dim_, dim_);
  }

  std::vector<Neighbor> search(std::span<const float> q, std::size_t k, const Tombstones& dead,
                               const SearchParams& = {}) const override {
    check_query(q, k);
    TopK top(k);
    const bool any_dead = !dead.empty();
    for (std::size_t r = 0; r < ids_.size(); ++r) {
      const float* row = data_.data() + r * dim_;
      // The float sum is within ~1e-6 relative of the double one, so a row
      // that loses by more than the slack cannot enter; results stay exact.
      if (top.full() && static_cast<double>(l2_squared_f(q.data(), row, dim_)) * (1.0 - kPrefilterSlack) > top.bound())
        continue;
      if (any_dead && dead.contains(ids_[r])) continue;
      top.push(ids_[r], l2_squared(q.data(), row, dim_));
    }
    return top.take_sorted();
  }

  void compact() override {
    const auto dead = tombstones();
    std::vector<VectorId> ids;
    std::vector<float> data;
    for (std::size_t r = 0; r < ids_.size(); ++r) {
      if (dead->contains(ids_[r])) continue;
      ids.push_back(ids_[r]);
      data.insert(data.end(), data_.begin() + static_cast<std::ptrdiff_t>(r * dim_),
                  data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * dim_));
    }
    ids_ = std::move(ids);
    data_ = std::move(data);
    rows_.clear();
    for (std::size_t r = 0; r < ids_.size(); ++r) rows_.emplace(ids_[r], r);
    reset_tombstones({});
  }

  std::unique_ptr<VectorIndex> empty_clone() const override { return std::make_unique<FlatIndex>(dim_); }

  // Body: u64 count, count x u64 ids, count*dim x f32.
  static std::unique_ptr<FlatIndex> load_body(BinaryReader& r, std::size_t dim) {
    auto index = std::make_unique<FlatIndex>(dim);
    const auto n = r.count(std::uint64_t{1} << 36, "vector");
    index->ids_.resize(n);
    r.u64s(index->ids_);
    index->data_.resize(n * dim);
    r.f32s(index->data_);
    for (std::size_t i = 0; i < n; ++i)
      if (!index->rows_.emplace(index->ids_[i], i).second) throw FormatError("duplicate id in flat index");
    index->reset_tombstones(Tombstones::load(r));
    return index;
  }

 protected:
  Shape shape() const override { return {}; }
  void save_body(BinaryWriter& w) const override {
    w.u64(ids_.size());
    w.u64s(ids_);
    w.f32s(data_);
  }

 private:
  std::vector<VectorId> ids_;
  std::vector<float> data_;
  std::unordered_map<VectorId, std::size_t> rows_;
};

}  // namespace nplm
