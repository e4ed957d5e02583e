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
#include <cstdint>
#include <limits>
#include <vector>

namespace nplm {

using VectorId = std::uint64_t;

struct Neighbor {
  VectorId id = 0;
  double distance = 0.0;  // squared L2 (exact or approximate)

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Strict weak order used everywhere results are ranked: distance, then id.
inline bool closer(const Neighbor& a, const Neighbor& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
}

// Bounded collector of the k closest candidates.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) { heap_.reserve(k); }

  void push(VectorId id, double distance) {
    if (k_ == 0) return;
    const Neighbor n{id, distance};
    if (heap_.size() < k_) {
      heap_.push_back(n);
      std::push_heap(heap_.begin(), heap_.end(), closer);
    } else if (closer(n, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), closer);
      heap_.back() = n;
      std::push_heap(heap_.begin(), heap_.end(), closer);
    }
  }

  bool full() const noexcept { return heap_.size() == k_; }
  // Distance a candidate must beat (or tie with a smaller id) to enter.
  double bound() const noexcept { return full() ? heap_.front().distance : std::numeric_limits<double>::infinity(); }

  std::vector<Neighbor> take_sorted() {
    std::sort_heap(heap_.begin(), heap_.end(), closer);
    return std::move(heap_);
  }

 private:
  std::size_t k_;
  std::vector<Neighbor> heap_;
};

}  // namespace nplm
