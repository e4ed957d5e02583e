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

// Seeded Lloyd k-means with k-means++ seeding. Empty clusters are repaired by
// splitting the largest cluster. Iteration stops early once assignments are
// stable, which yields the same centroids as running the full budget.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "nplm/distance.hpp"
#include "nplm/error.hpp"
#include "nplm/random.hpp"

namespace nplm {

struct KMeansOptions {
  std::size_t k = 0;
  std::size_t iterations = 25;
  std::uint64_t seed = 0;
};

// Index of the closest centroid, ties to the lowest index.
inline std::size_t nearest_centroid(const float* x, std::span<const float> centroids, std::size_t dim) {
  const std::size_t k = centroids.size() / dim;
  std::size_t best = 0;
  float best_d = std::numeric_limits<float>::infinity();
  for (std::size_t c = 0; c < k; ++c) {
    const float d = l2_squared_f(x, centroids.data() + c * dim, dim);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

// Returns k * dim centroid coordinates for the n x dim row-major `data`.
inline std::vector<float> kmeans(std::span<const float> data, std::size_t dim, const KMeansOptions& opts) {
  if (dim == 0 || data.size() % dim != 0) throw InvalidArgument("kmeans: data is not a whole number of rows");
  const std::size_t n = data.size() / dim;
  const std::size_t k = opts.k;
  if (k == 0) throw InvalidArgument("kmeans: k must be positive");
  if (n < k) throw InvalidArgument("kmeans: need at least k training points");
  Rng rng(opts.seed);
  std::vector<float> centroids(k * dim);
  auto row = [&](std::size_t i) { return data.data() + i * dim; };

  // k-means++ seeding.
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t pick = rng.index(n);
  for (std::size_t c = 0; c < k; ++c) {
    std::copy_n(row(pick), dim, centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], static_cast<double>(l2_squared_f(row(i), centroids.data() + c * dim, dim)));
      total += d2[i];
    }
    if (c + 1 == k) break;
    if (total <= 0.0) {
      pick = rng.index(n);
      continue;
    }
    const double target = rng.uniform() * total;
    double acc = 0.0;
    pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      acc += d2[i];
      if (acc > target && d2[i] > 0.0) {
        pick = i;
        break;
      }
    }
  }

  std::vector<std::uint32_t> assign(n, std::numeric_limits<std::uint32_t>::max());
  std::vector<double> sums(k * dim);
  std::vector<std::size_t> sizes(k);
  for (std::size_t iter = 0; iter < opts.iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::uint32_t>(nearest_centroid(row(i), centroids, dim));
      changed |= c != assign[i];
      assign[i] = c;
    }
    if (!changed) break;
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = assign[i];
      ++sizes[c];
      for (std::size_t j = 0; j < dim; ++j) sums[c * dim + j] += row(i)[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] == 0) continue;
      for (std::size_t j = 0; j < dim; ++j)
        centroids[c * dim + j] = static_cast<float>(sums[c * dim + j] / static_cast<double>(sizes[c]));
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      const auto largest = static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
      if (sizes[largest] < 2) break;
      constexpr float kEps = 1.0f / 1024.0f;
      for (std::size_t j = 0; j < dim; ++j) {
        const float v = centroids[largest * dim + j];
        const float sign = (j % 2 == 0) ? 1.0f : -1.0f;
        const float delta = sign * kEps * (std::abs(v) + kEps);
        centroids[c * dim + j] = v + delta;
        centroids[largest * dim + j] = v - delta;
      }
      sizes[c] = sizes[largest] / 2;
      sizes[largest] -= sizes[c];
    }
  }
  return centroids;
}

}  // namespace nplm
