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

#include <cstddef>

namespace nplm {

// Squared L2 accumulated in double. The four-way split is fixed, so results
// are reproducible for a given (a, b) regardless of where they are stored.
inline double l2_squared(const float* a, const float* b, std::size_t dim) noexcept {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= dim; i += 4) {
    const double t0 = static_cast<double>(a[i]) - b[i];
    const double t1 = static_cast<double>(a[i + 1]) - b[i + 1];
    const double t2 = static_cast<double>(a[i + 2]) - b[i + 2];
    const double t3 = static_cast<double>(a[i + 3]) - b[i + 3];
    s0 += t0 * t0;
    s1 += t1 * t1;
    s2 += t2 * t2;
    s3 += t3 * t3;
  }
  for (; i < dim; ++i) {
    const double t = static_cast<double>(a[i]) - b[i];
    s0 += t * t;
  }
  return (s0 + s1) + (s2 + s3);
}

// Single-precision variant for training loops where speed matters more than
// the last bits.
inline float l2_squared_f(const float* a, const float* b, std::size_t dim) noexcept {
  float s[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= dim; i += 8)
    for (std::size_t j = 0; j < 8; ++j) {
      const float t = a[i + j] - b[i + j];
      s[j] += t * t;
    }
  for (; i < dim; ++i) {
    const float t = a[i] - b[i];
    s[0] += t * t;
  }
  return ((s[0] + s[1]) + (s[2] + s[3])) + ((s[4] + s[5]) + (s[6] + s[7]));
}

}  // namespace nplm
