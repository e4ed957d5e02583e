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
#include <cmath>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "nplm/error.hpp"
#include "nplm/vocabulary.hpp"

namespace nplm {

// Dense probability vector over a vocabulary.
class NextTokenDistribution {
 public:
  NextTokenDistribution() = default;
  explicit NextTokenDistribution(std::vector<double> probs) : probs_(std::move(probs)) {}

  static NextTokenDistribution uniform(std::size_t vocab_size) {
    if (vocab_size == 0) throw InvalidArgument("empty vocabulary");
    return NextTokenDistribution(std::vector<double>(vocab_size, 1.0 / static_cast<double>(vocab_size)));
  }

  double operator[](TokenId id) const { return probs_.at(id); }
  std::size_t size() const noexcept { return probs_.size(); }
  std::span<const double> probs() const noexcept { return probs_; }
  std::span<double> mutable_probs() noexcept { return probs_; }

  double sum() const { return std::accumulate(probs_.begin(), probs_.end(), 0.0); }

  bool is_normalized(double tol = 1e-9) const {
    return std::all_of(probs_.begin(), probs_.end(), [](double p) { return std::isfinite(p) && p >= 0.0; }) &&
           std::abs(sum() - 1.0) <= tol;
  }

  // Highest-probability ids, ties by ascending id.
  std::vector<std::pair<TokenId, double>> top(std::size_t n) const {
    std::vector<std::pair<TokenId, double>> all;
    all.reserve(probs_.size());
    for (std::size_t i = 0; i < probs_.size(); ++i) all.emplace_back(static_cast<TokenId>(i), probs_[i]);
    n = std::min(n, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(),
                      [](const auto& a, const auto& b) { return a.second > b.second || (a.second == b.second && a.first < b.first); });
    all.resize(n);
    return all;
  }

  friend bool operator==(const NextTokenDistribution&, const NextTokenDistribution&) = default;

 private:
  std::vector<double> probs_;
};

// The parametric component P_LM(y | x). Implementations must be
// deterministic and return a strictly positive normalized vector.
class ParametricLM {
 public:
  virtual ~ParametricLM() = default;

  virtual std::size_t vocab_size() const = 0;

  // Number of trailing context tokens the model can see; longer contexts are
  // truncated by callers without changing the output.
  virtual std::size_t context_length() const = 0;

  // Writes P(. | context) into `out` (size vocab_size()).
  virtual void predict(std::span<const TokenId> context, std::span<double> out) const = 0;

  NextTokenDistribution next_token(std::span<const TokenId> context) const {
    std::vector<double> p(vocab_size());
    predict(context, p);
    return NextTokenDistribution(std::move(p));
  }
};

class UniformLM final : public ParametricLM {
 public:
  explicit UniformLM(std::size_t vocab_size) : vocab_size_(vocab_size) {
    if (vocab_size == 0) throw InvalidArgument("empty vocabulary");
  }
  std::size_t vocab_size() const override { return vocab_size_; }
  std::size_t context_length() const override { return 0; }
  void predict(std::span<const TokenId>, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(vocab_size_));
  }

 private:
  std::size_t vocab_size_;
};

// Sum of natural-log probabilities of `tokens`, each conditioned on
// begin-of-text followed by the preceding tokens.
inline double sequence_log_prob(const ParametricLM& model, std::span<const TokenId> tokens) {
  if (tokens.empty()) throw InvalidArgument("sequence_log_prob: empty sequence");
  std::vector<TokenId> context{kBeginOfText};
  context.reserve(tokens.size() + 1);
  std::vector<double> p(model.vocab_size());
  double total = 0.0;
  for (TokenId t : tokens) {
    if (t >= p.size()) throw InvalidArgument("token id outside model vocabulary");
    const std::size_t keep = std::min(context.size(), std::max<std::size_t>(model.context_length(), 1));
    model.predict(std::span<const TokenId>(context).last(keep), p);
    total += std::log(p[t]);
    context.push_back(t);
  }
  return total;
}

}  // namespace nplm
