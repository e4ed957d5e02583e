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

// Seeded synthetic text for tests, benchmarks and demos.
//
// Pseudo-words are built from consonant-vowel syllables. PhraseModel emits
// text as a Zipf-weighted choice among a fixed bank of multi-word phrases
// with occasional random word substitutions, so longer contexts are
// informative and more stored text keeps helping.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "nplm/document.hpp"
#include "nplm/random.hpp"
#include "nplm/vocabulary.hpp"

namespace nplm::synth {

inline std::vector<std::string> pseudo_words(std::size_t n, std::uint64_t seed) {
  static constexpr std::string_view kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
                                                 "br", "kr", "st", "tr", "pl", "sh"};
  static constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
  Rng rng(seed ^ 0x5eed'0000'0000'0001ULL);
  std::vector<std::string> words;
  std::unordered_set<std::string> seen;
  while (words.size() < n) {
    std::string w;
    const auto syllables = 2 + rng.index(3);
    for (std::size_t s = 0; s < syllables; ++s) {
      w += kOnsets[rng.index(std::size(kOnsets))];
      w += kVowels[rng.index(std::size(kVowels))];
    }
    if (rng.uniform() < 0.3) w += "n";
    if (seen.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

// Samples ranks 0..n-1 with probability proportional to 1 / (rank + 1)^s.
class ZipfSampler {
 public:
  ZipfSampler(std::size_t n, double s) : cdf_(n) {
    if (n == 0) throw InvalidArgument("ZipfSampler: n must be >= 1");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) cdf_[i] = total += std::pow(static_cast<double>(i + 1), -s);
    for (auto& c : cdf_) c /= total;
  }
  std::size_t operator()(Rng& rng) const {
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), rng.uniform());
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }
  std::size_t size() const noexcept { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
};

struct PhraseModelOptions {
  std::size_t words = 2000;
  std::size_t phrases = 4000;
  std::size_t min_phrase = 6;
  std::size_t max_phrase = 14;
  double word_zipf = 1.0;
  double phrase_zipf = 1.0;
  double noise = 0.03;          // per-token substitution probability
  double sentence_end = 0.3;    // chance of "." after a phrase
  std::uint64_t seed = 0;
};

class PhraseModel {
 public:
  explicit PhraseModel(PhraseModelOptions opts = {})
      : opts_(opts), words_(pseudo_words(opts.words, opts.seed)), word_rank_(opts.words, opts.word_zipf),
        phrase_rank_(opts.phrases, opts.phrase_zipf) {
    Rng rng(opts.seed ^ 0x9b1a5e5ULL);
    for (std::size_t p = 0; p < opts.phrases; ++p) {
      const auto len = opts.min_phrase + rng.index(opts.max_phrase - opts.min_phrase + 1);
      std::vector<std::uint32_t> phrase(len);
      for (auto& w : phrase) w = static_cast<std::uint32_t>(word_rank_(rng));
      phrases_.push_back(std::move(phrase));
    }
  }

  const std::vector<std::string>& words() const noexcept { return words_; }

  std::string random_word(Rng& rng) const { return words_[word_rank_(rng)]; }

  // At least n tokens; ends on a phrase boundary.
  std::vector<std::string> tokens(std::size_t n, Rng& rng) const {
    std::vector<std::string> out;
    out.reserve(n + opts_.max_phrase + 1);
    while (out.size() < n) {
      for (auto w : phrases_[phrase_rank_(rng)])
        out.push_back(rng.uniform() < opts_.noise ? random_word(rng) : words_[w]);
      if (rng.uniform() < opts_.sentence_end) out.emplace_back(".");
    }
    return out;
  }

  // Documents of about `doc_tokens` tokens each until `total_tokens` is reached.
  std::vector<Document> documents(std::size_t total_tokens, std::size_t doc_tokens, Rng& rng,
                                  const std::string& id_prefix, const std::string& domain = "synthetic",
                                  const std::string& license = "public-domain") const {
    std::vector<Document> docs;
    std::size_t produced = 0;
    while (produced < total_tokens) {
      const auto toks = tokens(doc_tokens, rng);
      produced += toks.size();
      docs.push_back(Document::make(id_prefix + std::to_string(docs.size()), join(toks), domain, license));
    }
    return docs;
  }

  // Vocabulary holding every word the model can emit.
  Vocabulary vocabulary() const {
    Vocabulary v;
    v.add(".");
    for (const auto& w : words_) v.add(w);
    return v;
  }

  static std::string join(const std::vector<std::string>& toks) {
    std::string s;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (i) s.push_back(' ');
      s += toks[i];
    }
    return s;
  }

 private:
  PhraseModelOptions opts_;
  std::vector<std::string> words_;
  ZipfSampler word_rank_;
  ZipfSampler phrase_rank_;
  std::vector<std::vector<std::uint32_t>> phrases_;
};

// Replaces each token with a random word from `words` with probability `rate`.
inline std::vector<std::string> perturb(const std::vector<std::string>& toks, double rate,
                                        const std::vector<std::string>& words, Rng& rng) {
  auto out = toks;
  for (auto& t : out)
    if (rng.uniform() < rate) t = words[rng.index(words.size())];
  return out;
}

// Uniformly random words: text no n-gram model can anticipate.
inline std::vector<std::string> random_passage(std::size_t n, const std::vector<std::string>& words, Rng& rng) {
  std::vector<std::string> out(n);
  for (auto& t : out) t = words[rng.index(words.size())];
  return out;
}

}  // namespace nplm::synth
