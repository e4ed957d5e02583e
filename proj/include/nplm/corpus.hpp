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

// Corpus curation: n-gram deduplication, domain upsampling plans, cross-domain
// n-gram overlap and correlation statistics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "nplm/binary_io.hpp"
#include "nplm/document.hpp"
#include "nplm/error.hpp"
#include "nplm/random.hpp"
#include "nplm/stopwords.hpp"
#include "nplm/tokenizer.hpp"

namespace nplm {

// ---------------------------------------------------------------------------
// Deduplication

struct DedupOptions {
  std::size_t n = 13;
  double threshold = 0.8;
};

struct DedupResult {
  std::vector<Document> kept;
  std::vector<std::string> dropped_ids;
  // Retained documents with fewer than n tokens; they cannot be scored.
  std::vector<std::string> short_ids;
};

namespace detail {

inline std::uint64_t token_hash(std::string_view t) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : t) h = (h ^ c) * 0x100000001B3ULL;
  return h;
}

inline std::vector<std::uint64_t> ngram_hashes(const std::vector<std::string>& tokens, std::size_t n) {
  std::vector<std::uint64_t> out;
  if (tokens.size() < n) return out;
  std::vector<std::uint64_t> th(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) th[i] = token_hash(tokens[i]);
  out.reserve(tokens.size() - n + 1);
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::uint64_t h = n;
    for (std::size_t j = 0; j < n; ++j) h = mix64(h ^ th[i + j]);
    out.push_back(h);
  }
  return out;
}

}  // namespace detail

// Greedy order-dependent filter: a document is dropped when the fraction of
// its n-gram positions whose n-gram already occurs in a retained document (or
// in `reference`) is >= threshold.
inline DedupResult dedup(std::span<const Document> docs, const DedupOptions& opts = {},
                         std::span<const Document> reference = {}) {
  if (opts.n < 1) throw InvalidArgument("dedup: n must be >= 1");
  if (!(opts.threshold > 0.0 && opts.threshold <= 1.0)) throw InvalidArgument("dedup: threshold must be in (0, 1]");
  std::unordered_set<std::uint64_t> seen;
  for (const auto& ref : reference)
    for (auto h : detail::ngram_hashes(tokenize(ref.text), opts.n)) seen.insert(h);

  DedupResult result;
  for (const auto& doc : docs) {
    const auto grams = detail::ngram_hashes(tokenize(doc.text), opts.n);
    if (grams.empty()) {
      if (opts.threshold < 1.0) result.short_ids.push_back(doc.id);
      result.kept.push_back(doc);
      continue;
    }
    const auto hits = std::count_if(grams.begin(), grams.end(), [&](auto h) { return seen.contains(h); });
    const double overlap = static_cast<double>(hits) / static_cast<double>(grams.size());
    if (overlap >= opts.threshold) {
      result.dropped_ids.push_back(doc.id);
      continue;
    }
    seen.insert(grams.begin(), grams.end());
    result.kept.push_back(doc);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Manifest and upsampling

struct CorpusManifest {
  std::vector<Document> documents;
  std::map<std::string, std::uint64_t> token_counts_by_domain;

  static CorpusManifest from_documents(std::vector<Document> docs) {
    CorpusManifest m;
    for (const auto& d : docs) m.token_counts_by_domain[d.domain] += tokenize(d.text).size();
    m.documents = std::move(docs);
    return m;
  }

  std::uint64_t total_tokens() const {
    std::uint64_t total = 0;
    for (const auto& [_, c] : token_counts_by_domain) total += c;
    return total;
  }
};

struct UpsamplePlan {
  std::map<std::string, std::uint32_t> repetition_factor;
};

inline UpsamplePlan upsample_plan(const std::map<std::string, std::uint64_t>& token_counts,
                                  double share_threshold = 0.05, std::uint32_t factor = 3) {
  if (token_counts.empty()) throw InvalidArgument("upsample_plan: empty manifest");
  if (factor < 1) throw InvalidArgument("upsample_plan: factor must be >= 1");
  std::uint64_t total = 0;
  for (const auto& [domain, count] : token_counts) {
    if (count == 0) throw InvalidArgument("upsample_plan: domain '" + domain + "' has no tokens");
    total += count;
  }
  UpsamplePlan plan;
  for (const auto& [domain, count] : token_counts) {
    const double share = static_cast<double>(count) / static_cast<double>(total);
    plan.repetition_factor[domain] = share < share_threshold ? factor : 1;
  }
  return plan;
}

inline UpsamplePlan upsample_plan(const CorpusManifest& manifest, double share_threshold = 0.05,
                                  std::uint32_t factor = 3) {
  return upsample_plan(manifest.token_counts_by_domain, share_threshold, factor);
}

// ---------------------------------------------------------------------------
// N-gram overlap

struct OverlapOptions {
  std::size_t sample_cap = 10'000'000;  // tokens per side
  std::size_t min_documents = 3;
  std::uint64_t seed = 0;
};

struct NgramOverlap {
  double unigram = 0.0;
  double bigram = 0.0;
};

namespace detail {

inline bool is_content_token(std::string_view t) {
  const bool has_alnum = std::any_of(t.begin(), t.end(), [](unsigned char c) { return std::isalnum(c) || c >= 0x80; });
  return has_alnum && !is_stopword(t);
}

struct QualifyingNgrams {
  std::unordered_set<std::string> unigrams;
  std::unordered_set<std::string> bigrams;
};

// Tokenized documents truncated to `cap` tokens in total. When the side is
// larger than the cap, documents are taken in a seeded uniformly shuffled
// order and the last one is cut at the cap.
inline std::vector<std::vector<std::string>> sample_side(std::span<const Document> docs, const OverlapOptions& opts) {
  std::vector<std::vector<std::string>> tokenized;
  tokenized.reserve(docs.size());
  std::size_t total = 0;
  for (const auto& d : docs) {
    tokenized.push_back(tokenize(d.text));
    total += tokenized.back().size();
  }
  if (total <= opts.sample_cap) return tokenized;
  Rng rng(opts.seed);
  std::vector<std::size_t> order(tokenized.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::vector<std::string>> out;
  std::size_t taken = 0;
  for (auto i : order) {
    if (taken >= opts.sample_cap) break;
    auto& toks = tokenized[i];
    if (taken + toks.size() > opts.sample_cap) toks.resize(opts.sample_cap - taken);
    taken += toks.size();
    out.push_back(std::move(toks));
  }
  return out;
}

inline QualifyingNgrams qualifying_ngrams(const std::vector<std::vector<std::string>>& docs, std::size_t min_docs) {
  std::unordered_map<std::string, std::size_t> uni_df, bi_df;
  for (const auto& toks : docs) {
    std::unordered_set<std::string> uni, bi;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (!is_content_token(toks[i])) continue;
      uni.insert(toks[i]);
      if (i + 1 < toks.size() && is_content_token(toks[i + 1])) bi.insert(toks[i] + '\x1f' + toks[i + 1]);
    }
    for (const auto& u : uni) ++uni_df[u];
    for (const auto& b : bi) ++bi_df[b];
  }
  QualifyingNgrams q;
  for (const auto& [g, df] : uni_df)
    if (df >= min_docs) q.unigrams.insert(g);
  for (const auto& [g, df] : bi_df)
    if (df >= min_docs) q.bigrams.insert(g);
  return q;
}

inline double covered_fraction(const std::unordered_set<std::string>& target, const std::unordered_set<std::string>& source) {
  if (target.empty()) return 0.0;
  const auto hits = std::count_if(target.begin(), target.end(), [&](const auto& g) { return source.contains(g); });
  return static_cast<double>(hits) / static_cast<double>(target.size());
}

}  // namespace detail

// Fraction of the target's qualifying unigrams/bigrams (stopword-free, present
// in >= min_documents documents of the sampled side) that also qualify on the
// source side. An empty qualifying target set yields 0.
inline NgramOverlap ngram_overlap(std::span<const Document> source, std::span<const Document> target,
                                  const OverlapOptions& opts = {}) {
  if (source.size() < opts.min_documents || target.size() < opts.min_documents)
    throw InvalidArgument("ngram_overlap: each side needs at least " + std::to_string(opts.min_documents) + " documents");
  const auto src = detail::qualifying_ngrams(detail::sample_side(source, opts), opts.min_documents);
  const auto tgt = detail::qualifying_ngrams(detail::sample_side(target, opts), opts.min_documents);
  return {detail::covered_fraction(tgt.unigrams, src.unigrams), detail::covered_fraction(tgt.bigrams, src.bigrams)};
}

struct OverlapMatrix {
  std::vector<std::string> sources;
  std::vector<std::string> targets;
  std::vector<std::vector<NgramOverlap>> values;  // [source][target]

  void write_csv(std::ostream& out) const {
    out << "source,target,unigram_overlap,bigram_overlap\n";
    char buf[64];
    for (std::size_t s = 0; s < sources.size(); ++s)
      for (std::size_t t = 0; t < targets.size(); ++t) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", values[s][t].unigram, values[s][t].bigram);
        out << sources[s] << ',' << targets[t] << ',' << buf << '\n';
      }
  }
};

// Pairwise overlap between every source domain and every target domain.
inline OverlapMatrix overlap_matrix(std::span<const Document> source_docs, std::span<const Document> target_docs,
                                    const OverlapOptions& opts = {}) {
  auto group = [](std::span<const Document> docs) {
    std::map<std::string, std::vector<Document>> g;
    for (const auto& d : docs) g[d.domain].push_back(d);
    return g;
  };
  const auto src = group(source_docs);
  const auto tgt = group(target_docs);
  OverlapMatrix m;
  for (const auto& [name, _] : src) m.sources.push_back(name);
  for (const auto& [name, _] : tgt) m.targets.push_back(name);
  for (const auto& [_, sdocs] : src) {
    auto& row = m.values.emplace_back();
    for (const auto& [__, tdocs] : tgt) row.push_back(ngram_overlap(sdocs, tdocs, opts));
  }
  return m;
}

// ---------------------------------------------------------------------------

// Sample Pearson correlation coefficient.
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InvalidArgument("pearson: length mismatch");
  if (xs.size() < 3) throw InvalidArgument("pearson: need at least 3 points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw InvalidArgument("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace nplm
