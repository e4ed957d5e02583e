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

// Sliding-window perplexity.
//
// Windows of at most max_length tokens start every `stride` tokens. Each
// token is scored once: the first window scores everything, later windows
// only the tokens past the previous window's end. A scored token's context
// is the part of its window before it. Retrieval scorers see the window
// prefix that is not being scored (empty for the first window) before the
// window's tokens are predicted.

#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nplm/document.hpp"
#include "nplm/knn_lm.hpp"
#include "nplm/ric_lm.hpp"
#include "nplm/tokenizer.hpp"

namespace nplm {

struct EvalProtocol {
  std::size_t max_length = 1024;
  std::size_t stride = 512;

  void validate() const {
    if (max_length < 2 || stride == 0 || stride > max_length)
      throw InvalidArgument("eval protocol needs max_length >= 2 and 0 < stride <= max_length");
  }
};

// Evaluation text: documents joined with a begin-of-text token before each.
// Begin-of-text and PII tokens are in the stream but not scored.
struct EvalStream {
  std::vector<TokenId> tokens;
  std::vector<std::uint8_t> scored;
  std::size_t documents = 0;
  std::size_t skipped_documents = 0;  // dropped for PII share
  std::size_t pii_tokens = 0;         // unscored PII tokens in kept documents

  std::size_t scored_count() const {
    std::size_t n = 0;
    for (auto s : scored) n += s;
    return n;
  }
};

inline void append_document(EvalStream& s, std::span<const TokenId> ids, std::span<const std::uint8_t> pii = {}) {
  s.tokens.push_back(kBeginOfText);
  s.scored.push_back(0);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const bool is_pii = !pii.empty() && pii[i];
    s.tokens.push_back(ids[i]);
    s.scored.push_back(is_pii ? 0 : 1);
    s.pii_tokens += is_pii;
  }
  ++s.documents;
}

inline EvalStream make_eval_stream(std::span<const TokenId> ids) {
  EvalStream s;
  append_document(s, ids);
  return s;
}

// Documents whose PII tokens exceed `max_pii_share` of their tokens are
// dropped; a token is PII when its characters overlap any PII span.
inline EvalStream make_eval_stream(std::span<const Document> docs, const Vocabulary& vocab, double max_pii_share = 0.5) {
  EvalStream s;
  for (const auto& d : docs) {
    const auto toks = tokenize_with_offsets(d.text);
    if (toks.empty()) continue;
    std::vector<TokenId> ids;
    std::vector<std::uint8_t> pii(toks.size(), 0);
    std::size_t pii_count = 0, span = 0;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      ids.push_back(vocab.lookup(toks[i].text));
      while (span < d.pii_spans.size() && d.pii_spans[span].end <= toks[i].begin) ++span;
      if (span < d.pii_spans.size() && d.pii_spans[span].begin < toks[i].end) {
        pii[i] = 1;
        ++pii_count;
      }
    }
    if (static_cast<double>(pii_count) > max_pii_share * static_cast<double>(toks.size())) {
      ++s.skipped_documents;
      continue;
    }
    append_document(s, ids, pii);
  }
  return s;
}

// A next-token scorer as seen by the evaluation loop.
class WindowScorer {
 public:
  virtual ~WindowScorer() = default;
  virtual std::string method() const = 0;
  virtual std::size_t vocab_size() const = 0;
  // Called once per window with the window's unscored prefix.
  virtual void begin_window(std::span<const TokenId> /*prefix*/) {}
  virtual void predict(std::span<const TokenId> context, std::span<double> out) = 0;
};

class ParametricScorer final : public WindowScorer {
 public:
  explicit ParametricScorer(const ParametricLM& model) : model_(&model) {}
  std::string method() const override { return "parametric"; }
  std::size_t vocab_size() const override { return model_->vocab_size(); }
  void predict(std::span<const TokenId> context, std::span<double> out) override { model_->predict(context, out); }

 private:
  const ParametricLM* model_;
};

// Retrieves for every scored position.
class KnnScorer final : public WindowScorer {
 public:
  explicit KnnScorer(KnnLM lm) : lm_(std::move(lm)) {}
  std::string method() const override { return "knn"; }
  std::size_t vocab_size() const override { return vocab_; }
  void predict(std::span<const TokenId> context, std::span<double> out) override { lm_.predict(context, out); }
  void set_vocab_size(std::size_t v) { vocab_ = v; }

 private:
  KnnLM lm_;
  std::size_t vocab_ = 0;
};

// Retrieves once per window.
class RicScorer final : public WindowScorer {
 public:
  explicit RicScorer(RicLM lm) : lm_(std::move(lm)) {}
  std::string method() const override { return "ric_" + std::string(to_string(lm_.config().variant)); }
  std::size_t vocab_size() const override { return vocab_; }
  void begin_window(std::span<const TokenId> prefix) override { retrieval_ = lm_.retrieve(prefix); }
  void predict(std::span<const TokenId> context, std::span<double> out) override { lm_.predict(retrieval_, context, out); }
  void set_vocab_size(std::size_t v) { vocab_ = v; }
  const RicRetrieval& last_retrieval() const noexcept { return retrieval_; }

 private:
  RicLM lm_;
  RicRetrieval retrieval_;
  std::size_t vocab_ = 0;
};

inline std::unique_ptr<WindowScorer> make_parametric_scorer(const ParametricLM& model) {
  return std::make_unique<ParametricScorer>(model);
}

inline std::unique_ptr<WindowScorer> make_knn_scorer(const ParametricLM& model, const Datastore& store,
                                                     const KnnConfig& cfg, std::optional<StoreSnapshot> snap = {}) {
  auto s = std::make_unique<KnnScorer>(snap ? KnnLM(model, store, cfg, *snap) : KnnLM(model, store, cfg));
  s->set_vocab_size(model.vocab_size());
  return s;
}

inline std::unique_ptr<WindowScorer> make_ric_scorer(const ParametricLM& model, const Datastore& store,
                                                     const RicConfig& cfg, std::optional<StoreSnapshot> snap = {}) {
  auto s = std::make_unique<RicScorer>(snap ? RicLM(model, store, cfg, *snap) : RicLM(model, store, cfg));
  s->set_vocab_size(model.vocab_size());
  return s;
}

struct PerplexityResult {
  double perplexity = 0.0;
  double mean_nll = 0.0;  // nats per scored token
  std::size_t scored_tokens = 0;
  std::size_t windows = 0;
  double seconds = 0.0;

  double tokens_per_second() const { return seconds > 0.0 ? static_cast<double>(scored_tokens) / seconds : 0.0; }
};

// Receives every predicted distribution with the position it was made for.
using DistributionObserver = std::function<void(std::size_t position, std::span<const double> distribution)>;

inline PerplexityResult perplexity_with_retrieval(const EvalStream& stream, WindowScorer& scorer,
                                                  const EvalProtocol& protocol = {},
                                                  const DistributionObserver& observer = {}) {
  protocol.validate();
  if (stream.tokens.size() != stream.scored.size()) throw InvalidArgument("eval stream mask size mismatch");
  const auto start = std::chrono::steady_clock::now();
  const std::span<const TokenId> toks(stream.tokens);
  const std::size_t n = toks.size();
  std::vector<double> p(scorer.vocab_size());
  double nll = 0.0;
  PerplexityResult res;
  std::size_t prev_end = 0;
  for (std::size_t begin = 0; begin < n; begin += protocol.stride) {
    const std::size_t end = std::min(begin + protocol.max_length, n);
    const std::size_t first_scored = prev_end;  // positions [prev_end, end) are new
    ++res.windows;
    scorer.begin_window(toks.subspan(begin, first_scored - begin));
    // With stride == max_length a window's first token is new and sees an
    // empty prefix; it is still scored so that no position is skipped.
    for (std::size_t pos = first_scored; pos < end; ++pos) {
      if (!stream.scored[pos]) continue;
      scorer.predict(toks.subspan(begin, pos - begin), p);
      if (observer) observer(pos, p);
      const double q = p.at(toks[pos]);
      if (!(q > 0.0)) throw StateError("scorer assigned zero probability to an observed token");
      nll -= std::log(q);
      ++res.scored_tokens;
    }
    prev_end = end;
    if (end == n) break;
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (res.scored_tokens == 0) throw InvalidArgument("evaluation text has no scored tokens");
  res.mean_nll = nll / static_cast<double>(res.scored_tokens);
  res.perplexity = std::exp(res.mean_nll);
  return res;
}

}  // namespace nplm
