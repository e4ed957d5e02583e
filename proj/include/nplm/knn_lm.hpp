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

// kNN-LM: interpolates a parametric next-token distribution with a
// distribution over the values of the nearest stored keys.
//
//   P(y|x)     = lambda * P_LM(y|x) + (1 - lambda) * P_kNN(y|x)
//   P_kNN(y|x) = sum_j w_j [v_j == y],  w = softmax(-d_j / tau) over the k
//                retrieved neighbors (d_j squared L2).

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "nplm/datastore.hpp"
#include "nplm/distribution.hpp"

namespace nplm {

struct KnnConfig {
  std::size_t k = 1024;
  double temperature = 20.0;
  double lambda = 0.3;  // weight of the parametric term
  std::size_t probe = 0;  // IVF-PQ lists to scan; 0 = index default

  void validate() const {
    if (k == 0) throw InvalidArgument("kNN-LM: k must be >= 1");
    if (!(temperature > 0.0) || !std::isfinite(temperature)) throw InvalidArgument("kNN-LM: temperature must be > 0");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("kNN-LM: lambda must be in [0, 1]");
  }
};

// softmax(-d / tau). Subtracting the smallest distance keeps the largest
// exponent at zero, which leaves the result unchanged and avoids underflow.
inline std::vector<double> knn_weights(std::span<const Neighbor> neighbors, double temperature) {
  std::vector<double> w(neighbors.size());
  if (neighbors.empty()) return w;
  double dmin = neighbors[0].distance;
  for (const auto& n : neighbors) dmin = std::min(dmin, n.distance);
  double total = 0.0;
  for (std::size_t j = 0; j < neighbors.size(); ++j) {
    w[j] = std::exp(-(neighbors[j].distance - dmin) / temperature);
    total += w[j];
  }
  for (auto& x : w) x /= total;
  return w;
}

// Adds scale * P_kNN into `out`.
inline void accumulate_knn(const Datastore& store, std::span<const Neighbor> neighbors, std::span<const double> weights,
                           double scale, std::span<double> out) {
  for (std::size_t j = 0; j < neighbors.size(); ++j) out[store.value_of(neighbors[j].id)] += scale * weights[j];
}

// The nonparametric distribution alone. Throws StateError when nothing can
// be retrieved.
inline NextTokenDistribution knn_distribution(std::span<const TokenId> context, const Datastore& store,
                                              const StoreSnapshot& snap, std::size_t k, double temperature,
                                              const SearchParams& params = {}) {
  if (store.live_entries(snap) == 0) throw StateError("kNN distribution over an empty store");
  const auto r = store.retrieve_neighbors(context, k, snap, params);
  if (r.neighbors.empty()) throw StateError("kNN retrieval returned no neighbors");
  std::vector<double> p(store.vocabulary().size(), 0.0);
  accumulate_knn(store, r.neighbors, knn_weights(r.neighbors, temperature), 1.0, p);
  return NextTokenDistribution(std::move(p));
}

struct ScoredPrediction {
  NextTokenDistribution distribution;
  AttributionRecord attribution;
};

// Scorer bound to one model, one store and one pinned store version.
class KnnLM {
 public:
  KnnLM(const ParametricLM& model, const Datastore& store, KnnConfig cfg)
      : KnnLM(model, store, cfg, store.snapshot()) {}

  KnnLM(const ParametricLM& model, const Datastore& store, KnnConfig cfg, StoreSnapshot snap)
      : model_(&model), store_(&store), cfg_(cfg), snap_(std::move(snap)) {
    cfg_.validate();
    if (model.vocab_size() != store.vocabulary().size())
      throw InvalidArgument("kNN-LM: model and store vocabularies differ in size");
    if (!store.has_token_store()) throw StateError("kNN-LM needs a token store");
  }

  const KnnConfig& config() const noexcept { return cfg_; }
  const StoreSnapshot& snapshot() const noexcept { return snap_; }

  // Writes P(.|context) into out; when `retrieval` is given it receives the
  // neighbors and their weights (empty when the parametric term stands alone).
  void predict(std::span<const TokenId> context, std::span<double> out, NeighborRetrieval* retrieval = nullptr,
               std::vector<double>* weights = nullptr) const {
    model_->predict(context, out);
    if (retrieval) *retrieval = {snap_.version, {}};
    if (weights) weights->clear();
    if (cfg_.lambda == 1.0 || store_->live_entries(snap_) == 0) return;
    auto r = store_->retrieve_neighbors(context, cfg_.k, snap_, SearchParams{cfg_.probe});
    if (r.neighbors.empty()) return;
    const auto w = knn_weights(r.neighbors, cfg_.temperature);
    for (auto& p : out) p *= cfg_.lambda;
    accumulate_knn(*store_, r.neighbors, w, 1.0 - cfg_.lambda, out);
    if (retrieval) *retrieval = std::move(r);
    if (weights) *weights = w;
  }

  ScoredPrediction next(std::span<const TokenId> context, const AttributionOptions& opts = {}) const {
    std::vector<double> p(model_->vocab_size());
    NeighborRetrieval r;
    std::vector<double> w;
    predict(context, p, &r, &w);
    auto rec = store_->attribute(r, w, opts);
    return {NextTokenDistribution(std::move(p)), std::move(rec)};
  }

 private:
  const ParametricLM* model_;
  const Datastore* store_;
  KnnConfig cfg_;
  StoreSnapshot snap_;
};

inline ScoredPrediction knn_lm_next(std::span<const TokenId> context, const ParametricLM& model, const Datastore& store,
                                    const KnnConfig& cfg, const AttributionOptions& opts = {}) {
  return KnnLM(model, store, cfg).next(context, opts);
}

}  // namespace nplm
