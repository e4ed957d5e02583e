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

// Run configuration loaded from JSON. Every field is optional; absent fields
// keep their defaults. Example:
//
//   {
//     "seed": 0,
//     "eval": {"max_length": 1024, "stride": 512, "max_pii_share": 0.5},
//     "lm": {"order": 4, "discount": 0.75, "cache_weight": 0.2, "cache_window": 1024},
//     "encoder": {"dim": 64, "decay": 0.7, "seed": 0, "max_context": 32},
//     "index": {"kind": "auto", "exact_threshold": 65536, "nlist": 256, "m": 64,
//               "bits": 8, "probe": 8, "sample_cap": 50000, "iterations": 15,
//               "keep_originals": true, "rerank": 4},
//     "blocks": {"length": 1024, "stride": 512},
//     "bm25": {"k1": 0.9, "b": 0.4},
//     "knn": {"lambda": 0.3, "k": 1024, "temperature": 20.0,
//             "domains": [{"domain": "wiki", "lambda": 0.3, "k": 4096, "temperature": 20.0}]},
//     "ric": {"variant": "basic", "k": 1}
//   }

#include <fstream>
#include <map>
#include <string>

#include "json.hpp"
#include "nplm/datastore.hpp"
#include "nplm/evaluation.hpp"
#include "nplm/kneser_ney.hpp"
#include "nplm/knn_lm.hpp"
#include "nplm/ric_lm.hpp"

namespace nplm {

struct RunConfig {
  std::uint64_t seed = 0;
  EvalProtocol eval;
  double max_pii_share = 0.5;
  KneserNeyOptions lm;
  StoreConfig store;
  KnnConfig knn;
  std::map<std::string, KnnConfig> knn_by_domain;
  RicConfig ric;

  const KnnConfig& knn_for(const std::string& domain) const {
    const auto it = knn_by_domain.find(domain);
    return it == knn_by_domain.end() ? knn : it->second;
  }

  RicConfig ric_for_store() const {
    RicConfig r = ric;
    r.block_length = store.blocks.length;
    r.stride = store.blocks.stride;
    return r;
  }
};

namespace detail {

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void read_knn(const nlohmann::json& j, KnnConfig& k) {
  read_field(j, "lambda", k.lambda);
  read_field(j, "k", k.k);
  read_field(j, "temperature", k.temperature);
  read_field(j, "tau", k.temperature);
  read_field(j, "probe", k.probe);
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig c;
  try {
    using detail::read_field;
    read_field(j, "seed", c.seed);
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      read_field(e, "max_length", c.eval.max_length);
      read_field(e, "stride", c.eval.stride);
      read_field(e, "max_pii_share", c.max_pii_share);
    }
    if (j.contains("lm")) {
      const auto& l = j.at("lm");
      read_field(l, "order", c.lm.order);
      read_field(l, "discount", c.lm.discount);
      read_field(l, "cache_weight", c.lm.cache_weight);
      read_field(l, "cache_window", c.lm.cache_window);
    }
    if (j.contains("encoder")) {
      const auto& e = j.at("encoder");
      read_field(e, "dim", c.store.encoder.dim);
      read_field(e, "decay", c.store.encoder.decay);
      read_field(e, "seed", c.store.encoder.seed);
      read_field(e, "max_context", c.store.encoder.max_context);
    }
    if (j.contains("index")) {
      const auto& i = j.at("index");
      if (i.contains("kind")) c.store.index.kind = parse_index_kind(i.at("kind").get<std::string>());
      read_field(i, "exact_threshold", c.store.index.exact_threshold);
      auto& q = c.store.index.ivfpq;
      read_field(i, "nlist", q.nlist);
      read_field(i, "m", q.m);
      read_field(i, "bits", q.bits);
      read_field(i, "probe", q.probe);
      read_field(i, "sample_cap", q.sample_cap);
      read_field(i, "iterations", q.iterations);
      read_field(i, "seed", q.seed);
      read_field(i, "keep_originals", q.keep_originals);
      read_field(i, "rerank", q.rerank);
    }
    if (j.contains("blocks")) {
      read_field(j.at("blocks"), "length", c.store.blocks.length);
      read_field(j.at("blocks"), "stride", c.store.blocks.stride);
    }
    if (j.contains("bm25")) {
      read_field(j.at("bm25"), "k1", c.store.bm25.k1);
      read_field(j.at("bm25"), "b", c.store.bm25.b);
    }
    if (j.contains("knn")) {
      const auto& k = j.at("knn");
      detail::read_knn(k, c.knn);
      if (k.contains("domains"))
        for (const auto& d : k.at("domains")) {
          KnnConfig dk = c.knn;
          detail::read_knn(d, dk);
          c.knn_by_domain[d.at("domain").get<std::string>()] = dk;
        }
    }
    if (j.contains("ric")) {
      const auto& r = j.at("ric");
      if (r.contains("variant")) c.ric.variant = parse_ric_variant(r.at("variant").get<std::string>());
      read_field(r, "k", c.ric.k);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  c.eval.validate();
  c.knn.validate();
  for (const auto& [d, k] : c.knn_by_domain) k.validate();
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  try {
    return parse_run_config(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("config " + path + ": " + e.what());
  }
}

}  // namespace nplm
