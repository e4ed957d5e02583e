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

// Nonparametric datastores with provenance, attribution and opt-out.
//
// A Datastore holds the tokenized documents plus up to two retrieval
// structures over them:
//   * the token store: one entry per token position. Entry id e is the global
//     token position; its value is the token and its key is the encoding of
//     begin-of-text followed by the document prefix before the token;
//   * the block store: overlapping token blocks of length L every S tokens
//     (the last block of a document ends at the document end), indexed by
//     BM25.
//
// Every opt_out publishes a new (version, tombstones, BM25 statistics)
// snapshot atomically. Readers pin a snapshot for the duration of a run.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "nplm/bm25.hpp"
#include "nplm/document.hpp"
#include "nplm/encoder.hpp"
#include "nplm/index_io.hpp"
#include "nplm/tokenizer.hpp"
#include "nplm/vocabulary.hpp"

namespace nplm {

enum class IndexKind { kAuto, kFlat, kIvfPq };

inline std::string_view to_string(IndexKind k) {
  switch (k) {
    case IndexKind::kAuto: return "auto";
    case IndexKind::kFlat: return "flat";
    case IndexKind::kIvfPq: return "ivfpq";
  }
  return "auto";
}

inline IndexKind parse_index_kind(std::string_view s) {
  if (s == "auto") return IndexKind::kAuto;
  if (s == "flat" || s == "exact") return IndexKind::kFlat;
  if (s == "ivfpq") return IndexKind::kIvfPq;
  throw InvalidArgument("unknown index kind: " + std::string(s));
}

struct IndexConfig {
  IndexKind kind = IndexKind::kAuto;
  // kAuto builds an exact index up to this many entries and IVF-PQ above.
  std::size_t exact_threshold = 65'536;
  IvfPqConfig ivfpq;
};

struct BlockConfig {
  std::size_t length = 1024;
  std::size_t stride = 512;
};

struct StoreConfig {
  bool token_store = true;
  bool block_store = true;
  EncoderConfig encoder;
  IndexConfig index;
  BlockConfig blocks;
  Bm25Params bm25;
};

struct StoredDocument {
  std::string id;
  std::string domain;
  std::string license_tag;
  LicenseClass license_class = LicenseClass::kOther;
  std::uint64_t token_begin = 0, token_end = 0;  // global token positions
  std::uint64_t block_begin = 0, block_end = 0;  // block ids
  bool opted_out = false;

  std::uint64_t length() const noexcept { return token_end - token_begin; }
};

struct Provenance {
  std::string document_id;
  std::uint64_t offset = 0;  // token offset within the document
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct TokenEntry {
  VectorId id = 0;
  TokenId value = 0;
  Provenance provenance;
};

struct Block {
  std::uint64_t id = 0;
  std::uint32_t document = 0;  // index into documents()
  std::uint64_t start = 0;     // token offset within the document
  std::uint32_t length = 0;
  std::optional<std::uint64_t> successor;
};

struct StoreSnapshot {
  std::uint64_t version = 0;
  std::shared_ptr<const Tombstones> dead_entries;
  std::shared_ptr<const Bm25Index::Stats> block_stats;
};

struct NeighborRetrieval {
  std::uint64_t version = 0;
  std::vector<Neighbor> neighbors;
};

struct BlockRetrieval {
  std::uint64_t version = 0;
  std::vector<ScoredBlock> blocks;
};

struct AttributionItem {
  Provenance provenance;
  std::uint64_t item_id = 0;  // entry id (kNN) or block id (RIC)
  double score = 0.0;         // squared distance (kNN) or BM25 score (RIC)
  double weight = 0.0;
  std::optional<TokenId> value;  // stored continuation token (kNN only)
  std::string text;
};

struct AttributionRecord {
  enum class Kind { kNone, kKnn, kRic };
  Kind kind = Kind::kNone;
  std::uint64_t store_version = 0;
  std::vector<AttributionItem> items;

  bool empty() const noexcept { return items.empty(); }
  double total_weight() const {
    double s = 0.0;
    for (const auto& i : items) s += i.weight;
    return s;
  }
};

struct AttributionOptions {
  bool include_text = true;
  std::size_t context_tokens = 12;  // kNN: prefix tokens shown before the value
  std::size_t block_tokens = 48;    // RIC: leading block tokens shown
};

struct OptOutSelector {
  std::vector<std::string> document_ids;
  std::optional<std::string> domain;
  std::optional<LicenseClass> license_class;

  bool matches(const StoredDocument& d) const {
    return (domain && d.domain == *domain) || (license_class && d.license_class == *license_class);
  }
};

struct OptOutResult {
  std::size_t documents_removed = 0;
  std::size_t unknown_ids = 0;
  std::uint64_t version = 0;
};

struct StoreStats {
  std::uint64_t documents = 0;
  std::uint64_t tokens = 0;  // live token entries
  std::uint64_t blocks = 0;  // live blocks
  std::uint64_t version = 0;
};

class Datastore {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  // `trained_index`, when given, supplies the (already trained) index
  // configuration; otherwise one is chosen and trained from cfg.index.
  static Datastore build(std::span<const Document> docs, const Vocabulary& vocab, const StoreConfig& cfg = {},
                         const VectorIndex* trained_index = nullptr) {
    if (docs.empty()) throw InvalidArgument("build_store: empty corpus");
    if (!cfg.token_store && !cfg.block_store) throw InvalidArgument("build_store: nothing to build");
    if (cfg.blocks.length == 0 || cfg.blocks.stride == 0 || cfg.blocks.stride > cfg.blocks.length)
      throw InvalidArgument("block store needs length > 0 and 0 < stride <= length");
    Datastore s;
    s.vocab_ = vocab;
    s.vocab_.freeze();
    s.cfg_ = cfg;
    std::unordered_set<std::string> ids;
    for (const auto& d : docs) {
      if (!ids.insert(d.id).second) throw InvalidArgument("build_store: duplicate document id " + d.id);
      const auto toks = tokenize(d.text);
      if (toks.empty()) throw InvalidArgument("build_store: document " + d.id + " has no tokens");
      StoredDocument sd{d.id, d.domain, d.license_tag, d.license_class, s.tokens_.size(), 0, 0, 0, false};
      for (const auto& t : toks) s.tokens_.push_back(s.vocab_.lookup(t));
      sd.token_end = s.tokens_.size();
      s.docs_.push_back(std::move(sd));
    }
    s.build_blocks();
    s.build_bm25();
    s.encoder_ = std::make_unique<ContextEncoder>(cfg.encoder, s.vocab_.size());
    if (cfg.token_store) s.build_token_index(trained_index);
    s.publish();
    return s;
  }

  Datastore(Datastore&&) noexcept = default;
  Datastore& operator=(Datastore&&) noexcept = default;

  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  const StoreConfig& config() const noexcept { return cfg_; }
  std::span<const StoredDocument> documents() const noexcept { return docs_; }
  bool has_token_store() const noexcept { return index_ != nullptr; }
  bool has_block_store() const noexcept { return cfg_.block_store; }
  const ContextEncoder& encoder() const { return *encoder_; }
  const VectorIndex& index() const {
    if (!index_) throw StateError("store has no token index");
    return *index_;
  }
  std::span<const Block> blocks() const noexcept { return blocks_; }
  std::uint64_t total_tokens() const noexcept { return tokens_.size(); }

  std::optional<std::size_t> find_document(std::string_view id) const {
    if (auto it = doc_index_.find(std::string(id)); it != doc_index_.end()) return it->second;
    return std::nullopt;
  }

  std::span<const TokenId> document_tokens(std::size_t doc) const {
    const auto& d = docs_.at(doc);
    return std::span<const TokenId>(tokens_).subspan(d.token_begin, d.length());
  }

  std::size_t document_of_entry(VectorId id) const {
    if (id >= tokens_.size()) throw InvalidArgument("unknown entry id " + std::to_string(id));
    const auto it = std::upper_bound(docs_.begin(), docs_.end(), id,
                                     [](VectorId v, const StoredDocument& d) { return v < d.token_begin; });
    return static_cast<std::size_t>(it - docs_.begin()) - 1;
  }

  TokenId value_of(VectorId id) const { return tokens_.at(id); }

  TokenEntry entry(VectorId id) const {
    const auto doc = document_of_entry(id);
    return {id, tokens_[id], {docs_[doc].id, id - docs_[doc].token_begin}};
  }

  std::optional<VectorId> entry_at(std::string_view document_id, std::uint64_t offset) const {
    const auto doc = find_document(document_id);
    if (!doc || offset >= docs_[*doc].length()) return std::nullopt;
    return docs_[*doc].token_begin + offset;
  }

  const Block& block(std::uint64_t id) const { return blocks_.at(id); }
  std::span<const TokenId> block_tokens(std::uint64_t id) const {
    const auto& b = blocks_.at(id);
    return std::span<const TokenId>(tokens_).subspan(docs_[b.document].token_begin + b.start, b.length);
  }

  std::uint64_t version() const {
    std::lock_guard lock(*mu_);
    return published_.version;
  }

  StoreSnapshot snapshot() const {
    std::lock_guard lock(*mu_);
    return published_;
  }

  StoreStats stats() const {
    const auto snap = snapshot();
    StoreStats st;
    st.version = snap.version;
    for (const auto& d : docs_) {
      if (d.opted_out) continue;
      ++st.documents;
      if (has_token_store()) st.tokens += d.length();
    }
    st.blocks = snap.block_stats ? snap.block_stats->live_blocks : 0;
    return st;
  }

  // Live entries in the token store under `snap`.
  std::size_t live_entries(const StoreSnapshot& snap) const {
    return index_ ? index_->stored_count() - snap.dead_entries->count() : 0;
  }

  // Nearest stored keys to the encoding of `context`.
  NeighborRetrieval retrieve_neighbors(std::span<const TokenId> context, std::size_t k, const StoreSnapshot& snap,
                                       const SearchParams& params = {}) const {
    if (!index_) throw StateError("store has no token index");
    std::vector<float> q(encoder_->dim());
    encoder_->encode(context, q);
    return {snap.version, index_->search(q, k, *snap.dead_entries, params)};
  }

  NeighborRetrieval retrieve_neighbors_for_key(std::span<const float> key, std::size_t k, const StoreSnapshot& snap,
                                               const SearchParams& params = {}) const {
    if (!index_) throw StateError("store has no token index");
    return {snap.version, index_->search(key, k, *snap.dead_entries, params)};
  }

  BlockRetrieval retrieve_blocks(std::span<const TokenId> query, std::size_t k, const StoreSnapshot& snap) const {
    if (!cfg_.block_store) throw StateError("store has no block index");
    return {snap.version, bm25_.top_k(query, k, *snap.block_stats)};
  }

  // Removes every selected document from all indexes.
  OptOutResult opt_out(const OptOutSelector& selector) {
    std::lock_guard lock(*mu_);
    OptOutResult result;
    std::vector<std::size_t> selected;
    std::unordered_set<std::size_t> chosen;
    for (const auto& id : selector.document_ids) {
      const auto doc = find_document(id);
      if (!doc) {
        ++result.unknown_ids;
        continue;
      }
      if (chosen.insert(*doc).second) selected.push_back(*doc);
    }
    for (std::size_t i = 0; i < docs_.size(); ++i)
      if (selector.matches(docs_[i]) && chosen.insert(i).second) selected.push_back(i);
    std::sort(selected.begin(), selected.end());

    std::vector<VectorId> entries;
    std::vector<std::uint64_t> block_ids;
    for (auto i : selected) {
      auto& d = docs_[i];
      if (d.opted_out) continue;
      d.opted_out = true;
      ++result.documents_removed;
      for (auto e = d.token_begin; e < d.token_end; ++e) entries.push_back(e);
      for (auto b = d.block_begin; b < d.block_end; ++b) block_ids.push_back(b);
    }
    if (result.documents_removed > 0) {
      if (index_) {
        index_->remove(entries);
        published_.dead_entries = index_->tombstones();
      }
      bm25_.remove(block_ids, block_spans());
      published_.block_stats = bm25_.stats();
      ++published_.version;
    }
    result.version = published_.version;
    return result;
  }

  // Resolves a kNN retrieval into provenance records. weights[i] belongs to
  // retrieval.neighbors[i]. Throws VersionConflict when an entry was removed
  // after the retrieval.
  AttributionRecord attribute(const NeighborRetrieval& retrieval, std::span<const double> weights,
                              const AttributionOptions& opts = {}) const {
    if (weights.size() != retrieval.neighbors.size()) throw InvalidArgument("attribute: one weight per neighbor required");
    const auto snap = snapshot();
    AttributionRecord rec{AttributionRecord::Kind::kKnn, snap.version, {}};
    if (retrieval.neighbors.empty()) rec.kind = AttributionRecord::Kind::kNone;
    for (std::size_t i = 0; i < retrieval.neighbors.size(); ++i) {
      const auto& n = retrieval.neighbors[i];
      if (n.id >= tokens_.size() || snap.dead_entries->contains(n.id))
        throw VersionConflict("entry " + std::to_string(n.id) + " was removed after retrieval (store version " +
                              std::to_string(retrieval.version) + " -> " + std::to_string(snap.version) + ")");
      const auto e = entry(n.id);
      AttributionItem item{e.provenance, n.id, n.distance, weights[i], e.value, {}};
      if (opts.include_text) {
        const auto doc = document_of_entry(n.id);
        const auto begin = std::max<std::int64_t>(static_cast<std::int64_t>(e.provenance.offset) -
                                                      static_cast<std::int64_t>(opts.context_tokens), 0);
        const auto toks = document_tokens(doc);
        item.text = render(toks.subspan(static_cast<std::size_t>(begin), e.provenance.offset - static_cast<std::size_t>(begin)));
        item.text += (item.text.empty() ? "[" : " [") + vocab_.token(e.value) + "]";
      }
      rec.items.push_back(std::move(item));
    }
    return rec;
  }

  // Resolves blocks used in context; `weights[i]` belongs to `block_ids[i]`.
  AttributionRecord attribute_blocks(std::span<const std::uint64_t> block_ids, std::span<const double> scores,
                                     std::span<const double> weights, const AttributionOptions& opts = {}) const {
    if (weights.size() != block_ids.size() || scores.size() != block_ids.size())
      throw InvalidArgument("attribute_blocks: one score and weight per block required");
    const auto snap = snapshot();
    AttributionRecord rec{block_ids.empty() ? AttributionRecord::Kind::kNone : AttributionRecord::Kind::kRic, snap.version, {}};
    for (std::size_t i = 0; i < block_ids.size(); ++i) {
      const auto id = block_ids[i];
      if (id >= blocks_.size() || snap.block_stats->removed.contains(id))
        throw VersionConflict("block " + std::to_string(id) + " was removed after retrieval");
      const auto& b = blocks_[id];
      AttributionItem item{{docs_[b.document].id, b.start}, id, scores[i], weights[i], std::nullopt, {}};
      if (opts.include_text) {
        const auto toks = block_tokens(id);
        item.text = render(toks.first(std::min<std::size_t>(toks.size(), opts.block_tokens)));
        if (toks.size() > opts.block_tokens) item.text += " ...";
      }
      rec.items.push_back(std::move(item));
    }
    return rec;
  }

  std::string render(std::span<const TokenId> toks) const {
    std::string out;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (i) out.push_back(' ');
      out += vocab_.token(toks[i]);
    }
    return out;
  }

  // Physically drops removed entries from the vector index. Requires
  // exclusive access; results are unchanged.
  void compact() {
    std::lock_guard lock(*mu_);
    if (!index_) return;
    index_->compact();
    // Compacted ids no longer exist in the index, but entry ids of removed
    // documents must stay dead for snapshot consumers.
    auto dead = std::make_shared<Tombstones>();
    for (const auto& d : docs_)
      if (d.opted_out)
        for (auto e = d.token_begin; e < d.token_end; ++e) dead->insert(e);
    published_.dead_entries = std::move(dead);
  }

  // Directory layout:
  //   manifest.json  metadata (documents, configuration, version, statistics)
  //   vocab.bin      "SIVB" u32 version, vocabulary table
  //   entries.bin    "SIEN" u32 version, u64 n, n x u32 token ids
  //   blocks.bin     "SIBK" u32 version, u64 n, per block u32 doc, u64 start,
  //                  u32 length, u64 successor (2^64-1 = none); removal bitmap
  //   index.bin      vector index ("SIIX"), present with a token store
  void save(const std::filesystem::path& dir) const {
    std::lock_guard lock(*mu_);
    std::filesystem::create_directories(dir);
    {
      auto out = open_output((dir / "vocab.bin").string());
      BinaryWriter w(out);
      w.magic("SIVB");
      w.u32(kFormatVersion);
      vocab_.save(w);
      w.check();
    }
    {
      auto out = open_output((dir / "entries.bin").string());
      BinaryWriter w(out);
      w.magic("SIEN");
      w.u32(kFormatVersion);
      w.u64(tokens_.size());
      w.u32s(tokens_);
      w.check();
    }
    {
      auto out = open_output((dir / "blocks.bin").string());
      BinaryWriter w(out);
      w.magic("SIBK");
      w.u32(kFormatVersion);
      w.u64(blocks_.size());
      for (const auto& b : blocks_) {
        w.u32(b.document);
        w.u64(b.start);
        w.u32(b.length);
        w.u64(b.successor.value_or(~std::uint64_t{0}));
      }
      published_.block_stats->removed.save(w);
      w.check();
    }
    if (index_) save_index(*index_, (dir / "index.bin").string());
    else std::filesystem::remove(dir / "index.bin");
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw IoError("cannot write store manifest in " + dir.string());
    out << manifest_json().dump(2) << '\n';
  }

  static Datastore load(const std::filesystem::path& dir) {
    std::ifstream min(dir / "manifest.json");
    if (!min) throw IoError("not a datastore directory (no manifest.json): " + dir.string());
    nlohmann::json m;
    try {
      m = nlohmann::json::parse(min);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("store manifest: ") + e.what());
    }
    if (m.value("format", "") != "nplm-store" || m.value("format_version", 0u) != kFormatVersion)
      throw FormatError("unsupported store manifest");
    Datastore s;
    {
      auto in = open_input((dir / "vocab.bin").string());
      BinaryReader r(in);
      r.expect_magic("SIVB");
      if (r.u32() != kFormatVersion) throw FormatError("unsupported vocab version");
      s.vocab_ = Vocabulary::load(r);
    }
    {
      auto in = open_input((dir / "entries.bin").string());
      BinaryReader r(in);
      r.expect_magic("SIEN");
      if (r.u32() != kFormatVersion) throw FormatError("unsupported entries version");
      s.tokens_.resize(r.count(std::uint64_t{1} << 36, "entry"));
      r.u32s(s.tokens_);
    }
    s.cfg_ = config_from_json(m);
    for (const auto& jd : m.at("documents")) {
      StoredDocument d;
      d.id = jd.at("id").get<std::string>();
      d.domain = jd.at("domain").get<std::string>();
      d.license_tag = jd.at("license").get<std::string>();
      d.license_class = parse_license_class(jd.at("license_class").get<std::string>()).value_or(LicenseClass::kOther);
      d.token_begin = jd.at("token_begin").get<std::uint64_t>();
      d.token_end = jd.at("token_end").get<std::uint64_t>();
      d.block_begin = jd.at("block_begin").get<std::uint64_t>();
      d.block_end = jd.at("block_end").get<std::uint64_t>();
      d.opted_out = jd.at("opted_out").get<bool>();
      if (d.token_end < d.token_begin || d.token_end > s.tokens_.size()) throw FormatError("document range out of bounds");
      s.docs_.push_back(std::move(d));
    }
    if (m.at("vocab_fingerprint").get<std::string>() != fingerprint_hex(s.vocab_.fingerprint()))
      throw FormatError("store vocabulary does not match its manifest");
    Tombstones removed_blocks;
    {
      auto in = open_input((dir / "blocks.bin").string());
      BinaryReader r(in);
      r.expect_magic("SIBK");
      if (r.u32() != kFormatVersion) throw FormatError("unsupported blocks version");
      const auto n = r.count(std::uint64_t{1} << 34, "block");
      s.blocks_.resize(n);
      for (std::uint64_t i = 0; i < n; ++i) {
        auto& b = s.blocks_[i];
        b.id = i;
        b.document = r.u32();
        b.start = r.u64();
        b.length = r.u32();
        const auto succ = r.u64();
        if (succ != ~std::uint64_t{0}) b.successor = succ;
        if (b.document >= s.docs_.size() || b.start + b.length > s.docs_[b.document].length())
          throw FormatError("block out of bounds");
      }
      removed_blocks = Tombstones::load(r);
    }
    s.rebuild_doc_index();
    s.build_bm25();
    s.bm25_.restore_removed(removed_blocks, s.block_spans());
    s.encoder_ = std::make_unique<ContextEncoder>(s.cfg_.encoder, s.vocab_.size());
    if (m.at("has_token_store").get<bool>()) {
      s.index_ = load_index((dir / "index.bin").string());
      if (s.index_->dim() != s.encoder_->dim()) throw FormatError("index dimension does not match encoder");
    }
    s.publish();
    s.published_.version = m.at("version").get<std::uint64_t>();
    return s;
  }

  nlohmann::json manifest_json() const {
    nlohmann::json m;
    m["format"] = "nplm-store";
    m["format_version"] = kFormatVersion;
    m["version"] = published_.version;
    m["vocab_fingerprint"] = fingerprint_hex(vocab_.fingerprint());
    m["has_token_store"] = index_ != nullptr;
    m["has_block_store"] = cfg_.block_store;
    m["encoder"] = {{"dim", cfg_.encoder.dim}, {"decay", cfg_.encoder.decay}, {"seed", cfg_.encoder.seed},
                    {"max_context", cfg_.encoder.max_context}};
    const auto& iv = cfg_.index.ivfpq;
    m["index"] = {{"kind", std::string(to_string(cfg_.index.kind))},
                  {"exact_threshold", cfg_.index.exact_threshold},
                  {"built", index_ ? (index_->type() == IndexType::kFlat ? "flat" : "ivfpq") : "none"},
                  {"nlist", iv.nlist}, {"m", iv.m}, {"bits", iv.bits}, {"probe", iv.probe},
                  {"sample_cap", iv.sample_cap}, {"iterations", iv.iterations}, {"seed", iv.seed},
                  {"keep_originals", iv.keep_originals}, {"rerank", iv.rerank}};
    m["blocks"] = {{"length", cfg_.blocks.length}, {"stride", cfg_.blocks.stride}};
    m["bm25"] = {{"k1", cfg_.bm25.k1}, {"b", cfg_.bm25.b}};
    auto docs = nlohmann::json::array();
    for (const auto& d : docs_)
      docs.push_back({{"id", d.id}, {"domain", d.domain}, {"license", d.license_tag},
                      {"license_class", std::string(to_string(d.license_class))}, {"token_begin", d.token_begin},
                      {"token_end", d.token_end}, {"block_begin", d.block_begin}, {"block_end", d.block_end},
                      {"opted_out", d.opted_out}});
    m["documents"] = std::move(docs);
    std::uint64_t live_tokens = 0, live_docs = 0;
    for (const auto& d : docs_)
      if (!d.opted_out) {
        ++live_docs;
        live_tokens += d.length();
      }
    m["stats"] = {{"documents", live_docs},
                  {"tokens", index_ ? live_tokens : 0},
                  {"blocks", published_.block_stats ? published_.block_stats->live_blocks : 0}};
    return m;
  }

  static std::string fingerprint_hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
  }

 private:
  Datastore() : mu_(std::make_unique<std::mutex>()) {}

  static StoreConfig config_from_json(const nlohmann::json& m) {
    StoreConfig c;
    const auto& e = m.at("encoder");
    c.encoder = {e.at("dim").get<std::size_t>(), e.at("decay").get<double>(), e.at("seed").get<std::uint64_t>(),
                 e.at("max_context").get<std::size_t>()};
    const auto& i = m.at("index");
    c.index.kind = parse_index_kind(i.at("kind").get<std::string>());
    c.index.exact_threshold = i.at("exact_threshold").get<std::size_t>();
    c.index.ivfpq = {i.at("nlist").get<std::size_t>(), i.at("m").get<std::size_t>(), i.at("bits").get<std::size_t>(),
                     i.at("probe").get<std::size_t>(), i.at("sample_cap").get<std::size_t>(),
                     i.at("iterations").get<std::size_t>(), i.at("seed").get<std::uint64_t>(),
                     i.at("keep_originals").get<bool>(), i.at("rerank").get<std::size_t>()};
    c.blocks = {m.at("blocks").at("length").get<std::size_t>(), m.at("blocks").at("stride").get<std::size_t>()};
    c.bm25 = {m.at("bm25").at("k1").get<double>(), m.at("bm25").at("b").get<double>()};
    c.token_store = m.at("has_token_store").get<bool>();
    c.block_store = m.at("has_block_store").get<bool>();
    return c;
  }

  void rebuild_doc_index() {
    doc_index_.clear();
    for (std::size_t i = 0; i < docs_.size(); ++i) doc_index_.emplace(docs_[i].id, i);
  }

  // Starts at 0, S, 2S, ... up to the first block that reaches the end of the
  // document, so a document of n tokens yields ceil(max(n - L, 0) / S) + 1
  // blocks.
  void build_blocks() {
    rebuild_doc_index();
    blocks_.clear();
    if (!cfg_.block_store) {
      for (auto& d : docs_) d.block_begin = d.block_end = 0;
      return;
    }
    const auto L = cfg_.blocks.length, S = cfg_.blocks.stride;
    for (std::size_t di = 0; di < docs_.size(); ++di) {
      auto& d = docs_[di];
      d.block_begin = blocks_.size();
      const auto n = d.length();
      for (std::uint64_t start = 0;; start += S) {
        const auto len = std::min<std::uint64_t>(L, n - start);
        blocks_.push_back({blocks_.size(), static_cast<std::uint32_t>(di), start, static_cast<std::uint32_t>(len), std::nullopt});
        if (start + len >= n) break;
      }
      d.block_end = blocks_.size();
      for (auto b = d.block_begin; b + 1 < d.block_end; ++b) blocks_[b].successor = b + 1;
    }
  }

  std::vector<std::span<const TokenId>> block_spans() const {
    std::vector<std::span<const TokenId>> spans;
    spans.reserve(blocks_.size());
    for (const auto& b : blocks_) spans.push_back(block_tokens(b.id));
    return spans;
  }

  void build_bm25() { bm25_ = Bm25Index(block_spans(), vocab_.size(), cfg_.bm25); }

  void build_token_index(const VectorIndex* trained) {
    const std::size_t dim = encoder_->dim();
    const std::size_t n = tokens_.size();
    std::vector<float> keys(n * dim);
    std::vector<TokenId> context;
    for (const auto& d : docs_) {
      context.assign(1, kBeginOfText);
      for (auto e = d.token_begin; e < d.token_end; ++e) {
        const auto window = std::span<const TokenId>(context).last(std::min(context.size(), cfg_.encoder.max_context));
        encoder_->encode(window, std::span<float>(keys).subspan(e * dim, dim));
        context.push_back(tokens_[e]);
      }
    }
    if (trained) {
      if (trained->dim() != dim) throw InvalidArgument("trained index dimension does not match encoder");
      index_ = trained->empty_clone();
    } else {
      const bool exact = cfg_.index.kind == IndexKind::kFlat ||
                         (cfg_.index.kind == IndexKind::kAuto && n <= cfg_.index.exact_threshold);
      if (exact) {
        index_ = std::make_unique<FlatIndex>(dim);
      } else {
        auto ivf = std::make_unique<IvfPqIndex>(dim, cfg_.index.ivfpq);
        ivf->train(keys);
        index_ = std::move(ivf);
      }
    }
    for (std::size_t e = 0; e < n; ++e) index_->add(e, std::span<const float>(keys).subspan(e * dim, dim));
  }

  void publish() {
    published_.dead_entries = index_ ? index_->tombstones() : std::make_shared<const Tombstones>();
    published_.block_stats = bm25_.stats();
  }

  Vocabulary vocab_;
  StoreConfig cfg_;
  std::vector<StoredDocument> docs_;
  std::unordered_map<std::string, std::size_t> doc_index_;
  std::vector<TokenId> tokens_;
  std::vector<Block> blocks_;
  Bm25Index bm25_;
  std::unique_ptr<ContextEncoder> encoder_;
  std::unique_ptr<VectorIndex> index_;
  std::unique_ptr<std::mutex> mu_;
  StoreSnapshot published_;
};

}  // namespace nplm
