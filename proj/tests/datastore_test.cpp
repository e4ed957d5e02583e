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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "nplm/bm25.hpp"
#include "nplm/datastore.hpp"
#include "test_support.hpp"

namespace nplm {
namespace {

using testing::flat_config;
using testing::random_docs;
using testing::vocab_of;

// ---------------------------------------------------------------------------
// BM25 on the three-block toy corpus; expected values from
// tests/oracles/bm25_oracle.py.

class Bm25Toy : public ::testing::Test {
 protected:
  void SetUp() override {
    for (const char* text : {"the cat sat on the mat", "the dog sat on the log", "a cat and a dog and a zebra zebra"}) {
      std::vector<TokenId> ids;
      for (const auto& t : tokenize(text)) ids.push_back(vocab_.add(t));
      blocks_.push_back(ids);
    }
    vocab_.add("unicorn");
    index_ = Bm25Index(spans(), vocab_.size());
  }
  std::vector<std::span<const TokenId>> spans() const {
    return std::vector<std::span<const TokenId>>(blocks_.begin(), blocks_.end());
  }
  std::vector<TokenId> q(const char* text) const { return vocab_.lookup(std::span<const std::string>(tokenize(text))); }
  double score(const std::vector<ScoredBlock>& r, std::uint64_t id) const {
    for (const auto& b : r)
      if (b.id == id) return b.score;
    return 0.0;
  }

  Vocabulary vocab_;
  std::vector<std::vector<TokenId>> blocks_;
  Bm25Index index_;
};

TEST_F(Bm25Toy, ScoresMatchHandComputation) {
  const auto r = index_.top_k(q("zebra zebra cat"), 3);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].id, 2u);
  EXPECT_NEAR(r[0].score, 2.9282697430409037, 1e-9);
  EXPECT_NEAR(r[1].score, 0.48307946437158295, 1e-9);

  const auto sm = index_.top_k(q("sat mat"), 3);
  EXPECT_NEAR(score(sm, 0), 1.491196084545923, 1e-9);
  EXPECT_NEAR(score(sm, 1), 0.48307946437158295, 1e-9);
  EXPECT_EQ(sm.size(), 2u);

  const auto td = index_.top_k(q("the dog"), 3);
  ASSERT_EQ(td.size(), 3u);
  EXPECT_EQ(td[0].id, 1u);
  EXPECT_NEAR(score(td, 0), 0.626985784249577, 1e-9);
  EXPECT_NEAR(score(td, 1), 1.11006524862116, 1e-9);
  EXPECT_NEAR(score(td, 2), 0.4458664956468105, 1e-9);
}

TEST_F(Bm25Toy, AbsentTermsContributeNothing) {
  EXPECT_TRUE(index_.top_k(q("unicorn"), 3).empty());
  EXPECT_TRUE(index_.top_k(q("never seen words"), 3).empty());
  EXPECT_TRUE(index_.top_k({}, 3).empty());
  const auto a = index_.top_k(q("zebra cat"), 3), b = index_.top_k(q("zebra unicorn cat"), 3);
  EXPECT_EQ(a, b);
}

TEST_F(Bm25Toy, RemovalEqualsRebuild) {
  const std::vector<std::uint64_t> gone = {1};
  index_.remove(gone, spans());
  const auto r = index_.top_k(q("the dog"), 3);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_NEAR(score(r, 0), 0.9313858861838019, 1e-9);
  EXPECT_NEAR(score(r, 2), 0.667839575590211, 1e-9);
  EXPECT_EQ(index_.stats()->live_blocks, 2u);
}

TEST(Bm25, TiesBreakByBlockId) {
  std::vector<std::vector<TokenId>> blocks = {{5, 6}, {7, 8}, {5, 6}, {5, 6}};
  Bm25Index index(std::vector<std::span<const TokenId>>(blocks.begin(), blocks.end()), 10);
  const std::vector<TokenId> query = {5};
  const auto r = index.top_k(query, 2);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].id, 0u);
  EXPECT_EQ(r[1].id, 2u);
  EXPECT_EQ(r[0].score, r[1].score);
}

TEST(Bm25, RepeatedUniqueTermRanksItsBlockFirst) {
  const auto docs = random_docs(30, 20, 40, 400, 1);
  auto vocab = vocab_of(docs);
  std::vector<std::vector<TokenId>> blocks;
  for (const auto& d : docs) blocks.push_back(vocab.lookup(std::span<const std::string>(tokenize(d.text))));
  const auto unique = vocab.add("uniqueterm");
  blocks[17].push_back(unique);
  Bm25Index index(std::vector<std::span<const TokenId>>(blocks.begin(), blocks.end()), vocab.size());
  // Unique term plus the most frequent word in the corpus.
  std::vector<std::size_t> df(vocab.size());
  for (const auto& b : blocks)
    for (auto t : std::set<TokenId>(b.begin(), b.end())) ++df[t];
  const auto common = static_cast<TokenId>(std::ranges::max_element(df) - df.begin());
  const std::vector<TokenId> query = {common, unique, unique};
  EXPECT_EQ(index.top_k(query, 1)[0].id, 17u);
}

// ---------------------------------------------------------------------------
// Blocks

std::size_t expected_blocks(std::size_t n, std::size_t L, std::size_t S) {
  return (n > L ? (n - L + S - 1) / S : 0) + 1;
}

TEST(Blocks, SlidingWindowLayout) {
  std::vector<std::string> toks;
  for (int i = 0; i < 2048; ++i) toks.push_back("w" + std::to_string(i % 300));
  std::vector<Document> docs = {Document::make("long", synth::PhraseModel::join(toks)), Document::make("short", "a b c")};
  StoreConfig cfg = flat_config(1024, 512);
  cfg.token_store = false;
  const auto store = Datastore::build(docs, vocab_of(docs), cfg);
  ASSERT_EQ(store.blocks().size(), 4u);  // 3 for the long document, 1 for the short one
  EXPECT_EQ(store.block(0).start, 0u);
  EXPECT_EQ(store.block(1).start, 512u);
  EXPECT_EQ(store.block(2).start, 1024u);
  EXPECT_EQ(store.block(2).length, 1024u);
  EXPECT_EQ(store.block(0).successor, 1u);
  EXPECT_EQ(store.block(1).successor, 2u);
  EXPECT_FALSE(store.block(2).successor);
  EXPECT_EQ(store.block(3).length, 3u);
  EXPECT_FALSE(store.block(3).successor);
}

TEST(Blocks, CountFormulaAndOverlap) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t L = 4 + rng.index(40), S = 1 + rng.index(L);
    const auto docs = random_docs(8, 1, 200, 300, 100 + trial);
    StoreConfig cfg = flat_config(L, S);
    cfg.token_store = false;
    const auto store = Datastore::build(docs, vocab_of(docs), cfg);
    std::size_t expected = 0;
    for (std::size_t d = 0; d < docs.size(); ++d) {
      const auto n = store.documents()[d].length();
      expected += expected_blocks(n, L, S);
      const auto& sd = store.documents()[d];
      for (auto b = sd.block_begin; b < sd.block_end; ++b) {
        const auto& blk = store.block(b);
        EXPECT_EQ(blk.start, (b - sd.block_begin) * S);
        if (blk.successor) {
          const auto& next = store.block(*blk.successor);
          EXPECT_EQ(next.document, blk.document);
          EXPECT_EQ(blk.start + blk.length - next.start, L - S);  // overlap
        } else {
          EXPECT_EQ(blk.start + blk.length, n);
        }
      }
    }
    EXPECT_EQ(store.blocks().size(), expected);
  }
}

TEST(Blocks, InvalidParameters) {
  const auto docs = random_docs(2, 5, 10, 50, 1);
  EXPECT_THROW(Datastore::build(docs, vocab_of(docs), flat_config(0, 1)), InvalidArgument);
  EXPECT_THROW(Datastore::build(docs, vocab_of(docs), flat_config(8, 9)), InvalidArgument);
  EXPECT_THROW(Datastore::build(docs, vocab_of(docs), flat_config(8, 0)), InvalidArgument);
}

// ---------------------------------------------------------------------------
// Token store

TEST(TokenStore, OneEntryPerToken) {
  const std::vector<Document> docs = {Document::make("d", "one two three four five")};
  const auto store = Datastore::build(docs, vocab_of(docs), flat_config());
  EXPECT_EQ(store.index().stored_count(), 5u);
  for (std::uint64_t off = 0; off < 5; ++off) {
    const auto e = store.entry(*store.entry_at("d", off));
    EXPECT_EQ(e.provenance, (Provenance{"d", off}));
    EXPECT_EQ(store.vocabulary().token(e.value), tokenize("one two three four five")[off]);
  }
  EXPECT_FALSE(store.entry_at("d", 5));
  EXPECT_FALSE(store.entry_at("nope", 0));
}

TEST(TokenStore, KeysEncodePrefixWithBeginOfText) {
  const std::vector<Document> docs = {Document::make("d", "x y z")};
  const auto store = Datastore::build(docs, vocab_of(docs), flat_config());
  const auto& flat = dynamic_cast<const FlatIndex&>(store.index());
  const auto& v = store.vocabulary();
  const std::vector<TokenId> prefix = {kBeginOfText, v.lookup("x"), v.lookup("y")};
  const auto expected = store.encoder().encode(prefix);
  const auto got = flat.vector(2);
  EXPECT_TRUE(std::equal(got.begin(), got.end(), expected.begin()));
  const std::vector<TokenId> bos = {kBeginOfText};
  const auto first = flat.vector(0);
  EXPECT_TRUE(std::ranges::equal(first, store.encoder().encode(bos)));
}

TEST(TokenStore, IdenticalDocumentsShareKeysNotProvenance) {
  const std::vector<Document> docs = {Document::make("a", "p q r s"), Document::make("b", "p q r s")};
  const auto store = Datastore::build(docs, vocab_of(docs), flat_config());
  const auto& flat = dynamic_cast<const FlatIndex&>(store.index());
  for (std::uint64_t off = 0; off < 4; ++off) {
    const auto ea = *store.entry_at("a", off), eb = *store.entry_at("b", off);
    EXPECT_TRUE(std::ranges::equal(flat.vector(ea), flat.vector(eb)));
    EXPECT_NE(store.entry(ea).provenance, store.entry(eb).provenance);
  }
}

TEST(TokenStore, EntryRoundTripOverRandomDocument) {
  const auto docs = random_docs(5, 50, 120, 500, 9);
  const auto store = Datastore::build(docs, vocab_of(docs), flat_config());
  std::size_t total = 0;
  for (const auto& d : docs) {
    const auto toks = tokenize(d.text);
    total += toks.size();
    for (std::uint64_t off = 0; off < toks.size(); ++off)
      ASSERT_EQ(store.vocabulary().token(store.entry(*store.entry_at(d.id, off)).value), toks[off]);
  }
  EXPECT_EQ(store.index().stored_count(), total);
  EXPECT_EQ(store.stats().tokens, total);
}

TEST(TokenStore, BuildErrors) {
  EXPECT_THROW(Datastore::build(std::vector<Document>{}, Vocabulary{}, flat_config()), InvalidArgument);
  const std::vector<Document> empty_text = {Document::make("e", " ")};
  EXPECT_THROW(Datastore::build(empty_text, Vocabulary{}, flat_config()), InvalidArgument);
  const std::vector<Document> dup = {Document::make("a", "x"), Document::make("a", "y")};
  EXPECT_THROW(Datastore::build(dup, vocab_of(dup), flat_config()), InvalidArgument);
}

TEST(TokenStore, AutoIndexChoice) {
  const auto docs = random_docs(4, 100, 100, 300, 2);
  StoreConfig cfg = flat_config();
  cfg.index.kind = IndexKind::kAuto;
  cfg.index.exact_threshold = 1000;
  EXPECT_EQ(Datastore::build(docs, vocab_of(docs), cfg).index().type(), IndexType::kFlat);
  cfg.index.exact_threshold = 100;
  cfg.index.ivfpq = {8, 8, 4, 2, 100000, 10, 0, false};
  EXPECT_EQ(Datastore::build(docs, vocab_of(docs), cfg).index().type(), IndexType::kIvfPq);
}

// ---------------------------------------------------------------------------
// Opt-out, versioning and attribution

std::set<std::string> provenance_docs(const Datastore& store, const NeighborRetrieval& r) {
  std::set<std::string> ids;
  for (const auto& n : r.neighbors) ids.insert(store.entry(n.id).provenance.document_id);
  return ids;
}

TEST(OptOut, EverythingLeavesNothingToRetrieve) {
  const auto docs = random_docs(6, 20, 40, 200, 3);
  auto store = Datastore::build(docs, vocab_of(docs), flat_config());
  OptOutSelector all;
  for (const auto& d : docs) all.document_ids.push_back(d.id);
  const auto r = store.opt_out(all);
  EXPECT_EQ(r.documents_removed, 6u);
  EXPECT_EQ(r.version, 1u);
  const auto snap = store.snapshot();
  EXPECT_EQ(store.live_entries(snap), 0u);
  const std::vector<TokenId> ctx = {kBeginOfText};
  EXPECT_TRUE(store.retrieve_neighbors(ctx, 10, snap).neighbors.empty());
  const auto q = store.document_tokens(0);
  EXPECT_TRUE(store.retrieve_blocks(q, 10, snap).blocks.empty());
  EXPECT_EQ(store.stats().documents, 0u);
  EXPECT_EQ(store.stats().blocks, 0u);
}

TEST(OptOut, OneOfTwoCopiesStillRetrievable) {
  const std::vector<Document> docs = {Document::make("a", "red green blue yellow"), Document::make("b", "red green blue yellow"),
                                      Document::make("c", "one two three")};
  auto store = Datastore::build(docs, vocab_of(docs), flat_config());
  const auto& v = store.vocabulary();
  const std::vector<TokenId> ctx = {kBeginOfText, v.lookup("red"), v.lookup("green")};
  const auto before = store.retrieve_neighbors(ctx, 2, store.snapshot());
  EXPECT_EQ(provenance_docs(store, before), (std::set<std::string>{"a", "b"}));
  store.opt_out({{"a"}, {}, {}});
  const auto after = store.retrieve_neighbors(ctx, 1, store.snapshot());
  ASSERT_EQ(after.neighbors.size(), 1u);
  EXPECT_EQ(after.neighbors[0].distance, 0.0);
  const std::vector<double> w = {1.0};
  const auto rec = store.attribute(after, w);
  ASSERT_EQ(rec.items.size(), 1u);
  EXPECT_EQ(rec.items[0].provenance, (Provenance{"b", 2}));
  EXPECT_EQ(v.token(*rec.items[0].value), "blue");
  EXPECT_EQ(rec.items[0].text, "red green [blue]");
}

TEST(OptOut, ByLicenseClassAndDomain) {
  const auto docs = random_docs(40, 15, 40, 300, 4);
  auto store = Datastore::build(docs, vocab_of(docs), flat_config(16, 8));
  OptOutSelector by;
  by.license_class = LicenseClass::kAttribution;
  const auto res = store.opt_out(by);
  std::size_t expected = 0;
  for (const auto& d : docs) expected += d.license_class == LicenseClass::kAttribution;
  EXPECT_EQ(res.documents_removed, expected);
  OptOutSelector dom;
  dom.domain = "news";
  store.opt_out(dom);
  const auto snap = store.snapshot();
  Rng rng(5);
  for (int qi = 0; qi < 200; ++qi) {
    const auto& d = docs[rng.index(docs.size())];
    const auto toks = store.document_tokens(*store.find_document(d.id));
    const auto ctx = toks.first(1 + rng.index(toks.size()));
    for (const auto& n : store.retrieve_neighbors(ctx, 20, snap).neighbors) {
      const auto& doc = store.documents()[store.document_of_entry(n.id)];
      ASSERT_NE(doc.license_class, LicenseClass::kAttribution);
      ASSERT_NE(doc.domain, "news");
    }
    for (const auto& b : store.retrieve_blocks(ctx, 5, snap).blocks) {
      const auto& doc = store.documents()[store.block(b.id).document];
      ASSERT_NE(doc.license_class, LicenseClass::kAttribution);
      ASSERT_NE(doc.domain, "news");
    }
  }
}

TEST(OptOut, UnknownIdsCountedAndVersionOnlyBumpsOnChange) {
  const auto docs = random_docs(3, 10, 20, 100, 6);
  auto store = Datastore::build(docs, vocab_of(docs), flat_config());
  auto r = store.opt_out({{"missing", "also-missing"}, {}, {}});
  EXPECT_EQ(r.unknown_ids, 2u);
  EXPECT_EQ(r.documents_removed, 0u);
  EXPECT_EQ(r.version, 0u);
  r = store.opt_out({{"doc1", "doc1"}, {}, {}});
  EXPECT_EQ(r.documents_removed, 1u);
  EXPECT_EQ(r.version, 1u);
  r = store.opt_out({{"doc1"}, {}, {}});
  EXPECT_EQ(r.documents_removed, 0u);
  EXPECT_EQ(r.version, 1u);
}

TEST(OptOut, PinnedSnapshotKeepsOldView) {
  const std::vector<Document> docs = {Document::make("a", "alpha beta gamma"), Document::make("b", "delta epsilon")};
  auto store = Datastore::build(docs, vocab_of(docs), flat_config());
  const auto old = store.snapshot();
  store.opt_out({{"a"}, {}, {}});
  const std::vector<TokenId> ctx = {kBeginOfText, store.vocabulary().lookup("alpha")};
  const auto r_old = store.retrieve_neighbors(ctx, 1, old);
  EXPECT_EQ(r_old.version, 0u);
  EXPECT_EQ(store.entry(r_old.neighbors[0].id).provenance.document_id, "a");
  // Attribution validates against the current version.
  const std::vector<double> w = {1.0};
  EXPECT_THROW(store.attribute(r_old, w), VersionConflict);
  const auto r_new = store.retrieve_neighbors(ctx, 1, store.snapshot());
  EXPECT_EQ(r_new.version, 1u);
  EXPECT_EQ(store.entry(r_new.neighbors[0].id).provenance.document_id, "b");
  EXPECT_NO_THROW(store.attribute(r_new, w));
}

TEST(OptOut, BlockAttributionDetectsRemoval) {
  const std::vector<Document> docs = {Document::make("a", "alpha beta gamma"), Document::make("b", "delta epsilon")};
  auto store = Datastore::build(docs, vocab_of(docs), flat_config());
  const std::vector<TokenId> q = {store.vocabulary().lookup("beta")};
  const auto r = store.retrieve_blocks(q, 1, store.snapshot());
  ASSERT_EQ(r.blocks.size(), 1u);
  const std::vector<std::uint64_t> ids = {r.blocks[0].id};
  const std::vector<double> scores = {r.blocks[0].score}, w = {1.0};
  const auto rec = store.attribute_blocks(ids, scores, w);
  EXPECT_EQ(rec.items[0].provenance, (Provenance{"a", 0}));
  EXPECT_EQ(rec.items[0].text, "alpha beta gamma");
  store.opt_out({{"a"}, {}, {}});
  EXPECT_THROW(store.attribute_blocks(ids, scores, w), VersionConflict);
}

// Removing documents must be indistinguishable from never adding them.
void check_rebuild_equivalence(const StoreConfig& cfg, std::uint64_t seed) {
  const auto docs = random_docs(60, 20, 80, 150, seed);
  const auto vocab = vocab_of(docs);
  auto store = Datastore::build(docs, vocab, cfg);
  Rng rng(seed);
  std::set<std::string> removed;
  for (auto i : rng.sample_indices(docs.size(), 20)) removed.insert(docs[i].id);
  store.opt_out({std::vector<std::string>(removed.begin(), removed.end()), {}, {}});
  std::vector<Document> kept;
  for (const auto& d : docs)
    if (!removed.contains(d.id)) kept.push_back(d);
  const auto rebuilt = Datastore::build(kept, vocab, cfg, &store.index());
  const auto s1 = store.snapshot(), s2 = rebuilt.snapshot();
  for (int qi = 0; qi < 100; ++qi) {
    const auto& d = docs[rng.index(docs.size())];
    const auto toks = store.document_tokens(*store.find_document(d.id));
    const auto ctx = toks.first(1 + rng.index(toks.size()));
    const auto a = store.retrieve_neighbors(ctx, 16, s1), b = rebuilt.retrieve_neighbors(ctx, 16, s2);
    ASSERT_EQ(a.neighbors.size(), b.neighbors.size());
    for (std::size_t i = 0; i < a.neighbors.size(); ++i) {
      ASSERT_EQ(store.entry(a.neighbors[i].id).provenance, rebuilt.entry(b.neighbors[i].id).provenance);
      ASSERT_EQ(a.neighbors[i].distance, b.neighbors[i].distance);
      ASSERT_FALSE(removed.contains(store.entry(a.neighbors[i].id).provenance.document_id));
    }
    const auto ba = store.retrieve_blocks(ctx, 5, s1).blocks, bb = rebuilt.retrieve_blocks(ctx, 5, s2).blocks;
    ASSERT_EQ(ba.size(), bb.size());
    for (std::size_t i = 0; i < ba.size(); ++i) {
      const auto& x = store.block(ba[i].id);
      const auto& y = rebuilt.block(bb[i].id);
      ASSERT_EQ(store.documents()[x.document].id, rebuilt.documents()[y.document].id);
      ASSERT_EQ(x.start, y.start);
      ASSERT_NEAR(ba[i].score, bb[i].score, 1e-9);
    }
  }
}

TEST(OptOut, RebuildEquivalenceFlat) { check_rebuild_equivalence(flat_config(24, 12), 31); }

TEST(OptOut, RebuildEquivalenceIvfPq) {
  StoreConfig cfg = flat_config(24, 12);
  cfg.index.kind = IndexKind::kIvfPq;
  cfg.index.ivfpq = {16, 8, 6, 4, 100000, 10, 0, false};
  check_rebuild_equivalence(cfg, 32);
}

TEST(OptOut, CompactionKeepsResults) {
  const auto docs = random_docs(30, 20, 50, 150, 8);
  auto store = Datastore::build(docs, vocab_of(docs), flat_config());
  store.opt_out({{"doc3", "doc9", "doc10"}, {}, {}});
  const auto toks = store.document_tokens(5);
  std::vector<NeighborRetrieval> before;
  for (std::size_t i = 1; i < toks.size(); i += 3) before.push_back(store.retrieve_neighbors(toks.first(i), 12, store.snapshot()));
  store.compact();
  std::size_t at = 0;
  for (std::size_t i = 1; i < toks.size(); i += 3)
    EXPECT_EQ(store.retrieve_neighbors(toks.first(i), 12, store.snapshot()).neighbors, before[at++].neighbors);
}

// ---------------------------------------------------------------------------
// Persistence

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

TEST(Persistence, SaveLoadRoundTripIsBitExact) {
  const auto dir = std::filesystem::temp_directory_path() / "nplm_store_test";
  std::filesystem::remove_all(dir);
  const auto docs = random_docs(25, 20, 60, 200, 10);
  StoreConfig cfg = flat_config(16, 8);
  cfg.index.kind = IndexKind::kIvfPq;
  cfg.index.ivfpq = {8, 8, 6, 3, 100000, 10, 0, false};
  auto store = Datastore::build(docs, vocab_of(docs), cfg);
  store.opt_out({{"doc2", "doc4"}, {}, {}});
  store.save(dir / "a");
  const auto loaded = Datastore::load(dir / "a");
  loaded.save(dir / "b");
  for (const char* f : {"manifest.json", "vocab.bin", "entries.bin", "blocks.bin", "index.bin"})
    EXPECT_EQ(file_bytes(dir / "a" / f), file_bytes(dir / "b" / f)) << f;
  EXPECT_EQ(loaded.version(), 1u);
  EXPECT_EQ(loaded.stats().tokens, store.stats().tokens);
  EXPECT_EQ(loaded.stats().blocks, store.stats().blocks);
  const auto toks = store.document_tokens(7);
  for (std::size_t i = 1; i < toks.size(); i += 5) {
    EXPECT_EQ(loaded.retrieve_neighbors(toks.first(i), 8, loaded.snapshot()).neighbors,
              store.retrieve_neighbors(toks.first(i), 8, store.snapshot()).neighbors);
    EXPECT_EQ(loaded.retrieve_blocks(toks.first(i), 3, loaded.snapshot()).blocks,
              store.retrieve_blocks(toks.first(i), 3, store.snapshot()).blocks);
  }
  std::filesystem::remove_all(dir);
}

TEST(Persistence, MissingOrCorruptDirectory) {
  const auto dir = std::filesystem::temp_directory_path() / "nplm_store_bad";
  std::filesystem::remove_all(dir);
  EXPECT_THROW(Datastore::load(dir), IoError);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "manifest.json") << "{not json";
  EXPECT_THROW(Datastore::load(dir), FormatError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace nplm
