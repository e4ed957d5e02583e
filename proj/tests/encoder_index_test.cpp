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

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "nplm/encoder.hpp"
#include "nplm/flat_index.hpp"
#include "nplm/index_io.hpp"
#include "nplm/ivfpq_index.hpp"
#include "nplm/kmeans.hpp"
#include "nplm/random.hpp"

namespace nplm {
namespace {

double sqdist(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return s;
}

std::vector<float> random_vectors(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n * dim);
  for (auto& x : v) x = static_cast<float>(rng.normal());
  return v;
}

// Naive scan: every live vector, sorted by (distance, id).
std::vector<Neighbor> brute_force(std::span<const float> data, std::size_t dim, std::span<const float> q, std::size_t k,
                                  const std::set<VectorId>& dead = {}) {
  std::vector<Neighbor> all;
  for (std::size_t i = 0; i < data.size() / dim; ++i)
    if (!dead.contains(i)) all.push_back({i, sqdist(data.subspan(i * dim, dim), q)});
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

std::vector<VectorId> ids_of(const std::vector<Neighbor>& ns) {
  std::vector<VectorId> out;
  for (const auto& n : ns) out.push_back(n.id);
  return out;
}

template <class Index>
void add_all(Index& index, std::span<const float> data) {
  const auto dim = index.dim();
  for (std::size_t i = 0; i < data.size() / dim; ++i) index.add(i, data.subspan(i * dim, dim));
}

std::string saved(const VectorIndex& index) {
  std::stringstream ss;
  index.save(ss);
  return ss.str();
}

// ---------------------------------------------------------------------------
// Encoder

TEST(Encoder, EmbeddingMatchesOracle) {
  const ContextEncoder enc;
  const auto e = enc.embedding(2);
  EXPECT_NEAR(e[0], 0.23546394156741293, 1e-15);
  EXPECT_NEAR(e[1], -0.04052060564235046, 1e-15);
  EXPECT_NEAR(e[2], -0.03095376109560372, 1e-15);
  EXPECT_NEAR(e[3], 0.12294792600485577, 1e-15);
}

TEST(Encoder, SingleTokenDistanceIsEmbeddingDistance) {
  const ContextEncoder enc;
  const std::vector<TokenId> a = {2}, b = {3};
  EXPECT_NEAR(sqdist(enc.encode(a), enc.encode(b)), 1.9465290796372043, 1e-12);
  const auto ea = enc.embedding(2), eb = enc.embedding(3);
  double direct = 0.0;
  for (std::size_t i = 0; i < ea.size(); ++i) direct += (ea[i] - eb[i]) * (ea[i] - eb[i]);
  EXPECT_NEAR(sqdist(enc.encode(a), enc.encode(b)), direct, 1e-6);
}

TEST(Encoder, UnitNormAndDeterministic) {
  const ContextEncoder cached(EncoderConfig{}, 100), uncached;
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<TokenId> ctx(1 + rng.index(50));
    for (auto& t : ctx) t = static_cast<TokenId>(rng.index(200));
    const auto v = cached.encode(ctx);
    double norm = 0.0;
    for (float x : v) norm += static_cast<double>(x) * x;
    ASSERT_NEAR(std::sqrt(norm), 1.0, 1e-6);
    ASSERT_EQ(v, uncached.encode(ctx));
  }
}

TEST(Encoder, EmptyContextIsBeginOfText) {
  const ContextEncoder enc;
  const std::vector<TokenId> bos = {kBeginOfText};
  EXPECT_EQ(enc.encode(std::span<const TokenId>{}), enc.encode(bos));
}

TEST(Encoder, OnlyLastMaxContextTokensMatter) {
  EncoderConfig cfg;
  cfg.max_context = 4;
  const ContextEncoder enc(cfg);
  const std::vector<TokenId> a = {9, 9, 5, 6, 7, 8}, b = {3, 4, 5, 6, 7, 8};
  EXPECT_EQ(enc.encode(a), enc.encode(b));
}

TEST(Encoder, DistantChangeIsBounded) {
  EncoderConfig cfg;
  cfg.decay = 0.5;
  const ContextEncoder enc(cfg);
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TokenId> ctx(20);
    for (auto& t : ctx) t = static_cast<TokenId>(2 + rng.index(100));
    auto changed = ctx;
    changed[0] = static_cast<TokenId>(200 + trial);
    // Unnormalized sums differ by gamma^19 (e - e'), so by at most 2 gamma^19;
    // normalizing at most doubles a difference relative to |u|.
    std::vector<double> u(cfg.dim, 0.0);
    double w = 1.0;
    for (std::size_t i = 0; i < ctx.size(); ++i, w *= cfg.decay) {
      const auto e = enc.embedding(ctx[ctx.size() - 1 - i]);
      for (std::size_t j = 0; j < cfg.dim; ++j) u[j] += w * e[j];
    }
    double norm = 0.0;
    for (double x : u) norm += x * x;
    const double bound = 2.0 * 2.0 * std::pow(0.5, 19) / std::sqrt(norm);
    EXPECT_LE(std::sqrt(sqdist(enc.encode(ctx), enc.encode(changed))), bound + 1e-6);
  }
}

// ---------------------------------------------------------------------------
// Flat index

TEST(FlatIndex, HandPlacedPoints) {
  FlatIndex index(2);
  const float pts[][2] = {{1, 0}, {0, 2}, {-1, -1}, {3, 0}, {0.5f, 0.5f}, {0, -1}};
  for (VectorId i = 0; i < 6; ++i) index.add(i, pts[i]);
  const float origin[2] = {0, 0};
  const auto r = index.query(origin, 6);
  // Squared distances 1, 4, 2, 9, 0.5, 1: ties (0 and 5) by ascending id.
  EXPECT_EQ(ids_of(r), (std::vector<VectorId>{4, 0, 5, 2, 1, 3}));
  EXPECT_DOUBLE_EQ(r[0].distance, 0.5);
  EXPECT_DOUBLE_EQ(r[5].distance, 9.0);
}

TEST(FlatIndex, MatchesNaiveScan) {
  Rng rng(11);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t dim = 1 + rng.index(40), n = 1 + rng.index(trial < 2 ? 10000 : 2000);
    const auto data = random_vectors(n, dim, 100 + trial);
    FlatIndex index(dim);
    add_all(index, data);
    for (int q = 0; q < 20; ++q) {
      const auto query = random_vectors(1, dim, 1000 * trial + q);
      const std::size_t k = 1 + rng.index(50);
      const auto got = index.query(query, k);
      const auto want = brute_force(data, dim, query, k);
      ASSERT_EQ(ids_of(got), ids_of(want));
      for (std::size_t i = 0; i < got.size(); ++i) ASSERT_NEAR(got[i].distance, want[i].distance, 1e-9);
    }
  }
}

TEST(FlatIndex, ExactQueryAndSmallLiveSet) {
  const auto data = random_vectors(5, 8, 2);
  FlatIndex index(8);
  add_all(index, data);
  const auto r = index.query(std::span<const float>(data).subspan(3 * 8, 8), 10);
  ASSERT_EQ(r.size(), 5u);
  EXPECT_EQ(r[0].id, 3u);
  EXPECT_EQ(r[0].distance, 0.0);
}

TEST(FlatIndex, DimensionAndArgumentErrors) {
  FlatIndex index(4);
  const float v3[3] = {1, 2, 3};
  const float v4[4] = {1, 2, 3, 4};
  EXPECT_THROW(index.add(0, v3), InvalidArgument);
  index.add(0, v4);
  EXPECT_THROW(index.add(0, v4), InvalidArgument);
  EXPECT_THROW(index.query(v3, 1), InvalidArgument);
  EXPECT_THROW(index.query(v4, 0), InvalidArgument);
}

TEST(FlatIndex, DeleteSemantics) {
  const auto data = random_vectors(10, 6, 4);
  FlatIndex index(6);
  add_all(index, data);
  const auto q = random_vectors(1, 6, 5);
  const auto before = index.query(q, 10);
  const std::vector<VectorId> top = {before[0].id, 999};
  EXPECT_EQ(index.remove(top), 1u);
  const auto after = index.query(q, 10);
  EXPECT_EQ(after[0].id, before[1].id);
  EXPECT_EQ(after.size(), 9u);
  for (const auto& n : after) EXPECT_NE(n.id, before[0].id);

  // Re-adding the same vector under a new id makes it retrievable under that id only.
  index.add(50, std::span<const float>(data).subspan(before[0].id * 6, 6));
  const auto readd = index.query(q, 10);
  EXPECT_EQ(readd[0].id, 50u);

  std::vector<VectorId> all(10);
  for (VectorId i = 0; i < 10; ++i) all[i] = i;
  index.remove(all);
  index.remove(std::vector<VectorId>{50});
  EXPECT_TRUE(index.query(q, 5).empty());
  EXPECT_EQ(index.live_count(), 0u);
}

TEST(FlatIndex, CompactionAndRebuildEquivalence) {
  const std::size_t dim = 16, n = 800;
  const auto data = random_vectors(n, dim, 6);
  FlatIndex index(dim);
  add_all(index, data);
  Rng rng(7);
  std::set<VectorId> dead;
  for (auto i : rng.sample_indices(n, 300)) dead.insert(i);
  index.remove(std::vector<VectorId>(dead.begin(), dead.end()));
  FlatIndex rebuilt(dim);
  for (std::size_t i = 0; i < n; ++i)
    if (!dead.contains(i)) rebuilt.add(i, std::span<const float>(data).subspan(i * dim, dim));
  std::vector<std::vector<Neighbor>> results;
  for (int qi = 0; qi < 50; ++qi) {
    const auto q = random_vectors(1, dim, 100 + qi);
    auto r = index.query(q, 20);
    for (const auto& nb : r) ASSERT_FALSE(dead.contains(nb.id));
    ASSERT_EQ(ids_of(r), ids_of(brute_force(data, dim, q, 20, dead)));
    ASSERT_EQ(ids_of(r), ids_of(rebuilt.query(q, 20)));
    results.push_back(std::move(r));
  }
  index.compact();
  EXPECT_EQ(index.stored_count(), n - dead.size());
  for (int qi = 0; qi < 50; ++qi) EXPECT_EQ(index.query(random_vectors(1, dim, 100 + qi), 20), results[qi]);
}

TEST(FlatIndex, SaveLoadBitExact) {
  const auto data = random_vectors(300, 12, 8);
  FlatIndex index(12);
  add_all(index, data);
  index.remove(std::vector<VectorId>{3, 77, 150});
  const auto bytes = saved(index);
  std::stringstream in(bytes);
  const auto back = load_index(in);
  EXPECT_EQ(back->type(), IndexType::kFlat);
  EXPECT_EQ(saved(*back), bytes);
  const auto q = random_vectors(1, 12, 9);
  EXPECT_EQ(back->query(q, 30), index.query(q, 30));
}

// ---------------------------------------------------------------------------
// k-means and IVF-PQ

// Four tight 2-d clusters far apart; returns data and true labels.
std::pair<std::vector<float>, std::vector<int>> four_clusters(std::size_t per, double radius, std::uint64_t seed) {
  const float centers[4][2] = {{-10, -10}, {-10, 10}, {10, -10}, {10, 10}};
  Rng rng(seed);
  std::vector<float> data;
  std::vector<int> labels;
  for (std::size_t i = 0; i < 4 * per; ++i) {
    const int c = static_cast<int>(i % 4);
    data.push_back(centers[c][0] + static_cast<float>(radius * (2 * rng.uniform() - 1)));
    data.push_back(centers[c][1] + static_cast<float>(radius * (2 * rng.uniform() - 1)));
    labels.push_back(c);
  }
  return {data, labels};
}

TEST(KMeans, RecoversSeparatedClusters) {
  const auto [data, labels] = four_clusters(250, 1.0, 1);
  const auto c = kmeans(data, 2, {4, 25, 0});
  std::map<std::size_t, std::map<int, int>> votes;
  for (std::size_t i = 0; i < labels.size(); ++i) ++votes[nearest_centroid(data.data() + 2 * i, c, 2)][labels[i]];
  std::size_t majority = 0;
  for (const auto& [cluster, v] : votes) {
    int best = 0;
    for (const auto& [label, count] : v) best = std::max(best, count);
    majority += static_cast<std::size_t>(best);
  }
  EXPECT_GE(static_cast<double>(majority) / static_cast<double>(labels.size()), 0.95);
  EXPECT_EQ(votes.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    const double x = c[2 * k], y = c[2 * k + 1];
    EXPECT_NEAR(std::abs(x), 10.0, 1.0);
    EXPECT_NEAR(std::abs(y), 10.0, 1.0);
  }
}

TEST(KMeans, Deterministic) {
  const auto data = random_vectors(500, 4, 3);
  EXPECT_EQ(kmeans(data, 4, {16, 10, 5}), kmeans(data, 4, {16, 10, 5}));
}

TEST(IvfPq, UntrainedIndexRefusesWork) {
  IvfPqIndex index(4, {4, 2, 4, 1, 1000, 10, 0, false});
  const float v[4] = {0, 0, 0, 0};
  EXPECT_THROW(index.query(v, 1), StateError);
  EXPECT_THROW(index.add(0, v), StateError);
}

TEST(IvfPq, ConfigurationErrors) {
  EXPECT_THROW(IvfPqIndex(10, {4, 3, 8, 1, 1000, 10, 0, false}), InvalidArgument);  // 10 % 3
  EXPECT_THROW(IvfPqIndex(8, {4, 2, 8, 5, 1000, 10, 0, false}), InvalidArgument);   // probe > nlist
  IvfPqIndex small(2, {8, 1, 4, 1, 1000, 10, 0, false});
  EXPECT_THROW(small.train(random_vectors(5, 2, 1)), InvalidArgument);  // fewer rows than nlist
}

TEST(IvfPq, DegenerateExactCase) {
  // One list, one subquantizer per dimension, enough codes for every value.
  const std::vector<float> data = {0, 0, 1, 3, 2, 1, 3, 2};
  IvfPqIndex index(2, {1, 2, 2, 1, 1000, 25, 0, false});
  index.train(data);
  add_all(index, data);
  for (std::size_t i = 0; i < 4; ++i)
    EXPECT_NEAR(index.reconstruction_error(std::span<const float>(data).subspan(2 * i, 2)), 0.0, 1e-10);
}

TEST(IvfPq, FourClustersExactRecall) {
  const auto [data, labels] = four_clusters(1, 0.0, 2);
  IvfPqIndex index(2, {4, 2, 2, 4, 1000, 25, 0, false});
  index.train(data);
  add_all(index, data);
  for (std::size_t l = 0; l < 4; ++l) EXPECT_EQ(index.list_size(l), 1u);
  const auto [queries, qlabels] = four_clusters(50, 3.0, 3);
  for (std::size_t i = 0; i < qlabels.size(); ++i) {
    const std::span<const float> q(queries.data() + 2 * i, 2);
    EXPECT_EQ(index.query(q, 1, {4})[0].id, brute_force(data, 2, q, 1)[0].id);
  }
}

TEST(IvfPq, ReconstructionErrorShrinksWithBitsAndM) {
  const std::size_t dim = 16;
  const auto data = random_vectors(3000, dim, 12);
  auto mean_error = [&](std::size_t m, std::size_t bits) {
    IvfPqIndex index(dim, {8, m, bits, 1, 100000, 20, 0, false});
    index.train(data);
    double total = 0.0;
    for (std::size_t i = 0; i < 500; ++i) total += index.reconstruction_error(std::span<const float>(data).subspan(i * dim, dim));
    return total / 500.0;
  };
  const double b4 = mean_error(4, 4), b6 = mean_error(4, 6), b8 = mean_error(4, 8);
  EXPECT_LE(b6, b4);
  EXPECT_LE(b8, b6);
  const double m2 = mean_error(2, 6), m8 = mean_error(8, 6);
  EXPECT_LE(b6, m2);
  EXPECT_LE(m8, b6);
}

TEST(IvfPq, SingleProbeMissesBoundaryNeighbors) {
  // Points along the line between two cluster centers: many queries sit near
  // the boundary of the two inverted lists.
  Rng rng(13);
  std::vector<float> data;
  for (int i = 0; i < 2000; ++i) {
    const double t = rng.uniform();
    data.push_back(static_cast<float>(-5 + 10 * t));
    data.push_back(static_cast<float>(0.3 * rng.normal()));
  }
  IvfPqIndex index(2, {2, 2, 8, 1, 100000, 25, 0, false});
  index.train(data);
  add_all(index, data);
  int hits1 = 0, hits2 = 0;
  const int nq = 400;
  for (int i = 0; i < nq; ++i) {
    const float q[2] = {static_cast<float>(0.4 * rng.normal()), static_cast<float>(0.3 * rng.normal())};
    const auto truth = brute_force(data, 2, q, 1)[0].id;
    hits1 += index.query(q, 1, {1})[0].id == truth;
    hits2 += index.query(q, 1, {2})[0].id == truth;
  }
  EXPECT_LT(hits1, hits2);
}

class IvfPqFixture : public ::testing::Test {
 protected:
  static constexpr std::size_t kDim = 32, kN = 4000;
  void SetUp() override {
    data_ = random_vectors(kN, kDim, 21);
    index_ = std::make_unique<IvfPqIndex>(kDim, IvfPqConfig{16, 8, 8, 4, 100000, 15, 0, false});
    index_->train(data_);
    add_all(*index_, data_);
  }
  std::vector<float> data_;
  std::unique_ptr<IvfPqIndex> index_;
};

TEST_F(IvfPqFixture, EveryIdInExactlyOneList) {
  std::size_t total = 0;
  for (std::size_t l = 0; l < 16; ++l) total += index_->list_size(l);
  EXPECT_EQ(total, kN);
  EXPECT_EQ(index_->code_size(), 8u);
  for (VectorId id = 0; id < kN; id += 97) EXPECT_LT(index_->list_of(id), 16u);
}

TEST_F(IvfPqFixture, FullProbeRecallIsHigh) {
  double recall = 0.0;
  for (int qi = 0; qi < 50; ++qi) {
    const auto q = random_vectors(1, kDim, 500 + qi);
    const auto truth = ids_of(brute_force(data_, kDim, q, 16));
    const auto got = ids_of(index_->query(q, 16, {16}));
    const std::set<VectorId> t(truth.begin(), truth.end());
    for (auto id : got) recall += t.contains(id);
  }
  // Random 32-d gaussians are the hard case for 8-byte codes; this is a floor.
  EXPECT_GE(recall / (50.0 * 16.0), 0.3);
}

TEST_F(IvfPqFixture, TombstonesNeverReturnedAndCompactionIsInvisible) {
  Rng rng(22);
  std::set<VectorId> dead;
  for (auto i : rng.sample_indices(kN, 1500)) dead.insert(i);
  index_->remove(std::vector<VectorId>(dead.begin(), dead.end()));
  auto rebuilt_base = index_->empty_clone();
  for (std::size_t i = 0; i < kN; ++i)
    if (!dead.contains(i)) rebuilt_base->add(i, std::span<const float>(data_).subspan(i * kDim, kDim));
  std::vector<std::vector<Neighbor>> before;
  for (int qi = 0; qi < 40; ++qi) {
    const auto q = random_vectors(1, kDim, 900 + qi);
    for (std::size_t probe : {1u, 4u, 16u}) {
      const auto r = index_->query(q, 25, {probe});
      for (const auto& n : r) ASSERT_FALSE(dead.contains(n.id));
      ASSERT_EQ(r, rebuilt_base->query(q, 25, {probe}));
      before.push_back(r);
    }
  }
  index_->compact();
  std::size_t at = 0;
  for (int qi = 0; qi < 40; ++qi) {
    const auto q = random_vectors(1, kDim, 900 + qi);
    for (std::size_t probe : {1u, 4u, 16u}) EXPECT_EQ(index_->query(q, 25, {probe}), before[at++]);
  }
}

TEST_F(IvfPqFixture, SaveLoadBitExact) {
  index_->remove(std::vector<VectorId>{1, 2, 3, 1000});
  const auto bytes = saved(*index_);
  std::stringstream in(bytes);
  const auto back = load_index(in);
  EXPECT_EQ(back->type(), IndexType::kIvfPq);
  EXPECT_EQ(saved(*back), bytes);
  const auto q = random_vectors(1, kDim, 31);
  EXPECT_EQ(back->query(q, 10), index_->query(q, 10));
}

TEST(IndexIo, RejectsGarbage) {
  std::stringstream bad("SIIXgarbage");
  EXPECT_THROW(load_index(bad), Error);
  std::stringstream wrong("ABCD");
  EXPECT_THROW(load_index(wrong), FormatError);
}

}  // namespace
}  // namespace nplm
