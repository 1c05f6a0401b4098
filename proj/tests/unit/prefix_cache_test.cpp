/*
 * Copyright 2026 The dlflow Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <random>

#include <gtest/gtest.h>

#include "dlflow/prefix_cache.hpp"
#include "oracles.hpp"

namespace dlflow {
namespace {

Series series(std::vector<std::int32_t> f, std::optional<Label> truth = std::nullopt) {
  Series s;
  s.features = std::move(f);
  s.truth = truth;
  return s;
}

Prefix key(std::vector<std::int32_t> f) { return Prefix{std::move(f)}; }

TEST(QDelta, Truncates) {
  const Series s = series({52, -40, 1448, 1448, 60, -1448, 52, 52, -60, 1448});
  EXPECT_EQ(q_delta(s, 4).features, (std::vector<std::int32_t>{52, -40, 1448, 1448}));
  EXPECT_EQ(q_delta(s, 9).features.size(), 9u);
  EXPECT_EQ(q_delta(s, 9).features.back(), -60);
  EXPECT_EQ(q_postfix(s, 2).features, (std::vector<std::int32_t>{-60, 1448}));
  EXPECT_THROW(q_delta(s, 10), std::invalid_argument);
  EXPECT_THROW(q_delta(s, 0), std::invalid_argument);
}

TEST(QDelta, SharedHeadsGiveEqualPrefixes) {
  const Series a = series({1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  const Series b = series({1, 2, 3, 4, 5, 6, -7, -8, -9, -10});
  EXPECT_EQ(q_delta(a, 6), q_delta(b, 6));
  EXPECT_NE(q_delta(a, 7), q_delta(b, 7));
}

TEST(PrefixCache, LruEviction) {
  PrefixCache c(CacheConfig{2, 1, KeyMode::kPrefix});
  c.insert(key({1}), Label(1));
  c.insert(key({2}), Label(2));
  EXPECT_EQ(c.lookup(key({1})), Label(1));
  c.insert(key({3}), Label(3));
  EXPECT_FALSE(c.contains(key({2})));
  EXPECT_TRUE(c.contains(key({1})));
  EXPECT_TRUE(c.contains(key({3})));
  EXPECT_EQ(c.counters().evictions, 1u);
}

TEST(PrefixCache, DisabledCacheStoresNothing) {
  PrefixCache c(CacheConfig{0, 6, KeyMode::kPrefix});
  c.insert(key({1, 2, 3, 4, 5, 6}), Label(1));
  EXPECT_EQ(c.size(), 0u);
  CRing<Series> ring(8);
  ring.push(series({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}));
  EXPECT_TRUE(c.filter_ring(ring).empty());
  EXPECT_EQ(ring.size(), 1u);
}

TEST(PrefixCache, MatchesRecencyList) {
  std::mt19937 rng(5);
  constexpr std::size_t kCapacity = 64;
  PrefixCache cache(CacheConfig{kCapacity, 2, KeyMode::kPrefix});
  oracle::RecencyList ref(kCapacity);
  for (int op = 0; op < 100'000; ++op) {
    const std::vector<std::int32_t> k{static_cast<std::int32_t>(1 + rng() % 20),
                                      static_cast<std::int32_t>(1 + rng() % 10)};
    if (rng() % 2 == 0) {
      const auto got = cache.lookup(key(k));
      const auto want = ref.lookup(k);
      ASSERT_EQ(got.has_value(), want.has_value()) << "op " << op;
      if (want) {
        ASSERT_EQ(got->class_id(), *want);
      }
    } else {
      const auto label = static_cast<std::uint32_t>(rng() % 50);
      cache.insert(key(k), Label(label));
      ref.insert(k, label);
    }
    ASSERT_LE(cache.size(), kCapacity);
    if (op % 997 == 0) {
      const auto want = ref.order();
      const auto got = cache.recency_order();
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t i = 0; i < got.size(); ++i) ASSERT_EQ(got[i].features, want[i]);
    }
  }
}

TEST(FilterRing, RemovesHitsAndKeepsMissOrder) {
  PrefixCache c(CacheConfig{16, 2, KeyMode::kPrefix});
  CRing<Series> ring(16);
  for (int i = 0; i < 10; ++i) ring.push(series({i + 1, 1, 1, 1}));
  for (int i : {2, 5, 8}) c.insert(key({i + 1, 1}), Label(static_cast<std::uint32_t>(i)));
  const auto hits = c.filter_ring(ring);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].second, Label(2));
  EXPECT_EQ(hits[2].first.features[0], 9);
  const auto rest = ring.drain_up_to(100);
  std::vector<std::int32_t> heads;
  for (const Series& s : rest) heads.push_back(s.features[0]);
  EXPECT_EQ(heads, (std::vector<std::int32_t>{1, 2, 4, 5, 7, 8, 10}));
}

TEST(FilterRing, EmptyCacheLeavesRing) {
  PrefixCache c(CacheConfig{16, 2, KeyMode::kPrefix});
  CRing<Series> ring(16);
  for (int i = 0; i < 4; ++i) ring.push(series({i + 1, 1, 1}));
  EXPECT_TRUE(c.filter_ring(ring).empty());
  EXPECT_EQ(ring.size(), 4u);
}

TEST(FilterRing, DuplicatePrefixesBothHit) {
  PrefixCache c(CacheConfig{16, 2, KeyMode::kPrefix});
  CRing<Series> ring(16);
  ring.push(series({7, 7, 1}));
  ring.push(series({7, 7, 2}));
  c.insert(key({7, 7}), Label(3));
  EXPECT_EQ(c.filter_ring(ring).size(), 2u);
  EXPECT_TRUE(ring.empty());
}

TEST(InsertResults, SkipsSentinels) {
  PrefixCache c(CacheConfig{64, 2, KeyMode::kPrefix});
  std::vector<Series> taken;
  for (int i = 0; i < 36; ++i) taken.push_back(series({i + 1, 2, 3}));
  const Batch b = pad(taken, 28, 3);
  std::vector<Label> labels(36, Label(4));
  EXPECT_EQ(c.insert_results(b, labels), 36u);
  EXPECT_EQ(c.size(), 36u);
  EXPECT_FALSE(c.contains(key({0, 0})));
}

TEST(InsertResults, DuplicatePrefixesShareAnEntry) {
  PrefixCache c(CacheConfig{64, 2, KeyMode::kPrefix});
  std::vector<Series> taken;
  for (int i = 0; i < 64; ++i) taken.push_back(series({i % 10 + 1, 2, 3}));
  std::vector<Label> labels(64, Label(1));
  c.insert_results(taken, labels);
  EXPECT_EQ(c.size(), 10u);
}

TEST(GradeHit, ComparesWithOracle) {
  const LabelOracle oracle(200);
  const Series s = series({1, 2, 3}, Label(7));
  EXPECT_EQ(grade_hit(s, Label(7), oracle), HitGrade::kGood);
  EXPECT_EQ(grade_hit(s, Label(12), oracle), HitGrade::kError);
}

// Feeds random series through lookup-then-insert, grading every hit.
CacheCounters replay(CacheConfig config, const std::vector<Series>& stream, const LabelOracle& oracle) {
  PrefixCache c(config);
  for (const Series& s : stream) {
    if (auto cached = c.lookup(c.key_of(s))) {
      c.record_grade(grade_hit(s, *cached, oracle));
    } else {
      c.insert(c.key_of(s), oracle(s));
    }
  }
  return c.counters();
}

std::vector<Series> shared_prefix_stream(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Series> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::int32_t> f(10);
    for (std::size_t j = 0; j < 10; ++j) {
      const std::int32_t v = static_cast<std::int32_t>(j < 6 ? 1 + rng() % 3 : 1 + rng() % 50);
      f[j] = rng() % 2 ? v : -v;
    }
    out.push_back(series(std::move(f)));
  }
  return out;
}

TEST(PrefixCache, ExactKeysNeverErr) {
  const LabelOracle oracle(200);
  const auto stream = shared_prefix_stream(20'000, 1);
  const CacheCounters c = replay(CacheConfig{500, 6, KeyMode::kExact}, stream, oracle);
  EXPECT_EQ(c.error_hits, 0u);
}

TEST(PrefixCache, SharedPrefixesProduceErrorHits) {
  const LabelOracle oracle(200);
  const auto stream = shared_prefix_stream(20'000, 1);
  const CacheCounters c = replay(CacheConfig{500, 6, KeyMode::kPrefix}, stream, oracle);
  EXPECT_GT(c.error_hits, 0u);
  EXPECT_EQ(c.good_hits + c.error_hits, c.hits);
}

TEST(PrefixCache, ConstructedConflictIsGradedExactly) {
  const LabelOracle oracle(200);
  const Series a = series({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, Label(1));
  const Series b = series({1, 2, 3, 4, 5, 6, 70, 80, 90, 100}, Label(2));
  const CacheCounters c = replay(CacheConfig{10, 6, KeyMode::kPrefix}, {a, b, a, b}, oracle);
  EXPECT_EQ(c.hits, 3u);
  EXPECT_EQ(c.good_hits, 1u);
  EXPECT_EQ(c.error_hits, 2u);
}

TEST(PrefixCache, HitRatioGrowsAsKeysCoarsen) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const LabelOracle oracle(200);
    const auto stream = shared_prefix_stream(5000, seed);
    const double d4 = replay(CacheConfig{200, 4, KeyMode::kPrefix}, stream, oracle).hit_ratio();
    const double d6 = replay(CacheConfig{200, 6, KeyMode::kPrefix}, stream, oracle).hit_ratio();
    const double exact = replay(CacheConfig{200, 6, KeyMode::kExact}, stream, oracle).hit_ratio();
    EXPECT_GE(d4, d6);
    EXPECT_GE(d6, exact);
  }
}

TEST(PrefixCache, SafePrefixesNeverErr) {
  // Label depends only on the first six features: every prefix is safe.
  const auto stream = shared_prefix_stream(10'000, 3);
  std::vector<Series> labelled;
  for (Series s : stream) {
    s.truth = Label(static_cast<std::uint32_t>(hash_features({s.features.data(), 6}) % 200));
    labelled.push_back(std::move(s));
  }
  const CacheCounters c = replay(CacheConfig{300, 6, KeyMode::kPrefix}, labelled, LabelOracle(200));
  EXPECT_GT(c.hits, 0u);
  EXPECT_EQ(c.error_hits, 0u);
}

}  // namespace
}  // namespace dlflow
