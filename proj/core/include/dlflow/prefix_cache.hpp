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

#pragma once

#include <cstddef>
#include <cstdint>
#include <list>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dlflow/accelerator.hpp"
#include "dlflow/batching.hpp"
#include "dlflow/cring.hpp"
#include "dlflow/model.hpp"

namespace dlflow {

enum class KeyMode { kPrefix, kPostfix, kExact };

const char* to_string(KeyMode mode);
std::optional<KeyMode> parse_key_mode(std::string_view text);

/// First delta features of a series, order preserved. Requires 1 <= delta < K.
Prefix q_delta(const Series& s, std::size_t delta);
/// Last delta features of a series. Requires 1 <= delta < K.
Prefix q_postfix(const Series& s, std::size_t delta);

enum class HitGrade { kGood, kError };

/// Good iff the full-series oracle label equals the cached one.
HitGrade grade_hit(const Series& s, Label cached, const LabelOracle& oracle);

struct CacheConfig {
  std::size_t capacity = 0;  // 0 disables the cache
  std::size_t delta = 6;
  KeyMode key_mode = KeyMode::kPrefix;
};

void to_json(nlohmann::json& j, const CacheConfig& c);
void from_json(const nlohmann::json& j, CacheConfig& c);

struct CacheCounters {
  std::uint64_t lookups = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t good_hits = 0;
  std::uint64_t error_hits = 0;
  std::uint64_t inserts = 0;
  std::uint64_t evictions = 0;

  double hit_ratio() const {
    return lookups == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(lookups);
  }
};

/// LRU map from approximate series keys to labels.
class PrefixCache {
 public:
  explicit PrefixCache(CacheConfig config);

  bool enabled() const { return config_.capacity > 0; }
  const CacheConfig& config() const { return config_; }
  std::size_t size() const { return index_.size(); }

  Prefix key_of(const Series& s) const;

  /// Refreshes recency on a hit.
  std::optional<Label> lookup(const Prefix& key);
  /// Stores or overwrites key -> label as most recent, evicting the least
  /// recently used entry past capacity.
  void insert(Prefix key, Label label);
  bool contains(const Prefix& key) const { return index_.contains(key); }

  /// Keys from most to least recently used.
  std::vector<Prefix> recency_order() const;

  /// Looks up every waiting series front to back and pulls the hits out of
  /// the ring, paired with their cached label. Misses keep their order.
  std::vector<std::pair<Series, Label>> filter_ring(CRing<Series>& ring);

  /// Inserts one entry per real series; labels align with the non-sentinel
  /// slots. Returns the number of entries written.
  std::size_t insert_results(std::span<const Series> slots, std::span<const Label> labels);
  std::size_t insert_results(const Batch& batch, std::span<const Label> labels) {
    return insert_results(batch.slots, labels);
  }

  void record_grade(HitGrade grade) {
    if (grade == HitGrade::kGood) {
      ++counters_.good_hits;
    } else {
      ++counters_.error_hits;
    }
  }

  const CacheCounters& counters() const { return counters_; }

 private:
  using Entry = std::pair<Prefix, Label>;

  CacheConfig config_;
  std::list<Entry> lru_;  // front = most recent
  std::unordered_map<Prefix, std::list<Entry>::iterator, PrefixHash> index_;
  CacheCounters counters_;
};

}  // namespace dlflow
