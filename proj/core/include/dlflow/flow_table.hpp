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

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "dlflow/model.hpp"

namespace dlflow {

/// Flow hash used by the flow manager: the symmetric RSS value folded with
/// both addresses. Symmetric because XOR is commutative.
constexpr std::uint32_t flow_hash(std::uint32_t rss_hash, const FiveTuple& t) {
  return rss_hash ^ t.src_ip ^ t.dst_ip;
}

/// Most significant byte of the flow hash; disjoint from the bucket bits.
constexpr std::uint8_t hash_tag(std::uint32_t hash) {
  return static_cast<std::uint8_t>(hash >> 24);
}

inline constexpr std::size_t kBucketSlots = 8;
inline constexpr std::uint32_t kNoBucket = 0xffffffffU;

#pragma pack(push, 1)
struct BucketEntry {
  std::uint8_t tag = 0;
  std::uint16_t timestamp = 0;  // coarse seconds, wraps every 65536 s
  std::uint32_t index = 0;      // position in the data array
};
#pragma pack(pop)
static_assert(sizeof(BucketEntry) == 7);

struct alignas(64) Bucket {
  std::uint8_t bitmap = 0;
  std::array<BucketEntry, kBucketSlots> entries{};
  std::uint32_t next = kNoBucket;  // index into the chain pool
};
static_assert(sizeof(Bucket) == 64, "a bucket must fit one cache line");

inline constexpr std::int32_t kNoLabel = -1;

struct FlowRecord {
  FiveTuple key;  // canonical orientation
  std::atomic<std::int32_t> label{kNoLabel};
  std::uint32_t pkt_count = 0;
  std::uint8_t n_features = 0;
  // True when the canonical source endpoint sent the first packet.
  bool initiator_is_src = true;

  std::optional<Label> current_label() const {
    std::int32_t v = label.load(std::memory_order_acquire);
    if (v == kNoLabel) return std::nullopt;
    return Label(static_cast<std::uint32_t>(v));
  }
};

struct FlowTableConfig {
  std::uint32_t records = 1U << 19;
  std::uint32_t buckets = 1U << 17;
  std::chrono::seconds stale_timeout{30};
  std::size_t series_length = kDefaultSeriesLength;
};

enum class FlowVerdict : std::uint8_t {
  kTagAndForward,
  kForwardUntagged,
  kSeriesReady,
  kDroppedNoCapacity,
};

const char* to_string(FlowVerdict v);

struct FlowAction {
  FlowVerdict verdict = FlowVerdict::kForwardUntagged;
  std::optional<Label> label;    // set for kTagAndForward
  std::optional<Series> series;  // set for kSeriesReady
  std::uint32_t index = 0;       // data-array slot of the flow, unless dropped
  bool new_flow = false;
  Direction direction = Direction::kForward;  // relative to the initiator
};

struct FlowTableStats {
  std::uint32_t records = 0;
  std::uint32_t occupied = 0;
  std::uint32_t free_indexes = 0;
  std::uint32_t buckets = 0;
  std::uint32_t chain_buckets = 0;
  double load_factor = 0.0;
  // chain_length_histogram[n] = number of primary buckets with n chained buckets.
  std::vector<std::uint64_t> chain_length_histogram;
  std::uint64_t inserts = 0;
  std::uint64_t reclaimed = 0;
  std::uint64_t dropped = 0;
};

void to_json(nlohmann::json& j, const FlowTableStats& s);

/// Bucketed flow-state store over a fixed data array. Owned by exactly one
/// flow-manager context; only FlowRecord::label may be written from another
/// context.
class FlowTable {
 public:
  using EvictionHook = std::function<void(std::uint32_t index, const FlowRecord&)>;

  explicit FlowTable(const FlowTableConfig& config);

  FlowTable(const FlowTable&) = delete;
  FlowTable& operator=(const FlowTable&) = delete;

  FlowAction on_packet(const PacketRecord& pkt, SimTime now);

  /// First writer wins. Returns false when the flow is no longer stored.
  bool apply_label(const FiveTuple& key, Label label);

  /// First writer wins on the record at `index`; true when this call wrote.
  bool set_label(std::uint32_t index, Label label) {
    std::int32_t expected = kNoLabel;
    return records_[index].label.compare_exchange_strong(
        expected, static_cast<std::int32_t>(label.class_id()), std::memory_order_release,
        std::memory_order_relaxed);
  }

  /// Frees stale entries of one bucket chain; returns how many were freed.
  std::size_t reclaim_stale(std::uint32_t bucket, SimTime now);

  std::optional<std::uint32_t> find_index(const FiveTuple& key) const;
  const FlowRecord* find(const FiveTuple& key) const;
  const FlowRecord& record(std::uint32_t index) const { return records_[index]; }
  std::span<const std::int32_t> features(std::uint32_t index) const;

  std::uint32_t bucket_index(std::uint32_t hash) const {
    return (hash & 0x00ffffffU) & (config_.buckets - 1);
  }
  std::uint32_t bucket_of(const FiveTuple& key) const;

  void set_eviction_hook(EvictionHook hook) { on_evict_ = std::move(hook); }

  template <typename Fn>
  void for_each_occupied(Fn&& fn) const {
    for (std::uint32_t b = 0; b < config_.buckets; ++b) {
      for (const Bucket* bk = &buckets_[b]; bk != nullptr; bk = next_of(*bk)) {
        for (std::size_t s = 0; s < kBucketSlots; ++s) {
          if (bk->bitmap & (1U << s)) {
            std::uint32_t idx = bk->entries[s].index;
            fn(idx, records_[idx]);
          }
        }
      }
    }
  }

  std::uint32_t capacity() const { return config_.records; }
  std::uint32_t size() const { return occupied_; }
  std::uint32_t free_count() const { return static_cast<std::uint32_t>(free_count_); }
  double load_factor() const {
    return static_cast<double>(occupied_) / static_cast<double>(config_.records);
  }
  std::size_t series_length() const { return config_.series_length; }
  const FlowTableConfig& config() const { return config_; }

  FlowTableStats stats() const;

  static std::uint16_t coarse_seconds(SimTime t) {
    return static_cast<std::uint16_t>(
        std::chrono::duration_cast<std::chrono::seconds>(t).count() & 0xffff);
  }
  /// Modular age in coarse seconds, 0..65535.
  static std::uint16_t modular_age(std::uint16_t now_s, std::uint16_t stamp) {
    return static_cast<std::uint16_t>(now_s - stamp);
  }

 private:
  struct Slot {
    Bucket* bucket = nullptr;
    std::size_t slot = 0;
  };

  Bucket* next_of(const Bucket& b) {
    return b.next == kNoBucket ? nullptr : &chain_pool_[b.next];
  }
  const Bucket* next_of(const Bucket& b) const {
    return b.next == kNoBucket ? nullptr : &chain_pool_[b.next];
  }

  std::optional<Slot> lookup(std::uint32_t bucket, std::uint8_t tag, const FiveTuple& key);
  std::optional<Slot> free_slot(std::uint32_t bucket);
  Slot append_chain_bucket(std::uint32_t bucket);
  bool is_stale(std::uint16_t now_s, std::uint16_t stamp) const;

  std::uint32_t pop_free();
  void push_free(std::uint32_t index);

  FlowTableConfig config_;
  std::vector<Bucket> buckets_;
  std::vector<Bucket> chain_pool_;
  std::vector<std::uint32_t> free_chain_;
  std::unique_ptr<FlowRecord[]> records_;
  std::vector<std::int32_t> features_;

  // Free-index ring over data-array positions.
  std::vector<std::uint32_t> free_ring_;
  std::size_t free_head_ = 0;
  std::size_t free_count_ = 0;

  std::uint32_t occupied_ = 0;
  std::uint64_t inserts_ = 0;
  std::uint64_t reclaimed_ = 0;
  std::uint64_t dropped_ = 0;
  EvictionHook on_evict_;
};

}  // namespace dlflow
