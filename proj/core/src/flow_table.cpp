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

#include "dlflow/flow_table.hpp"

#include <bit>
#include <stdexcept>

namespace dlflow {

const char* to_string(FlowVerdict v) {
  switch (v) {
    case FlowVerdict::kTagAndForward: return "tag_and_forward";
    case FlowVerdict::kForwardUntagged: return "forward_untagged";
    case FlowVerdict::kSeriesReady: return "series_ready";
    case FlowVerdict::kDroppedNoCapacity: return "dropped_no_capacity";
  }
  return "unknown";
}

void to_json(nlohmann::json& j, const FlowTableStats& s) {
  j = nlohmann::json{{"records", s.records},
                     {"occupied", s.occupied},
                     {"free_indexes", s.free_indexes},
                     {"buckets", s.buckets},
                     {"chain_buckets", s.chain_buckets},
                     {"load_factor", s.load_factor},
                     {"chain_length_histogram", s.chain_length_histogram},
                     {"inserts", s.inserts},
                     {"reclaimed", s.reclaimed},
                     {"dropped", s.dropped}};
}

FlowTable::FlowTable(const FlowTableConfig& config) : config_(config) {
  if (config_.records == 0) throw std::invalid_argument("flow table needs at least one record");
  if (config_.buckets == 0 || !std::has_single_bit(config_.buckets) ||
      config_.buckets > (1U << 24)) {
    throw std::invalid_argument("bucket count must be a power of two no larger than 2^24");
  }
  if (config_.stale_timeout.count() < 1 || config_.stale_timeout.count() > 32767) {
    throw std::invalid_argument("stale timeout must be within 1..32767 s");
  }
  if (config_.series_length == 0 || config_.series_length > 255) {
    throw std::invalid_argument("series length must be within 1..255");
  }
  buckets_.resize(config_.buckets);
  records_ = std::make_unique<FlowRecord[]>(config_.records);
  features_.assign(static_cast<std::size_t>(config_.records) * config_.series_length, 0);
  free_ring_.resize(config_.records);
  for (std::uint32_t i = 0; i < config_.records; ++i) free_ring_[i] = i;
  free_count_ = config_.records;
}

std::uint32_t FlowTable::pop_free() {
  std::uint32_t idx = free_ring_[free_head_];
  free_head_ = (free_head_ + 1) % free_ring_.size();
  --free_count_;
  return idx;
}

void FlowTable::push_free(std::uint32_t index) {
  free_ring_[(free_head_ + free_count_) % free_ring_.size()] = index;
  ++free_count_;
}

bool FlowTable::is_stale(std::uint16_t now_s, std::uint16_t stamp) const {
  // Ages beyond the half range are wrap-around leftovers and count as stale;
  // the timeout is capped at 32767 so the comparison covers both cases.
  return modular_age(now_s, stamp) > config_.stale_timeout.count();
}

std::uint32_t FlowTable::bucket_of(const FiveTuple& key) const {
  const FiveTuple c = canonicalize(key).tuple;
  return bucket_index(flow_hash(symmetric_rss_hash(c), c));
}

std::optional<FlowTable::Slot> FlowTable::lookup(std::uint32_t bucket, std::uint8_t tag,
                                                 const FiveTuple& key) {
  for (Bucket* bk = &buckets_[bucket]; bk != nullptr; bk = next_of(*bk)) {
    unsigned bits = bk->bitmap;
    while (bits != 0) {
      unsigned s = static_cast<unsigned>(std::countr_zero(bits));
      bits &= bits - 1;
      const BucketEntry& e = bk->entries[s];
      if (e.tag == tag && records_[e.index].key == key) return Slot{bk, s};
    }
  }
  return std::nullopt;
}

std::optional<FlowTable::Slot> FlowTable::free_slot(std::uint32_t bucket) {
  for (Bucket* bk = &buckets_[bucket]; bk != nullptr; bk = next_of(*bk)) {
    if (bk->bitmap != 0xff) {
      return Slot{bk, static_cast<std::size_t>(std::countr_one(static_cast<unsigned>(bk->bitmap)))};
    }
  }
  return std::nullopt;
}

FlowTable::Slot FlowTable::append_chain_bucket(std::uint32_t bucket) {
  std::uint32_t fresh;
  if (!free_chain_.empty()) {
    fresh = free_chain_.back();
    free_chain_.pop_back();
    chain_pool_[fresh] = Bucket{};
  } else {
    fresh = static_cast<std::uint32_t>(chain_pool_.size());
    chain_pool_.emplace_back();
  }
  // Walk after any pool growth so no pointer is stale.
  Bucket* tail = &buckets_[bucket];
  while (tail->next != kNoBucket) tail = &chain_pool_[tail->next];
  tail->next = fresh;
  return Slot{&chain_pool_[fresh], 0};
}

std::size_t FlowTable::reclaim_stale(std::uint32_t bucket, SimTime now) {
  const std::uint16_t now_s = coarse_seconds(now);
  std::size_t freed = 0;
  for (Bucket* bk = &buckets_[bucket]; bk != nullptr; bk = next_of(*bk)) {
    unsigned bits = bk->bitmap;
    while (bits != 0) {
      unsigned s = static_cast<unsigned>(std::countr_zero(bits));
      bits &= bits - 1;
      const BucketEntry e = bk->entries[s];
      if (!is_stale(now_s, e.timestamp)) continue;
      if (on_evict_) on_evict_(e.index, records_[e.index]);
      bk->bitmap = static_cast<std::uint8_t>(bk->bitmap & ~(1U << s));
      push_free(e.index);
      --occupied_;
      ++freed;
    }
  }
  // Unlink chained buckets that became empty.
  Bucket* prev = &buckets_[bucket];
  while (prev->next != kNoBucket) {
    std::uint32_t cur = prev->next;
    if (chain_pool_[cur].bitmap == 0) {
      prev->next = chain_pool_[cur].next;
      chain_pool_[cur].next = kNoBucket;
      free_chain_.push_back(cur);
    } else {
      prev = &chain_pool_[cur];
    }
  }
  reclaimed_ += freed;
  return freed;
}

FlowAction FlowTable::on_packet(const PacketRecord& pkt, SimTime now) {
  const CanonicalTuple canon = canonicalize(pkt.flow);
  const std::uint32_t hash = flow_hash(symmetric_rss_hash(canon.tuple), canon.tuple);
  const std::uint32_t bucket = bucket_index(hash);
  const std::uint8_t tag = hash_tag(hash);
  const std::uint16_t now_s = coarse_seconds(now);
  const std::size_t k = config_.series_length;

  FlowAction action;
  if (auto hit = lookup(bucket, tag, canon.tuple)) {
    BucketEntry& e = hit->bucket->entries[hit->slot];
    e.timestamp = now_s;
    const std::uint32_t idx = e.index;
    FlowRecord& rec = records_[idx];
    ++rec.pkt_count;
    action.index = idx;
    action.direction = ((canon.direction == Direction::kForward) == rec.initiator_is_src)
                           ? Direction::kForward
                           : Direction::kBackward;
    if (auto label = rec.current_label()) {
      action.verdict = FlowVerdict::kTagAndForward;
      action.label = label;
      return action;
    }
    if (rec.n_features < k) {
      features_[idx * k + rec.n_features] = feature_of(pkt.length, action.direction);
      ++rec.n_features;
      if (rec.n_features == k) {
        Series s;
        s.key = rec.key;
        s.features.assign(features_.begin() + static_cast<std::ptrdiff_t>(idx * k),
                          features_.begin() + static_cast<std::ptrdiff_t>((idx + 1) * k));
        s.completed_at = now;
        s.truth = pkt.label;
        action.verdict = FlowVerdict::kSeriesReady;
        action.series = std::move(s);
        return action;
      }
    }
    action.verdict = FlowVerdict::kForwardUntagged;
    return action;
  }

  // Unseen flow: reclaim lazily when the chain is full or the data array is exhausted.
  std::optional<Slot> slot = free_slot(bucket);
  if (!slot || free_count_ == 0) {
    reclaim_stale(bucket, now);
    slot = free_slot(bucket);
  }
  if (free_count_ == 0) {
    ++dropped_;
    action.verdict = FlowVerdict::kDroppedNoCapacity;
    return action;
  }
  if (!slot) slot = append_chain_bucket(bucket);

  const std::uint32_t idx = pop_free();
  FlowRecord& rec = records_[idx];
  rec.key = canon.tuple;
  rec.label.store(kNoLabel, std::memory_order_relaxed);
  rec.pkt_count = 1;
  rec.n_features = 1;
  rec.initiator_is_src = canon.direction == Direction::kForward;
  features_[idx * k] = feature_of(pkt.length, Direction::kForward);

  BucketEntry& e = slot->bucket->entries[slot->slot];
  e.tag = tag;
  e.timestamp = now_s;
  e.index = idx;
  slot->bucket->bitmap = static_cast<std::uint8_t>(slot->bucket->bitmap | (1U << slot->slot));
  ++occupied_;
  ++inserts_;

  action.index = idx;
  action.new_flow = true;
  action.direction = Direction::kForward;
  if (k == 1) {
    Series s;
    s.key = rec.key;
    s.features = {features_[idx * k]};
    s.completed_at = now;
    s.truth = pkt.label;
    action.verdict = FlowVerdict::kSeriesReady;
    action.series = std::move(s);
  } else {
    action.verdict = FlowVerdict::kForwardUntagged;
  }
  return action;
}

std::optional<std::uint32_t> FlowTable::find_index(const FiveTuple& key) const {
  const FiveTuple c = canonicalize(key).tuple;
  const std::uint32_t hash = flow_hash(symmetric_rss_hash(c), c);
  const std::uint8_t tag = hash_tag(hash);
  for (const Bucket* bk = &buckets_[bucket_index(hash)]; bk != nullptr; bk = next_of(*bk)) {
    for (std::size_t s = 0; s < kBucketSlots; ++s) {
      if ((bk->bitmap & (1U << s)) == 0) continue;
      const BucketEntry& e = bk->entries[s];
      if (e.tag == tag && records_[e.index].key == c) return e.index;
    }
  }
  return std::nullopt;
}

const FlowRecord* FlowTable::find(const FiveTuple& key) const {
  auto idx = find_index(key);
  return idx ? &records_[*idx] : nullptr;
}

std::span<const std::int32_t> FlowTable::features(std::uint32_t index) const {
  const std::size_t k = config_.series_length;
  return {features_.data() + static_cast<std::size_t>(index) * k, records_[index].n_features};
}

bool FlowTable::apply_label(const FiveTuple& key, Label label) {
  auto idx = find_index(key);
  if (!idx) return false;
  std::int32_t expected = kNoLabel;
  records_[*idx].label.compare_exchange_strong(expected, static_cast<std::int32_t>(label.class_id()),
                                               std::memory_order_release,
                                               std::memory_order_relaxed);
  return true;
}

FlowTableStats FlowTable::stats() const {
  FlowTableStats s;
  s.records = config_.records;
  s.occupied = occupied_;
  s.free_indexes = static_cast<std::uint32_t>(free_count_);
  s.buckets = config_.buckets;
  s.chain_buckets = static_cast<std::uint32_t>(chain_pool_.size() - free_chain_.size());
  s.load_factor = load_factor();
  for (std::uint32_t b = 0; b < config_.buckets; ++b) {
    std::size_t len = 0;
    for (const Bucket* bk = next_of(buckets_[b]); bk != nullptr; bk = next_of(*bk)) ++len;
    if (s.chain_length_histogram.size() <= len) s.chain_length_histogram.resize(len + 1, 0);
    ++s.chain_length_histogram[len];
  }
  s.inserts = inserts_;
  s.reclaimed = reclaimed_;
  s.dropped = dropped_;
  return s;
}

}  // namespace dlflow
