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

#include "dlflow/prefix_cache.hpp"

#include <stdexcept>

namespace dlflow {

const char* to_string(KeyMode mode) {
  switch (mode) {
    case KeyMode::kPrefix: return "prefix";
    case KeyMode::kPostfix: return "postfix";
    case KeyMode::kExact: return "exact";
  }
  return "unknown";
}

std::optional<KeyMode> parse_key_mode(std::string_view text) {
  if (text == "prefix") return KeyMode::kPrefix;
  if (text == "postfix") return KeyMode::kPostfix;
  if (text == "exact") return KeyMode::kExact;
  return std::nullopt;
}

namespace {

void check_delta(const Series& s, std::size_t delta) {
  if (delta == 0 || delta >= s.k()) {
    throw std::invalid_argument("prefix length must satisfy 1 <= delta < K (delta=" +
                                std::to_string(delta) + ", K=" + std::to_string(s.k()) + ")");
  }
}

}  // namespace

Prefix q_delta(const Series& s, std::size_t delta) {
  check_delta(s, delta);
  return Prefix{{s.features.begin(), s.features.begin() + static_cast<std::ptrdiff_t>(delta)}};
}

Prefix q_postfix(const Series& s, std::size_t delta) {
  check_delta(s, delta);
  return Prefix{{s.features.end() - static_cast<std::ptrdiff_t>(delta), s.features.end()}};
}

HitGrade grade_hit(const Series& s, Label cached, const LabelOracle& oracle) {
  return oracle(s) == cached ? HitGrade::kGood : HitGrade::kError;
}

void to_json(nlohmann::json& j, const CacheConfig& c) {
  j = nlohmann::json{{"capacity", c.capacity}, {"delta", c.delta}, {"key_mode", to_string(c.key_mode)}};
}

void from_json(const nlohmann::json& j, CacheConfig& c) {
  if (j.contains("capacity")) c.capacity = j.at("capacity").get<std::size_t>();
  if (j.contains("delta")) c.delta = j.at("delta").get<std::size_t>();
  if (j.contains("key_mode")) {
    auto mode = parse_key_mode(j.at("key_mode").get<std::string>());
    if (!mode) throw std::invalid_argument("unknown cache key_mode '" + j.at("key_mode").get<std::string>() + "'");
    c.key_mode = *mode;
  }
}

PrefixCache::PrefixCache(CacheConfig config) : config_(config) {
  if (config_.key_mode != KeyMode::kExact && config_.delta == 0) {
    throw std::invalid_argument("prefix length must be at least 1");
  }
  index_.reserve(config_.capacity);
}

Prefix PrefixCache::key_of(const Series& s) const {
  switch (config_.key_mode) {
    case KeyMode::kPrefix: return q_delta(s, config_.delta);
    case KeyMode::kPostfix: return q_postfix(s, config_.delta);
    case KeyMode::kExact: return Prefix{s.features};
  }
  return Prefix{s.features};
}

std::optional<Label> PrefixCache::lookup(const Prefix& key) {
  ++counters_.lookups;
  auto it = index_.find(key);
  if (it == index_.end()) {
    ++counters_.misses;
    return std::nullopt;
  }
  ++counters_.hits;
  lru_.splice(lru_.begin(), lru_, it->second);
  return it->second->second;
}

void PrefixCache::insert(Prefix key, Label label) {
  if (!enabled()) return;
  ++counters_.inserts;
  if (auto it = index_.find(key); it != index_.end()) {
    it->second->second = label;
    lru_.splice(lru_.begin(), lru_, it->second);
    return;
  }
  lru_.emplace_front(std::move(key), label);
  index_.emplace(lru_.front().first, lru_.begin());
  if (index_.size() > config_.capacity) {
    index_.erase(lru_.back().first);
    lru_.pop_back();
    ++counters_.evictions;
  }
}

std::vector<Prefix> PrefixCache::recency_order() const {
  std::vector<Prefix> out;
  out.reserve(lru_.size());
  for (const auto& [key, label] : lru_) out.push_back(key);
  return out;
}

std::vector<std::pair<Series, Label>> PrefixCache::filter_ring(CRing<Series>& ring) {
  std::vector<std::pair<Series, Label>> hits;
  if (!enabled()) return hits;
  std::vector<Label> labels;
  std::vector<Series> pulled = ring.extract_if([&](const Series& s) {
    if (auto label = lookup(key_of(s))) {
      labels.push_back(*label);
      return true;
    }
    return false;
  });
  hits.reserve(pulled.size());
  for (std::size_t i = 0; i < pulled.size(); ++i) hits.emplace_back(std::move(pulled[i]), labels[i]);
  return hits;
}

std::size_t PrefixCache::insert_results(std::span<const Series> slots, std::span<const Label> labels) {
  if (!enabled()) return 0;
  std::size_t next = 0;
  for (const Series& s : slots) {
    if (s.is_sentinel()) continue;
    if (next >= labels.size()) throw std::invalid_argument("fewer labels than real batch slots");
    insert(key_of(s), labels[next++]);
  }
  return next;
}

}  // namespace dlflow
