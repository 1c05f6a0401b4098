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

#include "dlflow/model.hpp"

#include <algorithm>
#include <charconv>
#include <tuple>

namespace dlflow {
namespace {

constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

}  // namespace

CanonicalTuple canonicalize(const FiveTuple& t) {
  if (std::tie(t.dst_ip, t.dst_port) < std::tie(t.src_ip, t.src_port)) {
    return {reversed(t), Direction::kBackward};
  }
  return {t, Direction::kForward};
}

std::uint32_t symmetric_rss_hash(const FiveTuple& t) {
  const FiveTuple c = canonicalize(t).tuple;
  std::uint64_t a = (static_cast<std::uint64_t>(c.src_ip) << 32) | c.dst_ip;
  std::uint64_t b = (static_cast<std::uint64_t>(c.src_port) << 24) |
                    (static_cast<std::uint64_t>(c.dst_port) << 8) | c.proto;
  std::uint64_t h = mix64(a ^ mix64(b + 0x9e3779b97f4a7c15ULL));
  return static_cast<std::uint32_t>(h ^ (h >> 32));
}

std::string ip_to_string(std::uint32_t ip) {
  return std::to_string(ip >> 24) + '.' + std::to_string((ip >> 16) & 0xff) + '.' +
         std::to_string((ip >> 8) & 0xff) + '.' + std::to_string(ip & 0xff);
}

std::optional<std::uint32_t> parse_ip(std::string_view text) {
  std::uint32_t ip = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int octet = 0; octet < 4; ++octet) {
    unsigned value = 0;
    auto [next, ec] = std::from_chars(p, end, value);
    if (ec != std::errc{} || next == p || value > 255) return std::nullopt;
    ip = (ip << 8) | value;
    p = next;
    if (octet < 3) {
      if (p == end || *p != '.') return std::nullopt;
      ++p;
    }
  }
  if (p != end) return std::nullopt;
  return ip;
}

std::string to_string(const FiveTuple& t) {
  return ip_to_string(t.src_ip) + ':' + std::to_string(t.src_port) + "->" +
         ip_to_string(t.dst_ip) + ':' + std::to_string(t.dst_port) + '/' +
         std::to_string(t.proto);
}

std::size_t FiveTupleHash::operator()(const FiveTuple& t) const noexcept {
  std::uint64_t a = (static_cast<std::uint64_t>(t.src_ip) << 32) | t.dst_ip;
  std::uint64_t b = (static_cast<std::uint64_t>(t.src_port) << 24) |
                    (static_cast<std::uint64_t>(t.dst_port) << 8) | t.proto;
  return static_cast<std::size_t>(mix64(a ^ mix64(b)));
}

bool Series::is_sentinel() const {
  return std::all_of(features.begin(), features.end(), [](std::int32_t f) { return f == 0; });
}

Series Series::sentinel(std::size_t k) {
  Series s;
  s.features.assign(k, 0);
  return s;
}

bool is_valid_series(const Series& s) {
  if (s.features.empty()) return false;
  return std::all_of(s.features.begin(), s.features.end(), [](std::int32_t f) {
    return f != 0 && f <= static_cast<std::int32_t>(kMaxPacketLength) &&
           f >= -static_cast<std::int32_t>(kMaxPacketLength);
  });
}

std::size_t hash_features(std::span<const std::int32_t> features) noexcept {
  std::uint64_t h = 0x84222325cbf29ce4ULL ^ features.size();
  for (std::int32_t f : features) {
    h = mix64(h ^ static_cast<std::uint32_t>(f));
  }
  return static_cast<std::size_t>(h);
}

std::size_t PrefixHash::operator()(const Prefix& p) const noexcept {
  return hash_features(p.features);
}

}  // namespace dlflow
