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

#include <chrono>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dlflow {

/// Simulation time: microseconds since the start of a run.
using SimTime = std::chrono::microseconds;

inline constexpr std::size_t kDefaultSeriesLength = 10;
inline constexpr std::uint32_t kDefaultLabelCount = 200;
inline constexpr std::uint32_t kMaxPacketLength = 65535;

enum class Direction : std::int8_t { kForward = 1, kBackward = -1 };

constexpr Direction opposite(Direction d) {
  return d == Direction::kForward ? Direction::kBackward : Direction::kForward;
}

constexpr int sign(Direction d) { return static_cast<int>(d); }

struct FiveTuple {
  std::uint32_t src_ip = 0;
  std::uint32_t dst_ip = 0;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint8_t proto = 0;

  friend constexpr auto operator<=>(const FiveTuple&, const FiveTuple&) = default;
};

constexpr FiveTuple reversed(const FiveTuple& t) {
  return FiveTuple{t.dst_ip, t.src_ip, t.dst_port, t.src_port, t.proto};
}

struct CanonicalTuple {
  FiveTuple tuple;
  Direction direction = Direction::kForward;

  friend constexpr bool operator==(const CanonicalTuple&, const CanonicalTuple&) = default;
};

// The endpoint with the lexicographically smaller (ip, port) pair is the
// canonical source. Equal endpoints keep the tuple as is.
CanonicalTuple canonicalize(const FiveTuple& t);

/// Symmetric 32-bit hash of a flow, identical for both directions. Stands in
/// for the NIC-provided RSS value attached to packet metadata.
std::uint32_t symmetric_rss_hash(const FiveTuple& t);

std::string to_string(const FiveTuple& t);
std::string ip_to_string(std::uint32_t ip);
std::optional<std::uint32_t> parse_ip(std::string_view text);

struct FiveTupleHash {
  std::size_t operator()(const FiveTuple& t) const noexcept;
};

class Label {
 public:
  constexpr Label() = default;
  constexpr explicit Label(std::uint32_t class_id) : class_id_(class_id) {}

  constexpr std::uint32_t class_id() const { return class_id_; }

  friend constexpr auto operator<=>(const Label&, const Label&) = default;

 private:
  std::uint32_t class_id_ = 0;
};

struct PacketRecord {
  FiveTuple flow;
  SimTime ts{0};
  std::uint16_t length = 1;
  Direction direction = Direction::kForward;
  // Ground-truth label when the trace provides one.
  std::optional<Label> label;
};

/// The first K signed packet lengths of a flow (positive = initiator side).
/// A series whose features are all zero is a padding sentinel.
struct Series {
  FiveTuple key;
  std::vector<std::int32_t> features;
  SimTime completed_at{0};
  std::optional<Label> truth;

  std::size_t k() const { return features.size(); }
  bool is_sentinel() const;

  static Series sentinel(std::size_t k);
};

/// Checks the series invariants: non-empty, every feature nonzero and within
/// the packet length range.
bool is_valid_series(const Series& s);

struct Prefix {
  std::vector<std::int32_t> features;

  std::size_t delta() const { return features.size(); }

  friend bool operator==(const Prefix&, const Prefix&) = default;
};

struct PrefixHash {
  std::size_t operator()(const Prefix& p) const noexcept;
};

std::size_t hash_features(std::span<const std::int32_t> features) noexcept;

/// Signed feature for one packet.
constexpr std::int32_t feature_of(std::uint16_t length, Direction d) {
  return static_cast<std::int32_t>(length) * sign(d);
}

}  // namespace dlflow
