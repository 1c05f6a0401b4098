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
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "dlflow/model.hpp"

namespace dlflow {

/// Flows with fewer packets than this are short-lived.
inline constexpr std::uint32_t kLongLivedPackets = 35;

constexpr bool is_long_lived(std::uint64_t packets) { return packets >= kLongLivedPackets; }

struct PacketShape {
  std::int64_t gap_us = 0;  // since the previous packet of the flow
  std::uint16_t length = 1;
  Direction direction = Direction::kForward;

  friend bool operator==(const PacketShape&, const PacketShape&) = default;
};

struct FlowShape {
  std::vector<PacketShape> packets;  // first gap is 0, first packet forward
  std::optional<Label> label;

  friend bool operator==(const FlowShape&, const FlowShape&) = default;
};

bool is_valid_shape(const FlowShape& shape);

struct Catalog {
  std::vector<FlowShape> shapes;
};

/// Parameters of the synthetic stand-in catalog.
struct CatalogConfig {
  std::size_t size = 10'000;
  double short_fraction = 0.8;
  std::uint32_t short_min_packets = 2;
  std::uint32_t short_max_packets = 34;
  std::uint32_t long_min_packets = 35;
  std::uint32_t long_max_packets = 3000;
  std::uint16_t min_length = 40;
  std::uint16_t max_length = 1500;
  double gap_mean_us = 5000.0;
  double backward_probability = 0.5;
  // With this probability a packet length is drawn from common_lengths
  // instead of the uniform range; gives series shared prefixes.
  std::vector<std::uint16_t> common_lengths;
  double common_length_probability = 0.0;
  // Ground-truth labels drawn uniformly in [0, label_count) when nonzero.
  std::uint32_t label_count = 0;
};

void to_json(nlohmann::json& j, const CatalogConfig& c);
void from_json(const nlohmann::json& j, CatalogConfig& c);

Catalog make_synthetic_catalog(const CatalogConfig& config, std::uint64_t seed);

/// Pull-based packet stream in non-decreasing timestamp order.
class TraceSource {
 public:
  virtual ~TraceSource() = default;
  virtual std::optional<PacketRecord> next() = 0;
};

class VectorTrace final : public TraceSource {
 public:
  explicit VectorTrace(std::vector<PacketRecord> packets) : packets_(std::move(packets)) {}
  std::optional<PacketRecord> next() override {
    if (pos_ >= packets_.size()) return std::nullopt;
    return packets_[pos_++];
  }

 private:
  std::vector<PacketRecord> packets_;
  std::size_t pos_ = 0;
};

std::vector<PacketRecord> collect(TraceSource& source);

struct RateSegment {
  double flows_per_second = 0.0;
  double duration_s = 0.0;
};

/// Parses "10000:120,70000:120" into segments.
std::vector<RateSegment> parse_schedule(std::string_view text);

struct GeneratorConfig {
  std::vector<RateSegment> schedule;
  std::uint64_t seed = 1;
  // Zipf exponent over catalog entries; 0 picks shapes uniformly.
  double popularity_skew = 0.0;
};

/// Poisson flow arrivals, one catalog shape and a fresh 5-tuple per flow.
/// Packets are emitted globally time-sorted; deterministic given the seed.
class PoissonTraceGenerator final : public TraceSource {
 public:
  PoissonTraceGenerator(GeneratorConfig config, std::shared_ptr<const Catalog> catalog);

  std::optional<PacketRecord> next() override;

  std::uint64_t flows_started() const { return next_flow_id_; }

  /// Tuple assigned to the n-th generated flow (initiator is the source).
  static FiveTuple tuple_for_flow(std::uint64_t flow_id);

 private:
  struct ActiveFlow {
    std::int64_t next_ts = 0;
    std::uint64_t flow_id = 0;
    std::uint32_t shape = 0;
    std::uint32_t packet = 0;
  };
  struct Later {
    bool operator()(const ActiveFlow& a, const ActiveFlow& b) const {
      if (a.next_ts != b.next_ts) return a.next_ts > b.next_ts;
      return a.flow_id > b.flow_id;
    }
  };

  void advance_arrival();
  std::uint32_t pick_shape();
  // Restores heap order after the top entry was overwritten.
  void sift_top();

  GeneratorConfig config_;
  std::shared_ptr<const Catalog> catalog_;
  std::mt19937_64 rng_;
  std::vector<double> popularity_cdf_;

  std::size_t segment_ = 0;
  double segment_start_us_ = 0.0;
  double clock_us_ = 0.0;
  std::optional<std::int64_t> next_arrival_;
  std::uint64_t next_flow_id_ = 0;
  std::vector<ActiveFlow> active_;  // binary heap under Later
};

std::unique_ptr<PoissonTraceGenerator> generate_trace(double flows_per_second, double duration_s,
                                                      std::shared_ptr<const Catalog> catalog,
                                                      std::uint64_t seed);
std::unique_ptr<PoissonTraceGenerator> piecewise_rate(std::vector<RateSegment> schedule,
                                                      std::shared_ptr<const Catalog> catalog,
                                                      std::uint64_t seed);

/// RSS-style dispatch of flows onto pipelines; both directions of a flow land
/// on the same pipeline.
class Dispatcher {
 public:
  explicit Dispatcher(std::size_t pipelines);
  std::size_t dispatch(const PacketRecord& pkt) const;
  std::size_t pipelines() const { return pipelines_; }

 private:
  std::size_t pipelines_;
};

struct TraceStats {
  std::uint64_t volume_bytes = 0;
  std::uint64_t packets = 0;
  std::uint64_t flows = 0;
  std::uint64_t series = 0;  // flows with at least K packets
  std::uint64_t long_lived_flows = 0;
  double duration_s = 0.0;
  double link_load_bps = 0.0;  // 0: rates are not rescaled
  double mpps = 0.0;
  double kflows_per_s = 0.0;
  double kclass_per_s = 0.0;
};

void to_json(nlohmann::json& j, const TraceStats& s);

/// Counts and per-second rates; with a nonzero link load the rates are
/// rescaled to the packet volume that load would carry.
TraceStats compute_stats(TraceSource& trace, std::size_t k, double link_load_bps = 0.0);

/// Wraps a source and tallies statistics as packets pass through.
class StatsTap final : public TraceSource {
 public:
  StatsTap(TraceSource& inner, std::size_t k) : inner_(&inner), k_(k) {}
  std::optional<PacketRecord> next() override;
  TraceStats finish(double link_load_bps = 0.0) const;

 private:
  TraceSource* inner_;
  std::size_t k_;
  std::unordered_map<FiveTuple, std::uint64_t, FiveTupleHash> per_flow_;
  std::uint64_t bytes_ = 0;
  std::uint64_t packets_ = 0;
  std::int64_t first_ts_ = -1;
  std::int64_t last_ts_ = 0;
};

}  // namespace dlflow
