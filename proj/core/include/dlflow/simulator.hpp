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
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "dlflow/accelerator.hpp"
#include "dlflow/analytics.hpp"
#include "dlflow/batching.hpp"
#include "dlflow/cring.hpp"
#include "dlflow/flow_table.hpp"
#include "dlflow/metrics.hpp"
#include "dlflow/prefix_cache.hpp"
#include "dlflow/traffic.hpp"

namespace dlflow {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// flow managers : analytics managers : chips, per pipeline.
enum class Topology { kOneOneOne, kTwoOneOne, kOneOneTwo };

const char* to_string(Topology t);
std::optional<Topology> parse_topology(std::string_view text);

struct Deployment {
  Topology topology = Topology::kOneOneOne;
  std::size_t pipelines = 1;
  MergeOrder merge = MergeOrder::kRoundRobin;

  std::size_t flow_managers() const {
    return pipelines * (topology == Topology::kTwoOneOne ? 2 : 1);
  }
  std::size_t analytics_managers() const { return pipelines; }
  /// Chips served by one analytics manager.
  std::uint32_t chips_per_manager(const AcceleratorProfile& profile) const {
    return profile.chips * (topology == Topology::kOneOneTwo ? 2U : 1U);
  }
};

struct SimConfig {
  Deployment deployment;
  PolicyConfig policy;
  CacheConfig cache;
  AcceleratorProfile profile;
  FlowTableConfig table;
  std::size_t ring_capacity = kDefaultRingCapacity;
  std::uint32_t label_count = kDefaultLabelCount;
  SimTime window = std::chrono::seconds(1);
  // Records per-flow outcomes and per-batch plans in the report.
  bool detail = false;

  /// Throws ConfigError.
  void validate() const;
};

/// Deterministic discrete-event run of the full pipeline over a trace.
MetricsReport run(TraceSource& trace, const SimConfig& config);

/// Naive list-based re-implementation of the same semantics, used as an
/// oracle on tiny traces (at most 1000 packets, no flow-table pressure).
MetricsReport reference_run(TraceSource& trace, const SimConfig& config);

}  // namespace dlflow
