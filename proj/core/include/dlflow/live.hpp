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
#include <cstdint>

#include <nlohmann/json.hpp>

#include "dlflow/simulator.hpp"

namespace dlflow {

struct LiveOptions {
  // Stops dispatching new packets after this much wall time; zero replays
  // the whole trace.
  std::chrono::milliseconds max_wall{0};
  // Capacity of each dispatcher-to-flow-manager packet ring.
  std::size_t packet_ring_capacity = 1U << 14;
};

struct LiveReport {
  std::uint64_t packets = 0;
  std::uint64_t table_dropped_packets = 0;
  std::uint64_t series_produced = 0;
  std::uint64_t ring_dropped = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t inferred = 0;
  std::uint64_t batches = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t labels_applied = 0;
  std::uint64_t left_in_rings = 0;
  double wall_s = 0.0;

  bool conserved() const {
    return left_in_rings == 0 && cache_hits + inferred + ring_dropped == series_produced;
  }
};

void to_json(nlohmann::json& j, const LiveReport& r);

/// Runs the pipeline with one thread per flow manager and per analytics
/// manager plus the calling thread as dispatcher. Managers talk only through
/// rings: series flow forward, labels come back to the owning flow manager.
/// Deadlines and accelerator latency follow the wall clock, so results are
/// not reproducible run to run.
LiveReport run_live(TraceSource& trace, const SimConfig& config, const LiveOptions& options = {});

}  // namespace dlflow
