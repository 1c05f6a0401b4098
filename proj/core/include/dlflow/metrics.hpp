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

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dlflow/model.hpp"

namespace dlflow {

/// Boxplot percentiles: 1st, 25th, 50th, 75th, 99th.
struct Percentiles {
  double p1 = 0.0;
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
  double p99 = 0.0;
};

/// Linear interpolation between closest ranks; q in [0, 1]. Expects sorted input.
double percentile_sorted(const std::vector<double>& sorted, double q);
Percentiles summarize(std::vector<double> samples);

struct WindowMetrics {
  std::int64_t busy_real_us = 0;
  std::int64_t busy_padding_us = 0;
  std::uint64_t batches = 0;
  std::uint64_t batch_size_sum = 0;
  std::uint64_t padding_slots = 0;
  std::uint64_t labels = 0;
  double delay_sum_ms = 0.0;
  std::uint64_t series = 0;
  std::uint64_t cache_hits = 0;
};

enum class LabelSource : std::uint8_t { kCache, kInference };

struct FlowOutcome {
  FiveTuple key;
  std::int64_t series_at_us = 0;
  std::int64_t label_at_us = -1;
  std::int64_t label = -1;
  LabelSource source = LabelSource::kInference;
};

struct BatchRecord {
  std::uint32_t manager = 0;
  std::int64_t submit_us = 0;
  std::uint32_t model_size = 0;
  std::uint32_t take = 0;
  std::uint32_t padding = 0;
};

struct MetricsReport {
  std::uint64_t packets = 0;
  std::uint64_t flows = 0;
  std::uint64_t table_dropped_packets = 0;
  std::uint64_t series = 0;
  std::uint64_t ring_dropped = 0;
  std::uint64_t inferred = 0;
  std::uint64_t cache_lookups = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t good_hits = 0;
  std::uint64_t error_hits = 0;

  std::uint64_t batches = 0;
  std::uint64_t model_slots = 0;
  std::uint64_t padding_slots = 0;
  std::vector<double> padding_ratios;  // one per batch, in submission order

  std::vector<double> delay_ms;  // one per delivered label, in delivery order
  std::uint64_t post_mortem = 0;
  std::uint64_t long_lived_series_flows = 0;
  std::uint64_t untagged_long_lived_packets = 0;
  std::vector<double> untagged_per_long_lived_flow;

  std::int64_t busy_real_us = 0;
  std::int64_t busy_padding_us = 0;
  std::int64_t wall_us = 0;
  std::uint32_t chips = 0;

  std::int64_t window_us = 1'000'000;
  std::vector<WindowMetrics> windows;

  bool detail = false;
  std::vector<FlowOutcome> outcomes;  // filled when detail is on
  std::vector<BatchRecord> batch_log;  // filled when detail is on

  double cache_hit_ratio() const {
    return cache_lookups == 0 ? 0.0 : static_cast<double>(cache_hits) / static_cast<double>(cache_lookups);
  }
  double post_mortem_ratio() const {
    return series == 0 ? 0.0 : static_cast<double>(post_mortem) / static_cast<double>(series);
  }
  /// Busy fraction of the accelerator over the run, all chips together.
  double usage() const;
  double usage_padding() const;
  /// Share of busy time spent on padding slots.
  double padding_share() const;

  WindowMetrics& window_at(std::int64_t t_us);
  /// Busy interval attributed to windows, split between real and padding.
  void add_busy(std::int64_t start_us, std::int64_t end_us, std::size_t real, std::size_t model_size);
};

nlohmann::json to_json(const MetricsReport& r);
/// Per-window CSV for plotting; first line is a versioned column header.
std::string windows_csv(const MetricsReport& r);

inline constexpr const char* kWindowsCsvVersion = "dlflow-windows-v1";

}  // namespace dlflow
