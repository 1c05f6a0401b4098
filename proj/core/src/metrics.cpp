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

#include "dlflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace dlflow {

double percentile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

Percentiles summarize(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  return Percentiles{percentile_sorted(samples, 0.01), percentile_sorted(samples, 0.25),
                     percentile_sorted(samples, 0.50), percentile_sorted(samples, 0.75),
                     percentile_sorted(samples, 0.99)};
}

double MetricsReport::usage() const {
  if (wall_us <= 0 || chips == 0) return 0.0;
  return static_cast<double>(busy_real_us + busy_padding_us) /
         (static_cast<double>(wall_us) * static_cast<double>(chips));
}

double MetricsReport::usage_padding() const {
  if (wall_us <= 0 || chips == 0) return 0.0;
  return static_cast<double>(busy_padding_us) / (static_cast<double>(wall_us) * static_cast<double>(chips));
}

double MetricsReport::padding_share() const {
  const std::int64_t total = busy_real_us + busy_padding_us;
  return total == 0 ? 0.0 : static_cast<double>(busy_padding_us) / static_cast<double>(total);
}

WindowMetrics& MetricsReport::window_at(std::int64_t t_us) {
  const auto idx = static_cast<std::size_t>(std::max<std::int64_t>(t_us, 0) / window_us);
  if (windows.size() <= idx) windows.resize(idx + 1);
  return windows[idx];
}

void MetricsReport::add_busy(std::int64_t start_us, std::int64_t end_us, std::size_t real,
                             std::size_t model_size) {
  if (model_size == 0 || end_us <= start_us) return;
  std::int64_t t = start_us;
  while (t < end_us) {
    const std::int64_t window_end = (t / window_us + 1) * window_us;
    const std::int64_t stop = std::min(window_end, end_us);
    const std::int64_t overlap = stop - t;
    const std::int64_t real_part =
        overlap * static_cast<std::int64_t>(real) / static_cast<std::int64_t>(model_size);
    WindowMetrics& w = window_at(t);
    w.busy_real_us += real_part;
    w.busy_padding_us += overlap - real_part;
    t = stop;
  }
}

namespace {

nlohmann::json to_json(const Percentiles& p) {
  return nlohmann::json{{"p1", p.p1}, {"p25", p.p25}, {"p50", p.p50}, {"p75", p.p75}, {"p99", p.p99}};
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["counts"] = {{"packets", r.packets},
                 {"flows", r.flows},
                 {"table_dropped_packets", r.table_dropped_packets},
                 {"series", r.series},
                 {"ring_dropped", r.ring_dropped},
                 {"inferred", r.inferred},
                 {"batches", r.batches},
                 {"model_slots", r.model_slots},
                 {"padding_slots", r.padding_slots}};
  j["cache"] = {{"lookups", r.cache_lookups},
                {"hits", r.cache_hits},
                {"good_hits", r.good_hits},
                {"error_hits", r.error_hits},
                {"hit_ratio", r.cache_hit_ratio()}};
  j["delay_to_label_ms"] = to_json(summarize(r.delay_ms));
  j["delay_to_label_ms"]["samples"] = r.delay_ms.size();
  j["delay_to_label_ms"]["mean"] = mean(r.delay_ms);
  j["padding_ratio"] = to_json(summarize(r.padding_ratios));
  j["padding_ratio"]["mean"] = mean(r.padding_ratios);
  j["post_mortem"] = {{"flows", r.post_mortem}, {"ratio", r.post_mortem_ratio()}};
  j["untagged_long_lived"] = to_json(summarize(r.untagged_per_long_lived_flow));
  j["untagged_long_lived"]["flows"] = r.long_lived_series_flows;
  j["untagged_long_lived"]["packets"] = r.untagged_long_lived_packets;
  j["usage"] = {{"busy_real_us", r.busy_real_us},
                {"busy_padding_us", r.busy_padding_us},
                {"wall_us", r.wall_us},
                {"chips", r.chips},
                {"total", r.usage()},
                {"padding", r.usage_padding()},
                {"padding_share", r.padding_share()}};
  nlohmann::json windows = nlohmann::json::array();
  for (std::size_t i = 0; i < r.windows.size(); ++i) {
    const WindowMetrics& w = r.windows[i];
    windows.push_back({{"index", i},
                       {"busy_real_us", w.busy_real_us},
                       {"busy_padding_us", w.busy_padding_us},
                       {"batches", w.batches},
                       {"batch_size_sum", w.batch_size_sum},
                       {"padding_slots", w.padding_slots},
                       {"labels", w.labels},
                       {"delay_sum_ms", w.delay_sum_ms},
                       {"series", w.series},
                       {"cache_hits", w.cache_hits}});
  }
  j["windows"] = {{"window_us", r.window_us}, {"rows", windows}};
  if (r.detail) {
    nlohmann::json outcomes = nlohmann::json::array();
    for (const FlowOutcome& o : r.outcomes) {
      outcomes.push_back({{"key", to_string(o.key)},
                          {"series_at_us", o.series_at_us},
                          {"label_at_us", o.label_at_us},
                          {"label", o.label},
                          {"source", o.source == LabelSource::kCache ? "cache" : "inference"}});
    }
    nlohmann::json batches = nlohmann::json::array();
    for (const BatchRecord& b : r.batch_log) {
      batches.push_back({{"manager", b.manager},
                         {"submit_us", b.submit_us},
                         {"model_size", b.model_size},
                         {"take", b.take},
                         {"padding", b.padding}});
    }
    j["detail"] = {{"outcomes", outcomes}, {"batches", batches}, {"padding_ratios", r.padding_ratios},
                   {"delay_ms", r.delay_ms}};
  }
  return j;
}

std::string windows_csv(const MetricsReport& r) {
  std::ostringstream out;
  out << "# " << kWindowsCsvVersion << '\n';
  out << "window,start_s,usage,usage_padding,batches,avg_batch_size,avg_padding_ratio,labels,"
         "avg_delay_ms,series,cache_hits\n";
  const double window_s = static_cast<double>(r.window_us) / 1e6;
  const double capacity = static_cast<double>(r.window_us) * std::max<std::uint32_t>(r.chips, 1);
  for (std::size_t i = 0; i < r.windows.size(); ++i) {
    const WindowMetrics& w = r.windows[i];
    const double avg_b = w.batches == 0 ? 0.0 : static_cast<double>(w.batch_size_sum) / static_cast<double>(w.batches);
    const double avg_pad = w.batch_size_sum == 0 ? 0.0 : static_cast<double>(w.padding_slots) / static_cast<double>(w.batch_size_sum);
    const double avg_delay = w.labels == 0 ? 0.0 : w.delay_sum_ms / static_cast<double>(w.labels);
    out << i << ',' << static_cast<double>(i) * window_s << ','
        << static_cast<double>(w.busy_real_us + w.busy_padding_us) / capacity << ','
        << static_cast<double>(w.busy_padding_us) / capacity << ',' << w.batches << ',' << avg_b << ','
        << avg_pad << ',' << w.labels << ',' << avg_delay << ',' << w.series << ',' << w.cache_hits
        << '\n';
  }
  return out.str();
}

}  // namespace dlflow
