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

#include "dlflow/accelerator.hpp"

#include <algorithm>
#include <cmath>

namespace dlflow {

LabelOracle::LabelOracle(std::uint32_t label_count, bool use_ground_truth)
    : label_count_(label_count), use_ground_truth_(use_ground_truth) {
  if (label_count_ == 0) throw std::invalid_argument("label count must be positive");
}

Label LabelOracle::operator()(const Series& s) const {
  if (use_ground_truth_ && s.truth) return *s.truth;
  return Label(static_cast<std::uint32_t>(hash_features(s.features) % label_count_));
}

void AcceleratorProfile::validate() const {
  if (c0_ms < 0.0 || c1_ms < 0.0) throw std::invalid_argument("latency coefficients must be >= 0");
  if (chips == 0) throw std::invalid_argument("profile needs at least one chip");
  if (power_watts < 0.0) throw std::invalid_argument("power must be >= 0");
  for (std::size_t b : sizes.sizes()) {
    if (!(latency_ms(b) > 0.0)) {
      throw std::invalid_argument("latency must be strictly positive for batch " +
                                  std::to_string(b));
    }
  }
  for (std::size_t i = 1; i < latency_table.size(); ++i) {
    if (latency_table[i].first <= latency_table[i - 1].first) {
      throw std::invalid_argument("latency table batch sizes must increase");
    }
  }
}

double AcceleratorProfile::latency_ms(std::size_t batch) const {
  if (latency_table.empty()) return c0_ms + c1_ms * static_cast<double>(batch);
  const auto& t = latency_table;
  if (t.size() == 1 || batch <= t.front().first) return t.front().second;
  if (batch >= t.back().first) {
    // Extrapolate along the last segment.
    const auto& [b0, l0] = t[t.size() - 2];
    const auto& [b1, l1] = t.back();
    return l1 + (l1 - l0) / static_cast<double>(b1 - b0) * static_cast<double>(batch - b1);
  }
  auto hi = std::lower_bound(t.begin(), t.end(), batch,
                             [](const auto& p, std::size_t b) { return p.first < b; });
  auto lo = std::prev(hi);
  const double frac = static_cast<double>(batch - lo->first) / static_cast<double>(hi->first - lo->first);
  return lo->second + frac * (hi->second - lo->second);
}

SimTime AcceleratorProfile::latency(std::size_t batch) const {
  auto us = static_cast<std::int64_t>(std::llround(latency_ms(batch) * 1000.0));
  return SimTime(std::max<std::int64_t>(us, 1));
}

double AcceleratorProfile::rate(std::size_t batch) const {
  return static_cast<double>(batch) / (latency_ms(batch) / 1000.0);
}

std::optional<AcceleratorProfile> builtin_profile(std::string_view name) {
  AcceleratorProfile p;
  p.name = std::string(name);
  // Constants are configuration values, not measurements. They keep the
  // single TPU chip ahead for small batches and the GPU ahead for large ones.
  if (name == "tpu1") {
    p.c0_ms = 0.5;
    p.c1_ms = 0.015;
    p.power_watts = 12.8;
    p.chips = 1;
  } else if (name == "tpu4") {
    p.c0_ms = 0.5;
    p.c1_ms = 0.015;
    p.power_watts = 12.8;
    p.chips = 4;
  } else if (name == "gpu") {
    p.c0_ms = 3.0;
    p.c1_ms = 0.004;
    p.power_watts = 70.0;
    p.chips = 1;
  } else if (name == "cpu1") {
    p.c0_ms = 0.05;
    p.c1_ms = 0.08;
    p.power_watts = 10.0;
    p.chips = 1;
  } else if (name == "cpu52") {
    p.c0_ms = 0.3;
    p.c1_ms = 0.01;
    p.power_watts = 150.0;
    p.chips = 1;
  } else {
    return std::nullopt;
  }
  return p;
}

std::vector<std::string> builtin_profile_names() { return {"tpu1", "tpu4", "gpu", "cpu1", "cpu52"}; }

void to_json(nlohmann::json& j, const AcceleratorProfile& p) {
  j = nlohmann::json{{"name", p.name},
                     {"batch_sizes", std::vector<std::size_t>(p.sizes.sizes().begin(), p.sizes.sizes().end())},
                     {"c0_ms", p.c0_ms},
                     {"c1_ms", p.c1_ms},
                     {"power_watts", p.power_watts},
                     {"chips", p.chips}};
  if (!p.latency_table.empty()) j["latency_table"] = p.latency_table;
}

void from_json(const nlohmann::json& j, AcceleratorProfile& p) {
  if (j.contains("profile")) {
    auto base = builtin_profile(j.at("profile").get<std::string>());
    if (!base) throw std::invalid_argument("unknown accelerator profile '" + j.at("profile").get<std::string>() + "'");
    p = *base;
  }
  if (j.contains("name")) p.name = j.at("name").get<std::string>();
  if (j.contains("batch_sizes")) p.sizes = BatchSizeSet(j.at("batch_sizes").get<std::vector<std::size_t>>());
  if (j.contains("c0_ms")) p.c0_ms = j.at("c0_ms").get<double>();
  if (j.contains("c1_ms")) p.c1_ms = j.at("c1_ms").get<double>();
  if (j.contains("power_watts")) p.power_watts = j.at("power_watts").get<double>();
  if (j.contains("chips")) p.chips = j.at("chips").get<std::uint32_t>();
  if (j.contains("latency_table")) {
    p.latency_table = j.at("latency_table").get<std::vector<std::pair<std::size_t, double>>>();
  }
  p.validate();
}

const char* to_string(Quadrant q) {
  switch (q) {
    case Quadrant::kDesirable: return "desirable";
    case Quadrant::kTooSlow: return "too_slow";
    case Quadrant::kTooHungry: return "too_hungry";
    case Quadrant::kAvoid: return "avoid";
  }
  return "unknown";
}

QuadrantPoint classify_quadrant(double power_watts, double rate_per_second) {
  QuadrantPoint q;
  q.power_ratio = power_watts / kPowerTargetWatts;
  q.rate_ratio = rate_per_second / kRateTargetPerSecond;
  const bool power_ok = q.power_ratio <= 1.0;
  const bool rate_ok = q.rate_ratio >= 1.0;
  if (power_ok && rate_ok) {
    q.quadrant = Quadrant::kDesirable;
  } else if (power_ok) {
    q.quadrant = Quadrant::kTooSlow;
  } else if (rate_ok) {
    q.quadrant = Quadrant::kTooHungry;
  } else {
    q.quadrant = Quadrant::kAvoid;
  }
  return q;
}

QuadrantPoint quadrant(const AcceleratorProfile& profile, std::size_t batch) {
  return classify_quadrant(profile.power_watts * profile.chips, profile.rate(batch) * profile.chips);
}

std::pair<SimTime, SimTime> split_busy(SimTime latency, std::size_t real, std::size_t model_size) {
  if (model_size == 0) return {SimTime::zero(), SimTime::zero()};
  SimTime busy_real(latency.count() * static_cast<std::int64_t>(real) /
                    static_cast<std::int64_t>(model_size));
  return {busy_real, latency - busy_real};
}

InferenceResult AcceleratorChip::infer(std::span<const Series> batch, SimTime now) {
  if (!profile_->sizes.contains(batch.size())) throw BatchSizeUnsupported(batch.size());
  if (!idle_at(now)) throw std::logic_error("chip is busy");
  InferenceResult out;
  std::size_t real = 0;
  for (const Series& s : batch) {
    if (s.is_sentinel()) continue;
    out.labels.push_back((*oracle_)(s));
    ++real;
  }
  const SimTime lat = profile_->latency(batch.size());
  out.completion = now + lat;
  std::tie(out.busy_real, out.busy_padding) = split_busy(lat, real, batch.size());
  busy_until_ = out.completion;
  return out;
}

InferenceResult AcceleratorChip::infer_padded(std::span<const Series> real, std::size_t model_size,
                                              SimTime now) {
  if (!profile_->sizes.contains(model_size)) throw BatchSizeUnsupported(model_size);
  if (real.size() > model_size) throw std::invalid_argument("more series than batch slots");
  if (!idle_at(now)) throw std::logic_error("chip is busy");
  InferenceResult out;
  out.labels.reserve(real.size());
  for (const Series& s : real) out.labels.push_back((*oracle_)(s));
  const SimTime lat = profile_->latency(model_size);
  out.completion = now + lat;
  std::tie(out.busy_real, out.busy_padding) = split_busy(lat, real.size(), model_size);
  busy_until_ = out.completion;
  return out;
}

}  // namespace dlflow
