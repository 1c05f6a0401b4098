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
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dlflow/batching.hpp"
#include "dlflow/model.hpp"

namespace dlflow {

/// Deterministic stand-in for a trained classifier: equal series always map
/// to equal labels. Uses the series' ground-truth label when present,
/// otherwise a stable hash of the full feature vector modulo the class count.
class LabelOracle {
 public:
  explicit LabelOracle(std::uint32_t label_count = kDefaultLabelCount,
                       bool use_ground_truth = true);

  Label operator()(const Series& s) const;
  std::uint32_t label_count() const { return label_count_; }

 private:
  std::uint32_t label_count_;
  bool use_ground_truth_;
};

class BatchSizeUnsupported : public std::runtime_error {
 public:
  explicit BatchSizeUnsupported(std::size_t b)
      : std::runtime_error("batch size " + std::to_string(b) + " not supported by profile"),
        batch_size_(b) {}
  std::size_t batch_size() const { return batch_size_; }

 private:
  std::size_t batch_size_;
};

struct AcceleratorProfile {
  std::string name = "tpu1";
  BatchSizeSet sizes;
  // latency(B) = c0 + c1 * B, milliseconds, unless a measured table is given.
  double c0_ms = 0.5;
  double c1_ms = 0.015;
  double power_watts = 12.8;  // active power per chip
  std::uint32_t chips = 1;
  // Optional measured (batch size, latency ms) points; interpolated
  // piecewise-linearly and preferred over the affine model when present.
  std::vector<std::pair<std::size_t, double>> latency_table;

  void validate() const;

  double latency_ms(std::size_t batch) const;
  SimTime latency(std::size_t batch) const;
  /// Classifications per second for one chip.
  double rate(std::size_t batch) const;
};

/// Built-in profiles: tpu1, tpu4, gpu, cpu1, cpu52.
std::optional<AcceleratorProfile> builtin_profile(std::string_view name);
std::vector<std::string> builtin_profile_names();

void to_json(nlohmann::json& j, const AcceleratorProfile& p);
void from_json(const nlohmann::json& j, AcceleratorProfile& p);

enum class Quadrant {
  kDesirable,      // within power budget, meets rate target
  kTooSlow,        // within power budget, misses rate target
  kTooHungry,      // meets rate target, over power budget
  kAvoid,          // fails both
};

const char* to_string(Quadrant q);

inline constexpr double kPowerTargetWatts = 30.0;
inline constexpr double kRateTargetPerSecond = 50'000.0;

struct QuadrantPoint {
  double power_ratio = 0.0;
  double rate_ratio = 0.0;
  Quadrant quadrant = Quadrant::kAvoid;
};

QuadrantPoint classify_quadrant(double power_watts, double rate_per_second);
/// Whole-device point: all chips active at batch size b.
QuadrantPoint quadrant(const AcceleratorProfile& profile, std::size_t batch);

struct InferenceResult {
  std::vector<Label> labels;  // one per real (non-sentinel) slot, in order
  SimTime completion{0};
  SimTime busy_real{0};
  SimTime busy_padding{0};
};

/// One chip of an accelerator. Serves one batch at a time.
class AcceleratorChip {
 public:
  AcceleratorChip(const AcceleratorProfile& profile, const LabelOracle& oracle)
      : profile_(&profile), oracle_(&oracle) {}

  bool idle_at(SimTime now) const { return busy_until_ <= now; }
  SimTime busy_until() const { return busy_until_; }

  /// Submits a batch at `now`. Throws BatchSizeUnsupported for sizes outside
  /// the profile and std::logic_error when the chip is still busy.
  InferenceResult infer(std::span<const Series> batch, SimTime now);
  /// Same as infer() for a batch of `real` followed by implicit padding up
  /// to model_size.
  InferenceResult infer_padded(std::span<const Series> real, std::size_t model_size, SimTime now);

 private:
  const AcceleratorProfile* profile_;
  const LabelOracle* oracle_;
  SimTime busy_until_{0};
};

/// Splits a batch's busy time between real and padding slots in proportion
/// to their counts.
std::pair<SimTime, SimTime> split_busy(SimTime latency, std::size_t real, std::size_t model_size);

}  // namespace dlflow
