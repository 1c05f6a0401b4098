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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dlflow/model.hpp"

namespace dlflow {

/// Sorted set of batch sizes a hosted model accepts.
class BatchSizeSet {
 public:
  /// Powers of two from 8 to 1024.
  BatchSizeSet();
  explicit BatchSizeSet(std::vector<std::size_t> sizes);

  std::span<const std::size_t> sizes() const { return sizes_; }
  std::size_t min() const { return sizes_.front(); }
  std::size_t max() const { return sizes_.back(); }
  bool contains(std::size_t b) const;

  std::optional<std::size_t> smallest_at_least(std::size_t r) const;
  std::optional<std::size_t> largest_at_most(std::size_t r) const;

  friend bool operator==(const BatchSizeSet&, const BatchSizeSet&) = default;

 private:
  std::vector<std::size_t> sizes_;
};

enum class PolicyMode { kTimeout, kCarryOver, kNoTimeout };

const char* to_string(PolicyMode mode);
std::optional<PolicyMode> parse_policy_mode(std::string_view text);

struct PolicyConfig {
  PolicyMode mode = PolicyMode::kCarryOver;
  SimTime timeout = std::chrono::milliseconds(10);
  double phi = 0.2;  // maximum accepted padding fraction, within [0, 0.5]
  BatchSizeSet sizes;

  /// Throws std::invalid_argument on an out-of-range phi or a non-positive
  /// timeout for the deadline-driven modes.
  void validate() const;
};

struct BatchPlan {
  std::size_t model_size = 0;
  std::size_t take = 0;
  std::size_t padding = 0;
  std::size_t carried_over = 0;
  // Carry-over chose a smaller, fully filled batch over the padded one.
  bool scaled_back = false;
  // Carry-over wanted to scale back but no size fits the waiting series.
  bool fallback = false;

  double padding_ratio() const {
    return model_size == 0 ? 0.0 : static_cast<double>(padding) / static_cast<double>(model_size);
  }

  friend bool operator==(const BatchPlan&, const BatchPlan&) = default;
};

/// Timeout batching: smallest size holding all r waiting series, clamped to
/// the largest size when r exceeds it. Requires r >= 1.
BatchPlan plan_timeout(std::size_t r, const BatchSizeSet& sizes);

/// Carry-over batching: the timeout plan, unless its padding fraction exceeds
/// phi, in which case the largest size not above r is filled completely and
/// the newest series stay queued. Requires r >= 1.
BatchPlan plan_carryover(std::size_t r, const BatchSizeSet& sizes, double phi);

/// Dispatches on the policy mode; nullopt when nothing is waiting.
std::optional<BatchPlan> plan_batch(std::size_t r, const PolicyConfig& policy);

struct Batch {
  std::vector<Series> slots;
  std::size_t padding = 0;

  std::size_t model_size() const { return slots.size(); }
  std::size_t real() const { return slots.size() - padding; }
};

/// Appends `padding` all-zero sentinel series of length k.
Batch pad(std::vector<Series> taken, std::size_t padding, std::size_t k);

}  // namespace dlflow
