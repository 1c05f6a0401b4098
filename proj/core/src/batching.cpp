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

#include "dlflow/batching.hpp"

#include <algorithm>
#include <stdexcept>

namespace dlflow {

BatchSizeSet::BatchSizeSet() : sizes_{8, 16, 32, 64, 128, 256, 512, 1024} {}

BatchSizeSet::BatchSizeSet(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.empty()) throw std::invalid_argument("batch size set is empty");
  if (sizes_.front() == 0) throw std::invalid_argument("batch sizes must be positive");
  for (std::size_t i = 1; i < sizes_.size(); ++i) {
    if (sizes_[i] <= sizes_[i - 1]) {
      throw std::invalid_argument("batch sizes must be strictly increasing");
    }
  }
}

bool BatchSizeSet::contains(std::size_t b) const {
  return std::binary_search(sizes_.begin(), sizes_.end(), b);
}

std::optional<std::size_t> BatchSizeSet::smallest_at_least(std::size_t r) const {
  auto it = std::lower_bound(sizes_.begin(), sizes_.end(), r);
  if (it == sizes_.end()) return std::nullopt;
  return *it;
}

std::optional<std::size_t> BatchSizeSet::largest_at_most(std::size_t r) const {
  auto it = std::upper_bound(sizes_.begin(), sizes_.end(), r);
  if (it == sizes_.begin()) return std::nullopt;
  return *std::prev(it);
}

const char* to_string(PolicyMode mode) {
  switch (mode) {
    case PolicyMode::kTimeout: return "timeout";
    case PolicyMode::kCarryOver: return "carryover";
    case PolicyMode::kNoTimeout: return "notimeout";
  }
  return "unknown";
}

std::optional<PolicyMode> parse_policy_mode(std::string_view text) {
  if (text == "timeout") return PolicyMode::kTimeout;
  if (text == "carryover" || text == "carry-over") return PolicyMode::kCarryOver;
  if (text == "notimeout" || text == "no-timeout") return PolicyMode::kNoTimeout;
  return std::nullopt;
}

void PolicyConfig::validate() const {
  if (!(phi >= 0.0 && phi <= 0.5)) throw std::invalid_argument("phi must lie in [0, 0.5]");
  if (mode != PolicyMode::kNoTimeout && timeout <= SimTime::zero()) {
    throw std::invalid_argument("timeout must be positive for deadline-driven batching");
  }
}

BatchPlan plan_timeout(std::size_t r, const BatchSizeSet& sizes) {
  if (r == 0) throw std::invalid_argument("cannot plan a batch for an empty ring");
  BatchPlan plan;
  plan.model_size = sizes.smallest_at_least(r).value_or(sizes.max());
  plan.take = std::min(r, plan.model_size);
  plan.padding = plan.model_size - plan.take;
  plan.carried_over = r - plan.take;
  return plan;
}

BatchPlan plan_carryover(std::size_t r, const BatchSizeSet& sizes, double phi) {
  BatchPlan plan = plan_timeout(r, sizes);
  if (plan.padding_ratio() <= phi) return plan;
  if (auto smaller = sizes.largest_at_most(r)) {
    plan.model_size = *smaller;
    plan.take = *smaller;
    plan.padding = 0;
    plan.carried_over = r - *smaller;
    plan.scaled_back = true;
  } else {
    // Fewer series than the smallest size: ship the padded batch anyway so
    // the deadline still guarantees progress.
    plan.fallback = true;
  }
  return plan;
}

std::optional<BatchPlan> plan_batch(std::size_t r, const PolicyConfig& policy) {
  if (r == 0) return std::nullopt;
  if (policy.mode == PolicyMode::kCarryOver) return plan_carryover(r, policy.sizes, policy.phi);
  return plan_timeout(r, policy.sizes);
}

Batch pad(std::vector<Series> taken, std::size_t padding, std::size_t k) {
  Batch batch;
  batch.slots = std::move(taken);
  batch.padding = padding;
  batch.slots.reserve(batch.slots.size() + padding);
  for (std::size_t i = 0; i < padding; ++i) batch.slots.push_back(Series::sentinel(k));
  return batch;
}

}  // namespace dlflow
