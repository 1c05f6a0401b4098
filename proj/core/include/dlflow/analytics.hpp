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
#include <vector>

#include "dlflow/accelerator.hpp"
#include "dlflow/batching.hpp"
#include "dlflow/cring.hpp"
#include "dlflow/model.hpp"
#include "dlflow/prefix_cache.hpp"

namespace dlflow {

/// How an analytics manager fed by several rings takes series from them.
enum class MergeOrder { kRoundRobin, kSequential };

const char* to_string(MergeOrder m);
std::optional<MergeOrder> parse_merge_order(std::string_view text);

struct CacheHit {
  Series series;
  Label label;
  std::uint32_t ring = 0;
  HitGrade grade = HitGrade::kGood;
};

struct Submission {
  std::uint32_t chip = 0;
  BatchPlan plan;
  std::vector<Series> series;         // real slots, in batch order
  std::vector<std::uint32_t> ring_of;  // source ring of each real slot
  std::vector<Label> labels;          // oracle output, aligned with series
  SimTime submitted{0};
  SimTime completion{0};
  SimTime busy_real{0};
  SimTime busy_padding{0};
};

struct CycleOutcome {
  std::vector<CacheHit> hits;
  std::vector<Submission> submissions;
  // No chip was idle; nothing was touched.
  bool deferred = false;
  // Series are still waiting only because every chip is busy.
  bool waiting_for_chip = false;
};

/// Consumer side of one or more series rings: cache filter, batch planning
/// and submission onto the manager's chips.
class AnalyticsManager {
 public:
  AnalyticsManager(std::vector<CRing<Series>*> rings, PolicyConfig policy, CacheConfig cache,
                   const AcceleratorProfile& profile, std::uint32_t chips, const LabelOracle& oracle,
                   MergeOrder merge = MergeOrder::kRoundRobin);

  /// One planning step at `now`: filters the rings through the cache, then
  /// plans and submits batches while a chip is idle and series wait. Stops
  /// after a scaled-back plan so the carried series wait for the next step.
  CycleOutcome cycle(SimTime now);

  /// Feeds a finished batch back into the cache.
  void complete(const Submission& s);

  bool has_idle_chip(SimTime now) const;
  std::size_t waiting() const;
  std::size_t ring_count() const { return rings_.size(); }
  std::uint32_t chip_count() const { return static_cast<std::uint32_t>(chips_.size()); }
  const PrefixCache& cache() const { return cache_; }
  PrefixCache& cache() { return cache_; }
  const PolicyConfig& policy() const { return policy_; }

 private:
  Submission take_and_submit(std::uint32_t chip, const BatchPlan& plan, SimTime now);

  std::vector<CRing<Series>*> rings_;
  PolicyConfig policy_;
  PrefixCache cache_;
  const AcceleratorProfile* profile_;
  const LabelOracle* oracle_;
  std::vector<AcceleratorChip> chips_;
  MergeOrder merge_;
  std::size_t start_ring_ = 0;
};

}  // namespace dlflow
