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

#include "dlflow/analytics.hpp"

#include <stdexcept>

namespace dlflow {

const char* to_string(MergeOrder m) {
  return m == MergeOrder::kRoundRobin ? "round_robin" : "sequential";
}

std::optional<MergeOrder> parse_merge_order(std::string_view text) {
  if (text == "round_robin" || text == "round-robin") return MergeOrder::kRoundRobin;
  if (text == "sequential") return MergeOrder::kSequential;
  return std::nullopt;
}

AnalyticsManager::AnalyticsManager(std::vector<CRing<Series>*> rings, PolicyConfig policy,
                                   CacheConfig cache, const AcceleratorProfile& profile,
                                   std::uint32_t chips, const LabelOracle& oracle, MergeOrder merge)
    : rings_(std::move(rings)),
      policy_(std::move(policy)),
      cache_(cache),
      profile_(&profile),
      oracle_(&oracle),
      merge_(merge) {
  if (rings_.empty()) throw std::invalid_argument("analytics manager needs at least one ring");
  if (chips == 0) throw std::invalid_argument("analytics manager needs at least one chip");
  chips_.reserve(chips);
  for (std::uint32_t c = 0; c < chips; ++c) chips_.emplace_back(*profile_, *oracle_);
}

bool AnalyticsManager::has_idle_chip(SimTime now) const {
  for (const AcceleratorChip& c : chips_) {
    if (c.idle_at(now)) return true;
  }
  return false;
}

std::size_t AnalyticsManager::waiting() const {
  std::size_t r = 0;
  for (const CRing<Series>* ring : rings_) r += ring->size();
  return r;
}

CycleOutcome AnalyticsManager::cycle(SimTime now) {
  CycleOutcome out;
  if (!has_idle_chip(now)) {
    out.deferred = true;
    return out;
  }
  if (cache_.enabled()) {
    for (std::uint32_t i = 0; i < rings_.size(); ++i) {
      for (auto& [series, label] : cache_.filter_ring(*rings_[i])) {
        const HitGrade grade = grade_hit(series, label, *oracle_);
        cache_.record_grade(grade);
        out.hits.push_back(CacheHit{std::move(series), label, i, grade});
      }
    }
  }
  for (;;) {
    const std::size_t r = waiting();
    if (r == 0) break;
    std::optional<std::uint32_t> idle;
    for (std::uint32_t c = 0; c < chips_.size(); ++c) {
      if (chips_[c].idle_at(now)) {
        idle = c;
        break;
      }
    }
    if (!idle) {
      out.waiting_for_chip = true;
      break;
    }
    auto plan = plan_batch(r, policy_);
    if (!plan) break;
    out.submissions.push_back(take_and_submit(*idle, *plan, now));
    if (plan->scaled_back) break;
  }
  start_ring_ = (start_ring_ + 1) % rings_.size();
  return out;
}

Submission AnalyticsManager::take_and_submit(std::uint32_t chip, const BatchPlan& plan, SimTime now) {
  const std::size_t n = rings_.size();
  std::vector<std::size_t> avail(n);
  for (std::size_t i = 0; i < n; ++i) avail[i] = rings_[i]->size();

  Submission sub;
  sub.chip = chip;
  sub.plan = plan;
  sub.ring_of.reserve(plan.take);
  if (merge_ == MergeOrder::kSequential) {
    for (std::size_t i = 0; i < n && sub.ring_of.size() < plan.take; ++i) {
      const std::size_t c = std::min(avail[i], plan.take - sub.ring_of.size());
      sub.ring_of.insert(sub.ring_of.end(), c, static_cast<std::uint32_t>(i));
    }
  } else {
    std::size_t i = start_ring_ % n;
    while (sub.ring_of.size() < plan.take) {
      if (avail[i] > 0) {
        --avail[i];
        sub.ring_of.push_back(static_cast<std::uint32_t>(i));
      }
      i = (i + 1) % n;
    }
  }

  std::vector<std::size_t> count(n, 0);
  for (std::uint32_t i : sub.ring_of) ++count[i];
  std::vector<std::vector<Series>> drained(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (count[i] > 0) drained[i] = rings_[i]->drain_up_to(count[i]);
  }
  std::vector<std::size_t> cursor(n, 0);
  sub.series.reserve(plan.take);
  for (std::uint32_t i : sub.ring_of) sub.series.push_back(std::move(drained[i][cursor[i]++]));

  InferenceResult res = chips_[chip].infer_padded(sub.series, plan.model_size, now);
  sub.labels = std::move(res.labels);
  sub.submitted = now;
  sub.completion = res.completion;
  sub.busy_real = res.busy_real;
  sub.busy_padding = res.busy_padding;
  return sub;
}

void AnalyticsManager::complete(const Submission& s) { cache_.insert_results(s.series, s.labels); }

}  // namespace dlflow
