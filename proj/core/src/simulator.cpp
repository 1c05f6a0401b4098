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

#include "dlflow/simulator.hpp"

#include <bit>
#include <memory>
#include <queue>
#include <unordered_map>

namespace dlflow {

const char* to_string(Topology t) {
  switch (t) {
    case Topology::kOneOneOne: return "1:1:1";
    case Topology::kTwoOneOne: return "2:1:1";
    case Topology::kOneOneTwo: return "1:1:2";
  }
  return "unknown";
}

std::optional<Topology> parse_topology(std::string_view text) {
  if (text == "1:1:1" || text == "OneOneOne") return Topology::kOneOneOne;
  if (text == "2:1:1" || text == "TwoOneOne") return Topology::kTwoOneOne;
  if (text == "1:1:2" || text == "OneOneTwo") return Topology::kOneOneTwo;
  return std::nullopt;
}

void SimConfig::validate() const {
  if (deployment.pipelines == 0) throw ConfigError("at least one pipeline is required");
  try {
    policy.validate();
    profile.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(policy.sizes == profile.sizes)) {
    throw ConfigError("policy batch sizes differ from the sizes accepted by profile '" +
                      profile.name + "'");
  }
  if (ring_capacity == 0 || !std::has_single_bit(ring_capacity)) {
    throw ConfigError("ring capacity must be a power of two");
  }
  if (label_count == 0) throw ConfigError("label count must be positive");
  if (window <= SimTime::zero()) throw ConfigError("window must be positive");
  const std::size_t k = table.series_length;
  if (k == 0 || k > 255) throw ConfigError("series length must be within 1..255");
  if (cache.capacity > 0 && cache.key_mode != KeyMode::kExact &&
      (cache.delta == 0 || cache.delta >= k)) {
    throw ConfigError("cache delta must satisfy 1 <= delta < series length");
  }
  if (table.buckets == 0 || !std::has_single_bit(table.buckets) || table.buckets > (1U << 24)) {
    throw ConfigError("flow table buckets must be a power of two up to 2^24");
  }
  if (table.records == 0) throw ConfigError("flow table needs at least one record");
  if (table.stale_timeout.count() < 1 || table.stale_timeout.count() > 32767) {
    throw ConfigError("stale timeout must be within 1..32767 s");
  }
}

namespace {

// Per-flow bookkeeping kept beside the flow table, indexed like its records.
struct FlowSide {
  std::int64_t series_at = -1;
  std::int64_t label_at = -1;
  std::int64_t last_pkt = 0;
  std::uint32_t untagged = 0;
  bool labeled = false;
};

enum class EventKind : std::uint8_t { kInferenceComplete = 1, kPlanningDeadline = 2 };

struct Event {
  std::int64_t t = 0;
  EventKind kind = EventKind::kPlanningDeadline;
  std::uint64_t seq = 0;
  std::uint32_t manager = 0;
  std::uint64_t batch = 0;
};

struct EventLater {
  bool operator()(const Event& a, const Event& b) const {
    if (a.t != b.t) return a.t > b.t;
    if (a.kind != b.kind) return a.kind > b.kind;
    return a.seq > b.seq;
  }
};

struct InFlight {
  std::uint32_t manager = 0;
  Submission sub;
};

class Simulation {
 public:
  explicit Simulation(const SimConfig& cfg)
      : cfg_(cfg),
        oracle_(cfg.label_count),
        fms_per_am_(cfg.deployment.flow_managers() / cfg.deployment.analytics_managers()),
        dispatcher_(cfg.deployment.flow_managers()) {
    const std::size_t f = cfg.deployment.flow_managers();
    const std::size_t a = cfg.deployment.analytics_managers();
    for (std::size_t i = 0; i < f; ++i) {
      tables_.push_back(std::make_unique<FlowTable>(cfg.table));
      rings_.push_back(std::make_unique<CRing<Series>>(cfg.ring_capacity));
      sides_.emplace_back(cfg.table.records);
      const std::size_t fm = i;
      tables_.back()->set_eviction_hook(
          [this, fm](std::uint32_t index, const FlowRecord& rec) { finalize(fm, index, rec); });
    }
    const std::uint32_t chips = cfg.deployment.chips_per_manager(cfg.profile);
    for (std::size_t m = 0; m < a; ++m) {
      std::vector<CRing<Series>*> rings;
      for (std::size_t j = 0; j < fms_per_am_; ++j) rings.push_back(rings_[m * fms_per_am_ + j].get());
      ams_.push_back(std::make_unique<AnalyticsManager>(std::move(rings), cfg.policy, cfg.cache,
                                                        cfg.profile, chips, oracle_,
                                                        cfg.deployment.merge));
    }
    pending_.assign(a, false);
    report_.chips = static_cast<std::uint32_t>(a * chips);
    report_.window_us = cfg.window.count();
    report_.detail = cfg.detail;
  }

  MetricsReport run(TraceSource& trace) {
    std::optional<PacketRecord> pkt = trace.next();
    trace_done_ = !pkt;
    const bool deadlines = cfg_.policy.mode != PolicyMode::kNoTimeout;
    if (deadlines && pkt) {
      const std::int64_t period = cfg_.policy.timeout.count();
      const std::int64_t first = pkt->ts.count() / period * period;
      for (std::uint32_t m = 0; m < ams_.size(); ++m) push_event(first, EventKind::kPlanningDeadline, m, 0);
    }
    while (pkt || !events_.empty()) {
      if (pkt && (events_.empty() || pkt->ts.count() <= events_.top().t)) {
        on_packet(*pkt);
        pkt = trace.next();
        if (!pkt) trace_done_ = true;
        continue;
      }
      const Event ev = events_.top();
      events_.pop();
      if (ev.kind == EventKind::kInferenceComplete) {
        on_complete(ev);
      } else {
        on_deadline(ev);
      }
    }
    return finish();
  }

 private:
  void push_event(std::int64_t t, EventKind kind, std::uint32_t manager, std::uint64_t batch) {
    events_.push(Event{t, kind, next_seq_++, manager, batch});
  }

  void on_packet(const PacketRecord& pkt) {
    const std::int64_t now = pkt.ts.count();
    last_packet_ = std::max(last_packet_, now);
    ++report_.packets;
    const std::size_t fm = dispatcher_.dispatch(pkt);
    FlowAction act = tables_[fm]->on_packet(pkt, pkt.ts);
    if (act.verdict == FlowVerdict::kDroppedNoCapacity) {
      ++report_.table_dropped_packets;
      return;
    }
    FlowSide& side = sides_[fm][act.index];
    if (act.new_flow) {
      side = FlowSide{};
      ++report_.flows;
    }
    side.last_pkt = now;
    if (act.verdict != FlowVerdict::kTagAndForward) ++side.untagged;
    if (act.verdict != FlowVerdict::kSeriesReady) return;

    side.series_at = now;
    ++report_.series;
    ++report_.window_at(now).series;
    if (!rings_[fm]->push(std::move(*act.series))) {
      ++report_.ring_dropped;
      return;
    }
    if (cfg_.policy.mode == PolicyMode::kNoTimeout) {
      run_cycle(static_cast<std::uint32_t>(fm / fms_per_am_), now);
    }
  }

  void on_deadline(const Event& ev) {
    run_cycle(ev.manager, ev.t);
    if (!(trace_done_ && ams_[ev.manager]->waiting() == 0)) {
      push_event(ev.t + cfg_.policy.timeout.count(), EventKind::kPlanningDeadline, ev.manager, 0);
    }
  }

  void on_complete(const Event& ev) {
    auto it = in_flight_.find(ev.batch);
    InFlight done = std::move(it->second);
    in_flight_.erase(it);
    last_completion_ = std::max(last_completion_, ev.t);
    const Submission& sub = done.sub;
    for (std::size_t i = 0; i < sub.series.size(); ++i) {
      ++report_.inferred;
      deliver(done.manager, sub.ring_of[i], sub.series[i], sub.labels[i], ev.t, LabelSource::kInference);
    }
    ams_[done.manager]->complete(sub);
    if (pending_[done.manager]) run_cycle(done.manager, ev.t);
  }

  void run_cycle(std::uint32_t m, std::int64_t now) {
    CycleOutcome out = ams_[m]->cycle(SimTime(now));
    if (out.deferred) {
      pending_[m] = true;
      return;
    }
    pending_[m] = out.waiting_for_chip;
    for (const CacheHit& h : out.hits) {
      ++report_.window_at(now).cache_hits;
      deliver(m, h.ring, h.series, h.label, now, LabelSource::kCache);
    }
    for (Submission& sub : out.submissions) {
      const BatchPlan& p = sub.plan;
      ++report_.batches;
      report_.model_slots += p.model_size;
      report_.padding_slots += p.padding;
      report_.padding_ratios.push_back(p.padding_ratio());
      report_.busy_real_us += sub.busy_real.count();
      report_.busy_padding_us += sub.busy_padding.count();
      WindowMetrics& w = report_.window_at(now);
      ++w.batches;
      w.batch_size_sum += p.model_size;
      w.padding_slots += p.padding;
      report_.add_busy(now, sub.completion.count(), p.take, p.model_size);
      if (report_.detail) {
        report_.batch_log.push_back(BatchRecord{m, now, static_cast<std::uint32_t>(p.model_size),
                                                static_cast<std::uint32_t>(p.take),
                                                static_cast<std::uint32_t>(p.padding)});
      }
      const std::uint64_t id = next_batch_++;
      const std::int64_t t = sub.completion.count();
      in_flight_.emplace(id, InFlight{m, std::move(sub)});
      push_event(t, EventKind::kInferenceComplete, m, id);
    }
  }

  void deliver(std::uint32_t m, std::uint32_t ring, const Series& s, Label label, std::int64_t now,
               LabelSource source) {
    const std::size_t fm = m * fms_per_am_ + ring;
    FlowTable& table = *tables_[fm];
    auto idx = table.find_index(s.key);
    if (!idx || !table.set_label(*idx, label)) return;
    FlowSide& side = sides_[fm][*idx];
    side.labeled = true;
    side.label_at = now;
    const double delay_ms = static_cast<double>(now - side.series_at) / 1000.0;
    report_.delay_ms.push_back(delay_ms);
    WindowMetrics& w = report_.window_at(now);
    ++w.labels;
    w.delay_sum_ms += delay_ms;
    if (report_.detail) {
      report_.outcomes.push_back(
          FlowOutcome{s.key, side.series_at, now, static_cast<std::int64_t>(label.class_id()), source});
    }
  }

  void finalize(std::size_t fm, std::uint32_t index, const FlowRecord& rec) {
    const FlowSide& side = sides_[fm][index];
    if (side.series_at >= 0 && (!side.labeled || side.label_at > side.last_pkt)) ++report_.post_mortem;
    if (is_long_lived(rec.pkt_count)) {
      ++report_.long_lived_series_flows;
      report_.untagged_long_lived_packets += side.untagged;
      report_.untagged_per_long_lived_flow.push_back(static_cast<double>(side.untagged));
    }
  }

  MetricsReport finish() {
    for (std::size_t fm = 0; fm < tables_.size(); ++fm) {
      tables_[fm]->for_each_occupied(
          [&](std::uint32_t index, const FlowRecord& rec) { finalize(fm, index, rec); });
    }
    for (const auto& am : ams_) {
      const CacheCounters& c = am->cache().counters();
      report_.cache_lookups += c.lookups;
      report_.cache_hits += c.hits;
      report_.good_hits += c.good_hits;
      report_.error_hits += c.error_hits;
    }
    report_.wall_us = std::max(last_packet_, last_completion_);
    return std::move(report_);
  }

  const SimConfig& cfg_;
  LabelOracle oracle_;
  std::size_t fms_per_am_;
  Dispatcher dispatcher_;
  std::vector<std::unique_ptr<FlowTable>> tables_;
  std::vector<std::unique_ptr<CRing<Series>>> rings_;
  std::vector<std::vector<FlowSide>> sides_;
  std::vector<std::unique_ptr<AnalyticsManager>> ams_;
  std::vector<bool> pending_;

  std::priority_queue<Event, std::vector<Event>, EventLater> events_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t next_batch_ = 0;
  std::unordered_map<std::uint64_t, InFlight> in_flight_;

  bool trace_done_ = false;
  std::int64_t last_packet_ = 0;
  std::int64_t last_completion_ = 0;
  MetricsReport report_;
};

}  // namespace

MetricsReport run(TraceSource& trace, const SimConfig& config) {
  config.validate();
  Simulation sim(config);
  return sim.run(trace);
}

}  // namespace dlflow
