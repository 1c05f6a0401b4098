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

#include "dlflow/live.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <unordered_set>

namespace dlflow {

void to_json(nlohmann::json& j, const LiveReport& r) {
  j = nlohmann::json{{"packets", r.packets},
                     {"table_dropped_packets", r.table_dropped_packets},
                     {"series_produced", r.series_produced},
                     {"ring_dropped", r.ring_dropped},
                     {"cache_hits", r.cache_hits},
                     {"inferred", r.inferred},
                     {"batches", r.batches},
                     {"duplicates", r.duplicates},
                     {"labels_applied", r.labels_applied},
                     {"left_in_rings", r.left_in_rings},
                     {"wall_s", r.wall_s},
                     {"conserved", r.conserved()}};
}

namespace {

using Clock = std::chrono::steady_clock;

struct LabelUpdate {
  FiveTuple key;
  Label label;
};

struct FmCounters {
  std::uint64_t packets = 0;
  std::uint64_t table_dropped = 0;
  std::uint64_t series = 0;
  std::uint64_t ring_dropped = 0;
  std::uint64_t labels_applied = 0;
};

struct AmCounters {
  std::uint64_t hits = 0;
  std::uint64_t inferred = 0;
  std::uint64_t batches = 0;
  std::uint64_t duplicates = 0;
};

void idle_pause() { std::this_thread::sleep_for(std::chrono::microseconds(50)); }

template <typename T>
void push_blocking(CRing<T>& ring, T value) {
  while (!ring.push(value)) std::this_thread::yield();
}

}  // namespace

LiveReport run_live(TraceSource& trace, const SimConfig& config, const LiveOptions& options) {
  config.validate();
  const std::size_t nf = config.deployment.flow_managers();
  const std::size_t na = config.deployment.analytics_managers();
  const std::size_t per = nf / na;
  const Clock::time_point start = Clock::now();
  auto now = [start] {
    return std::chrono::duration_cast<SimTime>(Clock::now() - start);
  };

  std::vector<std::unique_ptr<CRing<PacketRecord>>> packet_rings;
  std::vector<std::unique_ptr<CRing<Series>>> series_rings;
  std::vector<std::unique_ptr<CRing<LabelUpdate>>> label_rings;
  for (std::size_t f = 0; f < nf; ++f) {
    packet_rings.push_back(std::make_unique<CRing<PacketRecord>>(options.packet_ring_capacity));
    series_rings.push_back(std::make_unique<CRing<Series>>(config.ring_capacity));
    label_rings.push_back(std::make_unique<CRing<LabelUpdate>>(config.ring_capacity));
  }
  std::atomic<bool> dispatch_done{false};
  std::vector<std::atomic<bool>> fm_done(nf);
  std::vector<std::atomic<bool>> am_done(na);
  std::vector<FmCounters> fm_counts(nf);
  std::vector<AmCounters> am_counts(na);
  const LabelOracle oracle(config.label_count);

  std::vector<std::thread> threads;
  for (std::size_t f = 0; f < nf; ++f) {
    threads.emplace_back([&, f] {
      FlowTable table(config.table);
      FmCounters& c = fm_counts[f];
      CRing<PacketRecord>& in = *packet_rings[f];
      CRing<Series>& out = *series_rings[f];
      CRing<LabelUpdate>& labels = *label_rings[f];
      const std::size_t am = f / per;
      for (;;) {
        std::vector<PacketRecord> pkts = in.drain_up_to(256);
        for (const PacketRecord& p : pkts) {
          ++c.packets;
          FlowAction act = table.on_packet(p, p.ts);
          if (act.verdict == FlowVerdict::kDroppedNoCapacity) {
            ++c.table_dropped;
          } else if (act.verdict == FlowVerdict::kSeriesReady) {
            ++c.series;
            if (!out.push(std::move(*act.series))) ++c.ring_dropped;
          }
        }
        std::vector<LabelUpdate> updates = labels.drain_up_to(256);
        for (const LabelUpdate& u : updates) {
          auto idx = table.find_index(u.key);
          if (idx && table.set_label(*idx, u.label)) ++c.labels_applied;
        }
        if (!pkts.empty() || !updates.empty()) continue;
        if (!fm_done[f].load(std::memory_order_relaxed) &&
            dispatch_done.load(std::memory_order_acquire) && in.empty()) {
          fm_done[f].store(true, std::memory_order_release);
        }
        if (fm_done[f].load(std::memory_order_relaxed) && am_done[am].load(std::memory_order_acquire) &&
            labels.empty()) {
          break;
        }
        idle_pause();
      }
    });
  }

  for (std::size_t a = 0; a < na; ++a) {
    threads.emplace_back([&, a] {
      std::vector<CRing<Series>*> rings;
      for (std::size_t j = 0; j < per; ++j) rings.push_back(series_rings[a * per + j].get());
      AnalyticsManager am(rings, config.policy, config.cache, config.profile,
                          config.deployment.chips_per_manager(config.profile), oracle,
                          config.deployment.merge);
      AmCounters& c = am_counts[a];
      std::unordered_set<FiveTuple, FiveTupleHash> seen;
      std::vector<Submission> in_flight;
      auto send = [&](std::uint32_t ring, const Series& s, Label label) {
        if (!seen.insert(s.key).second) ++c.duplicates;
        push_blocking(*label_rings[a * per + ring], LabelUpdate{s.key, label});
      };
      const bool deadlines = config.policy.mode != PolicyMode::kNoTimeout;
      const SimTime period = config.policy.timeout;
      SimTime next_deadline{0};
      for (;;) {
        const SimTime t = now();
        for (auto it = in_flight.begin(); it != in_flight.end();) {
          if (it->completion > t) {
            ++it;
            continue;
          }
          for (std::size_t i = 0; i < it->series.size(); ++i) {
            ++c.inferred;
            send(it->ring_of[i], it->series[i], it->labels[i]);
          }
          am.complete(*it);
          it = in_flight.erase(it);
        }
        bool inputs_done = true;
        for (std::size_t j = 0; j < per; ++j) {
          inputs_done = inputs_done && fm_done[a * per + j].load(std::memory_order_acquire);
        }
        const bool due = deadlines ? t >= next_deadline : am.waiting() > 0;
        if (due) {
          CycleOutcome out = am.cycle(t);
          for (const CacheHit& h : out.hits) {
            ++c.hits;
            send(h.ring, h.series, h.label);
          }
          for (Submission& s : out.submissions) {
            ++c.batches;
            in_flight.push_back(std::move(s));
          }
          if (deadlines) {
            while (next_deadline <= t) next_deadline += period;
          }
        }
        if (inputs_done && am.waiting() == 0 && in_flight.empty()) break;
        idle_pause();
      }
      am_done[a].store(true, std::memory_order_release);
    });
  }

  const Dispatcher dispatcher(nf);
  while (auto pkt = trace.next()) {
    if (options.max_wall.count() > 0 && now() >= options.max_wall) break;
    push_blocking(*packet_rings[dispatcher.dispatch(*pkt)], std::move(*pkt));
  }
  dispatch_done.store(true, std::memory_order_release);
  for (std::thread& t : threads) t.join();

  LiveReport r;
  for (const FmCounters& c : fm_counts) {
    r.packets += c.packets;
    r.table_dropped_packets += c.table_dropped;
    r.series_produced += c.series;
    r.ring_dropped += c.ring_dropped;
    r.labels_applied += c.labels_applied;
  }
  for (const AmCounters& c : am_counts) {
    r.cache_hits += c.hits;
    r.inferred += c.inferred;
    r.batches += c.batches;
    r.duplicates += c.duplicates;
  }
  for (const auto& ring : series_rings) r.left_in_rings += ring->size();
  r.wall_s = std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

}  // namespace dlflow
