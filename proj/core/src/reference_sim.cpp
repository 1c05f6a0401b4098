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

#include <algorithm>
#include <deque>
#include <limits>
#include <map>

#include "dlflow/simulator.hpp"

// Straightforward re-statement of the pipeline: ordered maps for flow state,
// deques for rings, a recency vector for the cache and a linear scan for the
// next event. Slow, but shares no data structures with run().

namespace dlflow {
namespace {

struct RefFlow {
  bool initiator_is_src = true;
  std::uint32_t pkts = 0;
  std::vector<std::int32_t> feats;
  std::optional<Label> label;
  std::int64_t series_at = -1;
  std::int64_t label_at = -1;
  std::int64_t last_pkt = 0;
  std::uint32_t untagged = 0;
};

struct RefBatch {
  std::uint32_t am = 0;
  std::uint64_t seq = 0;
  std::int64_t completion = 0;
  std::vector<Series> series;
  std::vector<std::uint32_t> ring_of;
  std::vector<Label> labels;
};

struct RefAm {
  std::vector<std::pair<std::vector<std::int32_t>, Label>> recency;  // front = most recent
  std::vector<std::int64_t> busy_until;
  bool pending = false;
  std::size_t start = 0;
  std::optional<std::int64_t> deadline;
};

struct RefPlan {
  std::size_t b = 0;
  std::size_t take = 0;
  bool scaled_back = false;
};

std::pair<FiveTuple, bool> ref_canonical(const FiveTuple& t) {
  const bool swap = t.dst_ip < t.src_ip || (t.dst_ip == t.src_ip && t.dst_port < t.src_port);
  if (!swap) return {t, true};
  return {FiveTuple{t.dst_ip, t.src_ip, t.dst_port, t.src_port, t.proto}, false};
}

RefPlan ref_plan(std::size_t r, const SimConfig& cfg) {
  const auto sizes = cfg.policy.sizes.sizes();
  std::size_t b = sizes.back();
  for (std::size_t s : sizes) {
    if (s >= r) {
      b = s;
      break;
    }
  }
  RefPlan p{b, std::min(r, b), false};
  if (cfg.policy.mode != PolicyMode::kCarryOver) return p;
  const double padding = static_cast<double>(b - p.take);
  if (!(padding > cfg.policy.phi * static_cast<double>(b))) return p;
  std::size_t best = 0;
  for (std::size_t s : sizes) {
    if (s <= r) best = s;
  }
  if (best == 0) return p;
  return RefPlan{best, best, true};
}

class Reference {
 public:
  explicit Reference(const SimConfig& cfg) : cfg_(cfg), oracle_(cfg.label_count) {
    nf_ = cfg.deployment.flow_managers();
    na_ = cfg.deployment.analytics_managers();
    per_ = nf_ / na_;
    flows_.resize(nf_);
    rings_.resize(nf_);
    ams_.resize(na_);
    const std::uint32_t chips = cfg.deployment.chips_per_manager(cfg.profile);
    for (RefAm& a : ams_) a.busy_until.assign(chips, 0);
    rep_.chips = static_cast<std::uint32_t>(na_ * chips);
    rep_.window_us = cfg.window.count();
    rep_.detail = cfg.detail;
  }

  MetricsReport run(TraceSource& trace) {
    std::vector<PacketRecord> pkts = collect(trace);
    const std::int64_t period = cfg_.policy.timeout.count();
    const bool deadlines = cfg_.policy.mode != PolicyMode::kNoTimeout;
    if (deadlines && !pkts.empty()) {
      for (RefAm& a : ams_) a.deadline = pkts.front().ts.count() / period * period;
    }
    std::size_t next = 0;
    for (;;) {
      const std::int64_t kNever = std::numeric_limits<std::int64_t>::max();
      std::int64_t tp = next < pkts.size() ? pkts[next].ts.count() : kNever;
      std::size_t bi = batches_.size();
      for (std::size_t i = 0; i < batches_.size(); ++i) {
        if (bi == batches_.size() || batches_[i].completion < batches_[bi].completion ||
            (batches_[i].completion == batches_[bi].completion && batches_[i].seq < batches_[bi].seq)) {
          bi = i;
        }
      }
      std::int64_t tb = bi < batches_.size() ? batches_[bi].completion : kNever;
      std::size_t di = na_;
      for (std::size_t a = 0; a < na_; ++a) {
        if (ams_[a].deadline && (di == na_ || *ams_[a].deadline < *ams_[di].deadline)) di = a;
      }
      std::int64_t td = di < na_ ? *ams_[di].deadline : kNever;
      if (tp == kNever && tb == kNever && td == kNever) break;
      if (tp <= tb && tp <= td) {
        packet(pkts[next]);
        ++next;
        exhausted_ = next == pkts.size();
      } else if (tb <= td) {
        RefBatch b = std::move(batches_[bi]);
        batches_.erase(batches_.begin() + static_cast<std::ptrdiff_t>(bi));
        complete(b);
      } else {
        const std::int64_t t = td;
        cycle(di, t);
        std::size_t waiting = 0;
        for (std::size_t j = 0; j < per_; ++j) waiting += rings_[di * per_ + j].size();
        if (exhausted_ && waiting == 0) {
          ams_[di].deadline.reset();
        } else {
          ams_[di].deadline = t + period;
        }
      }
    }
    for (std::size_t f = 0; f < nf_; ++f) {
      for (const auto& [key, fl] : flows_[f]) {
        if (fl.series_at >= 0 && (!fl.label || fl.label_at > fl.last_pkt)) ++rep_.post_mortem;
        if (fl.pkts >= kLongLivedPackets) {
          ++rep_.long_lived_series_flows;
          rep_.untagged_long_lived_packets += fl.untagged;
          rep_.untagged_per_long_lived_flow.push_back(static_cast<double>(fl.untagged));
        }
      }
    }
    rep_.wall_us = std::max(last_pkt_, last_done_);
    return std::move(rep_);
  }

 private:
  void packet(const PacketRecord& pkt) {
    const std::int64_t now = pkt.ts.count();
    last_pkt_ = std::max(last_pkt_, now);
    ++rep_.packets;
    const std::size_t f = symmetric_rss_hash(pkt.flow) % nf_;
    auto [key, fwd] = ref_canonical(pkt.flow);
    auto it = flows_[f].find(key);
    const std::size_t k = cfg_.table.series_length;
    bool ready = false;
    RefFlow* fl = nullptr;
    if (it == flows_[f].end()) {
      ++rep_.flows;
      fl = &flows_[f][key];
      fl->initiator_is_src = fwd;
      fl->pkts = 1;
      fl->feats.push_back(static_cast<std::int32_t>(pkt.length));
      ready = k == 1;
      ++fl->untagged;
    } else {
      fl = &it->second;
      ++fl->pkts;
      if (fl->label) {
        fl->last_pkt = now;
        return;
      }
      ++fl->untagged;
      if (fl->feats.size() < k) {
        const bool from_initiator = fwd == fl->initiator_is_src;
        const std::int32_t len = pkt.length;
        fl->feats.push_back(from_initiator ? len : -len);
        ready = fl->feats.size() == k;
      }
    }
    fl->last_pkt = now;
    if (!ready) return;
    fl->series_at = now;
    ++rep_.series;
    ++rep_.window_at(now).series;
    if (rings_[f].size() >= cfg_.ring_capacity) {
      ++rep_.ring_dropped;
      return;
    }
    Series s;
    s.key = key;
    s.features = fl->feats;
    s.completed_at = pkt.ts;
    s.truth = pkt.label;
    rings_[f].push_back(std::move(s));
    if (cfg_.policy.mode == PolicyMode::kNoTimeout) cycle(f / per_, now);
  }

  std::vector<std::int32_t> cache_key(const Series& s) const {
    const std::size_t d = cfg_.cache.delta;
    switch (cfg_.cache.key_mode) {
      case KeyMode::kPrefix: return {s.features.begin(), s.features.begin() + static_cast<std::ptrdiff_t>(d)};
      case KeyMode::kPostfix: return {s.features.end() - static_cast<std::ptrdiff_t>(d), s.features.end()};
      case KeyMode::kExact: break;
    }
    return s.features;
  }

  std::optional<Label> cache_lookup(RefAm& a, const std::vector<std::int32_t>& key) {
    ++rep_.cache_lookups;
    for (std::size_t i = 0; i < a.recency.size(); ++i) {
      if (a.recency[i].first == key) {
        auto entry = a.recency[i];
        a.recency.erase(a.recency.begin() + static_cast<std::ptrdiff_t>(i));
        a.recency.insert(a.recency.begin(), entry);
        ++rep_.cache_hits;
        return entry.second;
      }
    }
    return std::nullopt;
  }

  void cache_insert(RefAm& a, std::vector<std::int32_t> key, Label label) {
    for (std::size_t i = 0; i < a.recency.size(); ++i) {
      if (a.recency[i].first == key) {
        a.recency.erase(a.recency.begin() + static_cast<std::ptrdiff_t>(i));
        break;
      }
    }
    a.recency.insert(a.recency.begin(), {std::move(key), label});
    if (a.recency.size() > cfg_.cache.capacity) a.recency.pop_back();
  }

  void cycle(std::size_t am, std::int64_t now) {
    RefAm& a = ams_[am];
    auto idle = [&]() -> std::optional<std::size_t> {
      for (std::size_t c = 0; c < a.busy_until.size(); ++c) {
        if (a.busy_until[c] <= now) return c;
      }
      return std::nullopt;
    };
    if (!idle()) {
      a.pending = true;
      return;
    }
    a.pending = false;
    if (cfg_.cache.capacity > 0) {
      for (std::size_t j = 0; j < per_; ++j) {
        std::deque<Series>& ring = rings_[am * per_ + j];
        std::deque<Series> keep;
        std::vector<std::pair<Series, Label>> hits;
        for (Series& s : ring) {
          if (auto label = cache_lookup(a, cache_key(s))) {
            hits.emplace_back(std::move(s), *label);
          } else {
            keep.push_back(std::move(s));
          }
        }
        ring = std::move(keep);
        for (auto& [s, label] : hits) {
          if (oracle_(s) == label) {
            ++rep_.good_hits;
          } else {
            ++rep_.error_hits;
          }
          ++rep_.window_at(now).cache_hits;
          deliver(am * per_ + j, s, label, now, LabelSource::kCache);
        }
      }
    }
    for (;;) {
      std::size_t r = 0;
      for (std::size_t j = 0; j < per_; ++j) r += rings_[am * per_ + j].size();
      if (r == 0) break;
      auto chip = idle();
      if (!chip) {
        a.pending = true;
        break;
      }
      const RefPlan plan = ref_plan(r, cfg_);
      RefBatch b;
      b.am = static_cast<std::uint32_t>(am);
      b.seq = batch_seq_++;
      if (cfg_.deployment.merge == MergeOrder::kSequential) {
        for (std::size_t j = 0; j < per_ && b.series.size() < plan.take; ++j) {
          std::deque<Series>& ring = rings_[am * per_ + j];
          while (!ring.empty() && b.series.size() < plan.take) {
            b.series.push_back(std::move(ring.front()));
            b.ring_of.push_back(static_cast<std::uint32_t>(j));
            ring.pop_front();
          }
        }
      } else {
        std::size_t j = a.start % per_;
        while (b.series.size() < plan.take) {
          std::deque<Series>& ring = rings_[am * per_ + j];
          if (!ring.empty()) {
            b.series.push_back(std::move(ring.front()));
            b.ring_of.push_back(static_cast<std::uint32_t>(j));
            ring.pop_front();
          }
          j = (j + 1) % per_;
        }
      }
      for (const Series& s : b.series) b.labels.push_back(oracle_(s));
      const std::int64_t lat = cfg_.profile.latency(plan.b).count();
      b.completion = now + lat;
      a.busy_until[*chip] = b.completion;

      const std::size_t padding = plan.b - plan.take;
      const std::int64_t real_us = lat * static_cast<std::int64_t>(plan.take) / static_cast<std::int64_t>(plan.b);
      ++rep_.batches;
      rep_.model_slots += plan.b;
      rep_.padding_slots += padding;
      rep_.padding_ratios.push_back(static_cast<double>(padding) / static_cast<double>(plan.b));
      rep_.busy_real_us += real_us;
      rep_.busy_padding_us += lat - real_us;
      WindowMetrics& w = rep_.window_at(now);
      ++w.batches;
      w.batch_size_sum += plan.b;
      w.padding_slots += padding;
      rep_.add_busy(now, b.completion, plan.take, plan.b);
      if (rep_.detail) {
        rep_.batch_log.push_back(BatchRecord{static_cast<std::uint32_t>(am), now,
                                             static_cast<std::uint32_t>(plan.b),
                                             static_cast<std::uint32_t>(plan.take),
                                             static_cast<std::uint32_t>(padding)});
      }
      batches_.push_back(std::move(b));
      if (plan.scaled_back) break;
    }
    a.start = (a.start + 1) % per_;
  }

  void complete(RefBatch& b) {
    last_done_ = std::max(last_done_, b.completion);
    for (std::size_t i = 0; i < b.series.size(); ++i) {
      ++rep_.inferred;
      deliver(b.am * per_ + b.ring_of[i], b.series[i], b.labels[i], b.completion, LabelSource::kInference);
    }
    RefAm& a = ams_[b.am];
    if (cfg_.cache.capacity > 0) {
      for (std::size_t i = 0; i < b.series.size(); ++i) cache_insert(a, cache_key(b.series[i]), b.labels[i]);
    }
    if (a.pending) cycle(b.am, b.completion);
  }

  void deliver(std::size_t f, const Series& s, Label label, std::int64_t now, LabelSource source) {
    auto it = flows_[f].find(s.key);
    if (it == flows_[f].end() || it->second.label) return;
    RefFlow& fl = it->second;
    fl.label = label;
    fl.label_at = now;
    const double delay = static_cast<double>(now - fl.series_at) / 1000.0;
    rep_.delay_ms.push_back(delay);
    WindowMetrics& w = rep_.window_at(now);
    ++w.labels;
    w.delay_sum_ms += delay;
    if (rep_.detail) {
      rep_.outcomes.push_back(
          FlowOutcome{s.key, fl.series_at, now, static_cast<std::int64_t>(label.class_id()), source});
    }
  }

  const SimConfig& cfg_;
  LabelOracle oracle_;
  std::size_t nf_ = 1;
  std::size_t na_ = 1;
  std::size_t per_ = 1;
  std::vector<std::map<FiveTuple, RefFlow>> flows_;
  std::vector<std::deque<Series>> rings_;
  std::vector<RefAm> ams_;
  std::vector<RefBatch> batches_;
  std::uint64_t batch_seq_ = 0;
  bool exhausted_ = false;
  std::int64_t last_pkt_ = 0;
  std::int64_t last_done_ = 0;
  MetricsReport rep_;
};

}  // namespace

MetricsReport reference_run(TraceSource& trace, const SimConfig& config) {
  config.validate();
  Reference ref(config);
  return ref.run(trace);
}

}  // namespace dlflow
