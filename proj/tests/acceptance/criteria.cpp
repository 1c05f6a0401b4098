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

#include "criteria.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "dlflow/batching.hpp"
#include "dlflow/flow_table.hpp"
#include "dlflow/live.hpp"
#include "dlflow/metrics.hpp"
#include "dlflow/prefix_cache.hpp"
#include "dlflow/prefixlab.hpp"
#include "dlflow/scenario.hpp"
#include "dlflow/simulator.hpp"
#include "dlflow/trace_io.hpp"
#include "dlflow/traffic.hpp"
#include "oracles.hpp"

namespace dlflow::acceptance {
namespace {

using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;

// Flash-crowd workload: Zipf popularity over catalog shapes and an LRU sized
// so the measured hit ratio lands near 0.3.
constexpr double kFlashSkew = 0.55;
constexpr std::size_t kFlashCacheCapacity = 1500;
constexpr double kHitLow = 0.25;
constexpr double kHitHigh = 0.35;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

class Detail {
 public:
  template <typename T>
  Detail& kv(const std::string& k, const T& v) {
    if (!first_) out_ << ' ';
    first_ = false;
    out_ << k << '=' << v;
    return *this;
  }
  Detail& text(const std::string& s) {
    if (!first_) out_ << ' ';
    first_ = false;
    out_ << s;
    return *this;
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
  bool first_ = true;
};

std::string fixed(double v, int digits = 3) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

double median(std::vector<double> v) { return summarize(std::move(v)).p50; }

FlowTableConfig scenario_table() {
  FlowTableConfig t;
  t.records = 1U << 20;
  t.buckets = 1U << 16;
  t.stale_timeout = 5s;
  return t;
}

SimConfig base_sim(PolicyMode mode, SimTime timeout, double phi = 0.2) {
  SimConfig c;
  c.profile = *builtin_profile("tpu1");
  c.policy.mode = mode;
  c.policy.timeout = timeout;
  c.policy.phi = phi;
  c.policy.sizes = c.profile.sizes;
  c.table = scenario_table();
  c.ring_capacity = 1U << 15;
  return c;
}

// Every flow carries 10 to 20 packets, so flow rate equals series rate.
std::shared_ptr<const Catalog> series_catalog() {
  static const auto catalog = [] {
    CatalogConfig c;
    c.short_fraction = 1.0;
    c.short_min_packets = 10;
    c.short_max_packets = 20;
    c.label_count = kDefaultLabelCount;
    return std::make_shared<const Catalog>(make_synthetic_catalog(c, 11));
  }();
  return catalog;
}

// Default shape with long-lived flows capped at 64 packets.
std::shared_ptr<const Catalog> scaled_catalog() {
  static const auto catalog = [] {
    CatalogConfig c;
    c.long_max_packets = 64;
    c.label_count = kDefaultLabelCount;
    return std::make_shared<const Catalog>(make_synthetic_catalog(c, 12));
  }();
  return catalog;
}

MetricsReport simulate(std::vector<RateSegment> schedule, std::shared_ptr<const Catalog> catalog,
                       std::uint64_t seed, const SimConfig& config, double skew = 0.0) {
  GeneratorConfig g;
  g.schedule = std::move(schedule);
  g.seed = seed;
  g.popularity_skew = skew;
  PoissonTraceGenerator trace(g, std::move(catalog));
  return run(trace, config);
}

// ---------------------------------------------------------------------------

Result c1_planner_tables() {
  const auto t0 = Clock::now();
  const auto sizes = oracle::powers_of_two(8, 1024);
  const BatchSizeSet set(sizes);
  std::size_t mismatches = 0;
  std::size_t checked = 0;
  for (std::size_t r = 1; r <= 2048; ++r) {
    mismatches += plan_timeout(r, set) != oracle::naive_timeout(r, sizes);
    ++checked;
    for (double phi : {0.1, 0.2, 0.3, 0.5}) {
      mismatches += plan_carryover(r, set, phi) != oracle::naive_carryover(r, sizes, phi);
      ++checked;
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 1.0,
          Detail().kv("plans", checked).kv("mismatches", mismatches).kv("runtime_s", fixed(secs)).str()};
}

Result c2_padding_bound() {
  std::mt19937_64 rng(77);
  const auto all = oracle::powers_of_two(8, 1024);
  std::size_t violations = 0;
  std::size_t scaled = 0;
  double worst = 0.0;
  for (int i = 0; i < 10'000; ++i) {
    // Random subset of the powers of two; 8 always present.
    std::vector<std::size_t> sizes{8};
    for (std::size_t j = 1; j < all.size(); ++j) {
      if (rng() % 2) sizes.push_back(all[j]);
    }
    const BatchSizeSet set(sizes);
    const std::size_t r = 8 + rng() % 4000;
    const double phi = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
    const BatchPlan p = plan_carryover(r, set, phi);
    violations += p.padding_ratio() > phi;
    scaled += p.scaled_back;
    worst = std::max(worst, p.padding_ratio() - phi);
  }
  return {violations == 0, Detail()
                               .kv("calls", 10'000)
                               .kv("violations", violations)
                               .kv("scaled_back", scaled)
                               .kv("max_excess", fixed(worst, 4))
                               .str()};
}

Result c3_flow_table_shadow() {
  const auto t0 = Clock::now();
  FlowTableConfig c;
  c.records = 512;
  c.buckets = 32;
  c.stale_timeout = 5s;
  FlowTable table(c);
  oracle::FlowTableModel model(c, c.buckets);
  std::uint64_t evictions = 0;
  table.set_eviction_hook([&](std::uint32_t, const FlowRecord&) { ++evictions; });

  std::mt19937_64 rng(31337);
  std::vector<FiveTuple> keys;
  for (int i = 0; i < 2000; ++i) {
    keys.push_back(FiveTuple{static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng()),
                             static_cast<std::uint16_t>(rng()), static_cast<std::uint16_t>(rng()), 6});
  }
  std::int64_t now_us = 0;
  std::size_t mismatches = 0;
  std::size_t conservation_failures = 0;
  std::size_t series_seen = 0;
  std::vector<char> seen(c.records);
  for (int op = 0; op < 100'000; ++op) {
    const auto kind = rng() % 100;
    // A hot set keeps some flows alive long enough to complete series.
    const FiveTuple& key = rng() % 10 < 7 ? keys[rng() % 64] : keys[rng() % keys.size()];
    if (kind < 75) {
      PacketRecord p;
      p.flow = rng() % 2 ? key : reversed(key);
      p.length = static_cast<std::uint16_t>(1 + rng() % 1500);
      const SimTime now(now_us);
      const FlowAction got = table.on_packet(p, now);
      const auto want = model.on_packet(p, now, table.bucket_of(key));
      bool same = got.verdict == want.verdict;
      if (same && got.verdict != FlowVerdict::kDroppedNoCapacity) {
        same = got.index == want.index && got.new_flow == want.new_flow && got.direction == want.direction;
        if (want.label) same = same && got.label == Label(*want.label);
        if (want.series) same = same && got.series && got.series->features == *want.series;
        series_seen += want.series.has_value();
      }
      mismatches += !same;
    } else if (kind < 90) {
      const auto label = static_cast<std::uint32_t>(rng() % 200);
      mismatches += table.apply_label(key, Label(label)) != model.apply_label(key, label);
    } else if (kind < 97) {
      mismatches += table.find_index(key) != model.find_index(key);
    } else if (kind < 99) {
      mismatches += (table.find(key) != nullptr) != model.find_index(key).has_value();
    } else {
      now_us += static_cast<std::int64_t>(rng() % 8'000'000);
    }
    now_us += static_cast<std::int64_t>(rng() % 200);
    mismatches += table.size() != model.size() || table.free_count() != model.free_count();

    std::fill(seen.begin(), seen.end(), 0);
    std::size_t occupied = 0;
    bool ok = true;
    table.for_each_occupied([&](std::uint32_t idx, const FlowRecord&) {
      ok = ok && seen[idx] == 0;
      seen[idx] = 1;
      ++occupied;
    });
    ok = ok && occupied == table.size() && table.size() + table.free_count() == table.capacity();
    conservation_failures += !ok;
  }
  mismatches += evictions != model.evicted();
  const double secs = seconds_since(t0);
  return {mismatches == 0 && conservation_failures == 0 && secs < 10.0,
          Detail()
              .kv("ops", 100'000)
              .kv("mismatches", mismatches)
              .kv("conservation_failures", conservation_failures)
              .kv("evictions", evictions)
              .kv("series", series_seen)
              .kv("runtime_s", fixed(secs))
              .str()};
}

Series make_series(std::vector<std::int32_t> f, std::optional<Label> truth = std::nullopt) {
  Series s;
  s.features = std::move(f);
  s.truth = truth;
  return s;
}

std::vector<Series> shared_prefix_stream(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Series> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::int32_t> f(kDefaultSeriesLength);
    for (std::size_t j = 0; j < f.size(); ++j) {
      const auto v = static_cast<std::int32_t>(j < 6 ? 1 + rng() % 3 : 1 + rng() % 50);
      f[j] = rng() % 2 ? v : -v;
    }
    out.push_back(make_series(std::move(f)));
  }
  return out;
}

struct Graded {
  CacheCounters counters;
  std::uint64_t good = 0;
  std::uint64_t error = 0;
};

// Lookup-then-insert replay; hits are graded here as well as by the cache.
Graded replay(const CacheConfig& config, const std::vector<Series>& stream, const LabelOracle& oracle) {
  PrefixCache cache(config);
  Graded g;
  for (const Series& s : stream) {
    if (auto cached = cache.lookup(cache.key_of(s))) {
      cache.record_grade(grade_hit(s, *cached, oracle));
      (*cached == oracle(s) ? g.good : g.error) += 1;
    } else {
      cache.insert(cache.key_of(s), oracle(s));
    }
  }
  g.counters = cache.counters();
  return g;
}

Result c4_cache() {
  // LRU against the recency list.
  std::mt19937 rng(9);
  constexpr std::size_t kCapacity = 128;
  PrefixCache cache(CacheConfig{kCapacity, 2, KeyMode::kPrefix});
  oracle::RecencyList ref(kCapacity);
  std::size_t lru_mismatches = 0;
  for (int op = 0; op < 100'000; ++op) {
    const std::vector<std::int32_t> k{static_cast<std::int32_t>(1 + rng() % 30),
                                      static_cast<std::int32_t>(1 + rng() % 10)};
    if (rng() % 2 == 0) {
      const auto got = cache.lookup(Prefix{k});
      const auto want = ref.lookup(k);
      lru_mismatches += got.has_value() != want.has_value() || (want && got->class_id() != *want);
    } else {
      const auto label = static_cast<std::uint32_t>(rng() % 50);
      cache.insert(Prefix{k}, Label(label));
      ref.insert(k, label);
    }
    if (op % 1000 == 0 || op == 99'999) {
      const auto want = ref.order();
      const auto got = cache.recency_order();
      bool same = got.size() == want.size();
      for (std::size_t i = 0; same && i < got.size(); ++i) same = got[i].features == want[i];
      lru_mismatches += !same;
    }
  }

  // Full-length (exact) keys never err, on a synthetic stream and on a
  // simulated trace.
  const LabelOracle oracle(kDefaultLabelCount);
  const auto pool = shared_prefix_stream(3000, 4);
  std::vector<Series> stream;
  for (int i = 0; i < 100'000; ++i) stream.push_back(pool[rng() % pool.size()]);
  const Graded full = replay(CacheConfig{500, kDefaultSeriesLength, KeyMode::kExact}, stream, oracle);
  SimConfig sim = base_sim(PolicyMode::kTimeout, 10ms);
  sim.cache = CacheConfig{2000, kDefaultSeriesLength, KeyMode::kExact};
  const MetricsReport sim_full = simulate({{5000, 10}}, scaled_catalog(), 3, sim, kFlashSkew);

  // Two labels sharing a six-feature prefix.
  const Series a = make_series({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, Label(1));
  const Series b = make_series({1, 2, 3, 4, 5, 6, 70, 80, 90, 100}, Label(2));
  const Graded conflict = replay(CacheConfig{10, 6, KeyMode::kPrefix}, {a, b, a, b}, oracle);
  const Graded shared = replay(CacheConfig{500, 6, KeyMode::kPrefix}, stream, oracle);
  const bool graded_exactly = conflict.counters.good_hits == conflict.good &&
                              conflict.counters.error_hits == conflict.error && conflict.error == 2 &&
                              shared.counters.good_hits == shared.good && shared.counters.error_hits == shared.error;

  const bool pass = lru_mismatches == 0 && full.counters.error_hits == 0 && full.counters.hits > 0 &&
                    sim_full.error_hits == 0 && sim_full.cache_hits > 0 && conflict.error > 0 &&
                    shared.error > 0 && graded_exactly;
  return {pass, Detail()
                    .kv("lru_mismatches", lru_mismatches)
                    .kv("deltaK_hits", full.counters.hits)
                    .kv("deltaK_error_hits", full.counters.error_hits)
                    .kv("deltaK_sim_error_hits", sim_full.error_hits)
                    .kv("deltaK_sim_hits", sim_full.cache_hits)
                    .kv("conflict_error_hits", conflict.error)
                    .kv("delta6_error_hits", shared.error)
                    .kv("graded_exactly", graded_exactly ? "yes" : "no")
                    .str()};
}

Result c5_usage() {
  Detail d;
  bool pass = true;
  for (double lambda : {10'000.0, 30'000.0, 50'000.0}) {
    const auto t0 = Clock::now();
    const std::vector<RateSegment> schedule{{lambda, 60}};
    const MetricsReport nt = simulate(schedule, series_catalog(), 5, base_sim(PolicyMode::kNoTimeout, 10ms));
    const MetricsReport to = simulate(schedule, series_catalog(), 5, base_sim(PolicyMode::kTimeout, 10ms));
    const MetricsReport co = simulate(schedule, series_catalog(), 5, base_sim(PolicyMode::kCarryOver, 10ms, 0.2));
    const double point_s = seconds_since(t0) / 3.0;
    bool ok = nt.usage() > 0.9;
    if (lambda == 10'000.0) ok = ok && to.usage() < nt.usage();
    ok = ok && co.padding_share() <= 0.2 && co.padding_share() <= to.padding_share();
    ok = ok && point_s < 60.0;
    pass = pass && ok;
    d.text("[" + fixed(lambda / 1000, 0) + "k")
        .kv("usage_nt", fixed(nt.usage()))
        .kv("usage_to", fixed(to.usage()))
        .kv("usage_co", fixed(co.usage()))
        .kv("pad_share_to", fixed(to.padding_share()))
        .kv("pad_share_co", fixed(co.padding_share()))
        .kv("s_per_run", fixed(point_s, 1) + "]");
  }
  return {pass, d.str()};
}

Result c6_timeout_sweep() {
  const std::vector<RateSegment> schedule{{50'000, 120}};
  Detail d;
  std::vector<double> medians;
  std::vector<double> post_mortem;
  for (int ms : {0, 5, 10, 20}) {
    const SimConfig cfg = ms == 0 ? base_sim(PolicyMode::kNoTimeout, 10ms)
                                  : base_sim(PolicyMode::kTimeout, std::chrono::milliseconds(ms));
    const MetricsReport r = simulate(schedule, scaled_catalog(), 6, cfg);
    medians.push_back(median(r.delay_ms));
    post_mortem.push_back(r.post_mortem_ratio());
    d.text("[T=" + std::to_string(ms)).kv("p50_ms", fixed(medians.back())).kv("pm", fixed(post_mortem.back(), 4) + "]");
  }
  bool pass = true;
  for (std::size_t i = 1; i < medians.size(); ++i) {
    pass = pass && medians[i] > medians[i - 1] && post_mortem[i] >= post_mortem[i - 1];
  }
  for (double phi : {0.1, 0.2, 0.3}) {
    const MetricsReport r = simulate(schedule, scaled_catalog(), 6, base_sim(PolicyMode::kCarryOver, 10ms, phi));
    std::vector<double> ratios = r.padding_ratios;
    std::sort(ratios.begin(), ratios.end());
    const double p99 = percentile_sorted(ratios, 0.99);
    pass = pass && p99 <= phi;
    d.text("[phi=" + fixed(phi, 1)).kv("pad_p99", fixed(p99, 4) + "]");
  }
  return {pass, d.str()};
}

// Flash crowd: two 1:1:1 pipelines, 10k -> 70k -> 10k flows/s, 120 s each.
const MetricsReport& flash_crowd(PolicyMode mode, bool cache) {
  static std::map<std::pair<PolicyMode, bool>, MetricsReport> memo;
  auto it = memo.find({mode, cache});
  if (it != memo.end()) return it->second;
  SimConfig cfg = base_sim(mode, 10ms, 0.2);
  cfg.deployment.pipelines = 2;
  if (cache) cfg.cache = CacheConfig{kFlashCacheCapacity, 6, KeyMode::kPrefix};
  MetricsReport r = simulate({{10'000, 120}, {70'000, 120}, {10'000, 120}}, scaled_catalog(), 7, cfg, kFlashSkew);
  return memo.emplace(std::make_pair(mode, cache), std::move(r)).first->second;
}

std::array<double, 3> phase_batch_sizes(const MetricsReport& r) {
  std::array<std::uint64_t, 3> sum{};
  std::array<std::uint64_t, 3> batches{};
  for (std::size_t w = 0; w < r.windows.size(); ++w) {
    const std::size_t phase = std::min<std::size_t>(w * static_cast<std::size_t>(r.window_us) / 120'000'000, 2);
    sum[phase] += r.windows[w].batch_size_sum;
    batches[phase] += r.windows[w].batches;
  }
  std::array<double, 3> avg{};
  for (std::size_t i = 0; i < 3; ++i) {
    avg[i] = batches[i] == 0 ? 0.0 : static_cast<double>(sum[i]) / static_cast<double>(batches[i]);
  }
  return avg;
}

Result c7_flash_crowd() {
  const auto t0 = Clock::now();
  const MetricsReport& to = flash_crowd(PolicyMode::kTimeout, true);
  const MetricsReport& co = flash_crowd(PolicyMode::kCarryOver, true);
  const double secs = seconds_since(t0);
  const auto a = phase_batch_sizes(to);
  const auto b = phase_batch_sizes(co);
  const bool hit_ok = to.cache_hit_ratio() >= kHitLow && to.cache_hit_ratio() <= kHitHigh &&
                      co.cache_hit_ratio() >= kHitLow && co.cache_hit_ratio() <= kHitHigh;
  const bool shape = a[1] > a[0] && a[1] > a[2] && b[1] > b[0] && b[1] > b[2];
  const bool padding = co.busy_padding_us < to.busy_padding_us;
  return {hit_ok && shape && padding && secs < 300.0,
          Detail()
              .kv("hit_to", fixed(to.cache_hit_ratio()))
              .kv("hit_co", fixed(co.cache_hit_ratio()))
              .kv("batch_to", fixed(a[0], 1) + "/" + fixed(a[1], 1) + "/" + fixed(a[2], 1))
              .kv("batch_co", fixed(b[0], 1) + "/" + fixed(b[1], 1) + "/" + fixed(b[2], 1))
              .kv("pad_busy_s_to", fixed(static_cast<double>(to.busy_padding_us) / 1e6))
              .kv("pad_busy_s_co", fixed(static_cast<double>(co.busy_padding_us) / 1e6))
              .kv("runtime_s", fixed(secs, 1))
              .str()};
}

Result c8_cache_impact() {
  Detail d;
  bool pass = true;
  for (PolicyMode mode : {PolicyMode::kCarryOver, PolicyMode::kTimeout}) {
    const MetricsReport& on = flash_crowd(mode, true);
    const MetricsReport& off = flash_crowd(mode, false);
    const double hit = on.cache_hit_ratio();
    const double m_on = median(on.delay_ms);
    const double m_off = median(off.delay_ms);
    pass = pass && hit >= kHitLow && hit <= kHitHigh && m_on < m_off &&
           on.post_mortem_ratio() < off.post_mortem_ratio();
    d.text(std::string("[") + to_string(mode))
        .kv("hit", fixed(hit))
        .kv("p50_ms", fixed(m_off) + "->" + fixed(m_on))
        .kv("pm", fixed(off.post_mortem_ratio(), 4) + "->" + fixed(on.post_mortem_ratio(), 4) + "]");
  }
  return {pass, d.str()};
}

Corpus random_corpus(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::set<std::vector<std::int32_t>> seen;
  Corpus c;
  while (c.size() < n) {
    std::vector<std::int32_t> f(kDefaultSeriesLength);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const std::uint64_t width = i < 4 ? 4 : 40;
      const auto v = static_cast<std::int32_t>(1 + rng() % width);
      f[i] = rng() % 2 ? v : -v;
    }
    if (!seen.insert(f).second) continue;
    // Labels follow the first feature most of the time, so safe and
    // dangerous groups both occur.
    const auto label = rng() % 4 ? static_cast<std::uint32_t>(f[0] + 10) : static_cast<std::uint32_t>(rng() % 6);
    c.push_back(CorpusEntry{std::move(f), Label(label), 1 + rng() % 50});
  }
  return c;
}

Result c9_typology() {
  std::size_t mismatches = 0;
  std::size_t degenerate_failures = 0;
  std::uint64_t dangerous_seen = 0;
  const std::size_t k = kDefaultSeriesLength;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Corpus corpus = random_corpus(10'000, seed);
    const Weighting w = seed % 2 ? Weighting::kByFlows : Weighting::kBySeries;
    const TypologyReport fast = typology_report(corpus, 1, k, kDefaultToxicBeta, w);
    mismatches += fast.rows.size() != k;
    for (const TypologyRow& row : fast.rows) {
      mismatches += row != brute_force_recount(corpus, row.delta, kDefaultToxicBeta, w);
      dangerous_seen += row.dangerous_prefixes;
    }
    for (const TypologyRow& row : typology_report(corpus, 1, k, 1.0, w).rows) {
      degenerate_failures += row.toxic != row.dangerous || row.toxic_prefixes != row.dangerous_prefixes;
    }
    const TypologyRow full = typology_report(corpus, k, k, kDefaultToxicBeta, w).rows.at(0);
    degenerate_failures += full.dangerous != 0 || full.dangerous_prefixes != 0;
  }
  return {mismatches == 0 && degenerate_failures == 0 && dangerous_seen > 0,
          Detail()
              .kv("corpora", 10)
              .kv("mismatches", mismatches)
              .kv("degenerate_failures", degenerate_failures)
              .kv("dangerous_prefixes", dangerous_seen)
              .str()};
}

Result c10_determinism() {
  const nlohmann::json doc = {
      {"seed", 42},
      {"trace", {{"lambda", 8000}, {"duration_s", 10}, {"catalog", {{"size", 5000}, {"long_max_packets", 200}}}}},
      {"deployment", {{"topology", "2:1:1"}, {"pipelines", 2}}},
      {"policy", {{"mode", "carryover"}, {"timeout_ms", 5}, {"phi", 0.2}}},
      {"cache", {{"capacity", 1000}, {"delta", 6}, {"key_mode", "prefix"}}},
      {"flow_table", {{"records", 262144}, {"buckets", 65536}, {"stale_timeout_s", 5}}}};
  const ScenarioConfig generated = scenario_from_json(doc);
  auto report = [](const ScenarioConfig& c) {
    auto trace = open_scenario_trace(c);
    return scenario_report(c, run(*trace, c.sim)).dump(2);
  };
  const std::string g1 = report(generated);
  const std::string g2 = report(generated);

  const auto path = std::filesystem::temp_directory_path() / "dlflow_acceptance_trace.bin";
  {
    auto trace = open_scenario_trace(generated);
    write_trace(path.string(), *trace);
  }
  ScenarioConfig replay = generated;
  replay.trace = TraceSpec{};
  replay.trace.path = path.string();
  const std::string f1 = report(replay);
  const std::string f2 = report(replay);
  std::filesystem::remove(path);
  return {g1 == g2 && f1 == f2, Detail()
                                    .kv("generated_identical", g1 == g2 ? "yes" : "no")
                                    .kv("replayed_identical", f1 == f2 ? "yes" : "no")
                                    .kv("report_bytes", g1.size())
                                    .str()};
}

Result c11_live() {
  SimConfig cfg = base_sim(PolicyMode::kCarryOver, 2ms, 0.2);
  cfg.deployment.pipelines = 2;
  cfg.table.records = 1U << 18;
  cfg.table.buckets = 1U << 15;
  cfg.cache = CacheConfig{2000, 6, KeyMode::kPrefix};
  cfg.ring_capacity = 1024;
  auto trace = generate_trace(50'000, 600, scaled_catalog(), 8);
  LiveOptions o;
  o.max_wall = 10s;
  const LiveReport r = run_live(*trace, cfg, o);
  return {r.conserved() && r.duplicates == 0 && r.series_produced > 0,
          Detail()
              .kv("packets", r.packets)
              .kv("series", r.series_produced)
              .kv("hits", r.cache_hits)
              .kv("inferred", r.inferred)
              .kv("ring_dropped", r.ring_dropped)
              .kv("left_in_rings", r.left_in_rings)
              .kv("duplicates", r.duplicates)
              .kv("wall_s", fixed(r.wall_s, 1))
              .str()};
}

Result c12_on_packet_rate() {
  FlowTableConfig cfg;
  cfg.records = 1U << 19;
  cfg.buckets = 1U << 17;
  FlowTable table(cfg);
  std::mt19937_64 rng(12);
  std::vector<FiveTuple> flows;
  PacketRecord pkt;
  pkt.length = 100;
  while (table.size() < cfg.records / 2) {
    pkt.flow = FiveTuple{static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng()),
                         static_cast<std::uint16_t>(rng()), static_cast<std::uint16_t>(rng()), 6};
    table.on_packet(pkt, SimTime(0));
    flows.push_back(pkt.flow);
  }
  constexpr std::size_t kOps = 4'000'000;
  std::vector<std::uint32_t> order(kOps);
  for (auto& o : order) o = static_cast<std::uint32_t>(rng() % flows.size());
  const auto t0 = Clock::now();
  std::uint64_t tagged = 0;
  for (std::size_t i = 0; i < kOps; ++i) {
    pkt.flow = flows[order[i]];
    tagged += table.on_packet(pkt, SimTime(static_cast<std::int64_t>(i))).verdict == FlowVerdict::kTagAndForward;
  }
  const double rate = static_cast<double>(kOps) / seconds_since(t0);
  return {rate >= 1e6, Detail().kv("load", 0.5).kv("ops_per_s", fixed(rate / 1e6, 2) + "M").kv("tagged", tagged).str()};
}

}  // namespace

std::vector<Criterion> all_criteria() {
  return {
      {1, "planner-oracle-tables", true, c1_planner_tables},
      {2, "carryover-padding-bound", true, c2_padding_bound},
      {3, "flowtable-shadow-oracle", true, c3_flow_table_shadow},
      {4, "cache-correctness", true, c4_cache},
      {5, "usage-vs-rate", true, c5_usage},
      {6, "timeout-and-phi-sweep", true, c6_timeout_sweep},
      {7, "flash-crowd", true, c7_flash_crowd},
      {8, "caching-impact", true, c8_cache_impact},
      {9, "prefix-typology", true, c9_typology},
      {10, "determinism", true, c10_determinism},
      {11, "live-soundness", true, c11_live},
      {12, "on-packet-throughput", false, c12_on_packet_rate},
  };
}

}  // namespace dlflow::acceptance
