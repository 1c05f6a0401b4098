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

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "dlflow/batching.hpp"
#include "dlflow/cring.hpp"
#include "dlflow/flow_table.hpp"
#include "dlflow/prefix_cache.hpp"

namespace {

using namespace dlflow;

FiveTuple random_tuple(std::mt19937_64& rng) {
  return FiveTuple{static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng()),
                   static_cast<std::uint16_t>(rng()), static_cast<std::uint16_t>(rng()), 6};
}

// Arg: load factor in percent of the data array.
void BM_FlowTableOnPacket(benchmark::State& state) {
  FlowTableConfig cfg;
  FlowTable table(cfg);
  std::mt19937_64 rng(1);
  std::vector<FiveTuple> flows;
  PacketRecord pkt;
  pkt.length = 100;
  const auto target = static_cast<std::size_t>(cfg.records) * static_cast<std::size_t>(state.range(0)) / 100;
  while (table.size() < target) {
    pkt.flow = random_tuple(rng);
    if (table.on_packet(pkt, SimTime(0)).verdict == FlowVerdict::kDroppedNoCapacity) break;
    flows.push_back(pkt.flow);
  }
  if (flows.empty()) flows.push_back(random_tuple(rng));
  std::vector<std::uint32_t> order(1U << 20);
  for (auto& o : order) o = static_cast<std::uint32_t>(rng() % flows.size());
  std::size_t i = 0;
  for (auto _ : state) {
    pkt.flow = flows[order[i & (order.size() - 1)]];
    benchmark::DoNotOptimize(table.on_packet(pkt, SimTime(static_cast<std::int64_t>(i))));
    ++i;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_FlowTableOnPacket)->Arg(0)->Arg(25)->Arg(50)->Arg(75)->Arg(100);

void BM_PlanCarryover(benchmark::State& state) {
  const BatchSizeSet sizes;
  std::size_t r = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(plan_carryover(r, sizes, 0.2));
    r = r % 2048 + 1;
  }
}
BENCHMARK(BM_PlanCarryover);

void BM_PrefixCacheLookupInsert(benchmark::State& state) {
  PrefixCache cache(CacheConfig{static_cast<std::size_t>(state.range(0)), 6, KeyMode::kPrefix});
  std::mt19937_64 rng(2);
  std::vector<Prefix> keys;
  for (int i = 0; i < 4096; ++i) {
    Prefix p;
    for (int j = 0; j < 6; ++j) p.features.push_back(static_cast<std::int32_t>(rng() % 64));
    keys.push_back(std::move(p));
  }
  std::size_t i = 0;
  for (auto _ : state) {
    const Prefix& k = keys[i++ & 4095];
    if (!cache.lookup(k)) cache.insert(k, Label(1));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PrefixCacheLookupInsert)->Arg(256)->Arg(2048);

void BM_CRingPushDrain(benchmark::State& state) {
  CRing<std::uint64_t> ring(1024);
  std::uint64_t v = 0;
  for (auto _ : state) {
    for (int i = 0; i < 512; ++i) ring.push(v++);
    auto out = ring.drain_up_to(512);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * 512);
}
BENCHMARK(BM_CRingPushDrain);

}  // namespace
BENCHMARK_MAIN();
