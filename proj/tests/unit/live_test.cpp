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

#include <gtest/gtest.h>

#include "dlflow/live.hpp"

namespace dlflow {
namespace {

using namespace std::chrono_literals;

std::shared_ptr<const Catalog> catalog() {
  CatalogConfig c;
  c.size = 400;
  c.long_max_packets = 50;
  c.gap_mean_us = 200;
  c.common_lengths = {40, 1448};
  c.common_length_probability = 0.6;
  return std::make_shared<const Catalog>(make_synthetic_catalog(c, 8));
}

SimConfig live_config() {
  SimConfig c;
  c.table.records = 1U << 16;
  c.table.buckets = 1U << 12;
  c.policy.timeout = 2ms;
  c.cache = CacheConfig{500, 6, KeyMode::kPrefix};
  return c;
}

TEST(Live, ConservesSeriesOneToOne) {
  auto trace = generate_trace(20'000, 0.5, catalog(), 3);
  const LiveReport r = run_live(*trace, live_config());
  EXPECT_GT(r.series_produced, 1000u);
  EXPECT_TRUE(r.conserved()) << nlohmann::json(r).dump();
  EXPECT_EQ(r.duplicates, 0u);
  EXPECT_LE(r.labels_applied, r.series_produced);
}

TEST(Live, ConservesWithTwoFlowManagersPerAnalyticsManager) {
  SimConfig c = live_config();
  c.deployment.topology = Topology::kTwoOneOne;
  c.policy.mode = PolicyMode::kNoTimeout;
  c.ring_capacity = 64;
  auto trace = generate_trace(20'000, 0.5, catalog(), 4);
  const LiveReport r = run_live(*trace, c);
  EXPECT_TRUE(r.conserved()) << nlohmann::json(r).dump();
  EXPECT_EQ(r.duplicates, 0u);
}

TEST(Live, MaxWallStopsDispatch) {
  auto trace = generate_trace(10'000, 1000.0, catalog(), 5);
  LiveOptions o;
  o.max_wall = 300ms;
  const LiveReport r = run_live(*trace, live_config(), o);
  EXPECT_GT(r.packets, 0u);
  EXPECT_TRUE(r.conserved());
  EXPECT_LT(r.wall_s, 30.0);
}

}  // namespace
}  // namespace dlflow
