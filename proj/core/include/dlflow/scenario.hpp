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

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dlflow/simulator.hpp"
#include "dlflow/traffic.hpp"

namespace dlflow {

/// Where the packets of a scenario come from: a trace file, or the Poisson
/// generator over a catalog (read from a file or synthesized).
struct TraceSpec {
  std::string path;
  std::vector<RateSegment> schedule;
  double popularity_skew = 0.0;
  std::string catalog_path;
  CatalogConfig catalog;
};

struct OutputSpec {
  std::string report;   // JSON summary
  std::string windows;  // per-window CSV
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  TraceSpec trace;
  SimConfig sim;
  OutputSpec outputs;
};

/// Strict parse: unknown keys and invalid values raise ConfigError. A
/// timeout of 0 ms selects the no-timeout mode.
ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& c);
ScenarioConfig load_scenario(const std::string& path);

/// Catalog seed and generator seed both derive from the scenario seed.
std::shared_ptr<const Catalog> scenario_catalog(const ScenarioConfig& c);
std::unique_ptr<TraceSource> open_scenario_trace(const ScenarioConfig& c);

/// Report JSON with the effective configuration echoed under "config".
nlohmann::json scenario_report(const ScenarioConfig& c, const MetricsReport& r);

}  // namespace dlflow
