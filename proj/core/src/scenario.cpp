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

#include "dlflow/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "dlflow/trace_io.hpp"

namespace dlflow {

namespace {

using nlohmann::json;

void check_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void opt(const json& j, const char* key, T& field) {
  if (j.contains(key)) j.at(key).get_to(field);
}

std::string schedule_string(const std::vector<RateSegment>& s) {
  std::ostringstream out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i > 0) out << ',';
    out << s[i].flows_per_second << ':' << s[i].duration_s;
  }
  return out.str();
}

void parse_trace(const json& j, TraceSpec& t) {
  check_keys(j, "trace", {"path", "lambda", "duration_s", "schedule", "popularity_skew", "catalog",
                          "catalog_path"});
  opt(j, "path", t.path);
  if (j.contains("schedule")) {
    t.schedule = parse_schedule(j.at("schedule").get<std::string>());
  } else if (j.contains("lambda") || j.contains("duration_s")) {
    if (!j.contains("lambda") || !j.contains("duration_s")) {
      throw ConfigError("trace needs both lambda and duration_s");
    }
    t.schedule = {RateSegment{j.at("lambda").get<double>(), j.at("duration_s").get<double>()}};
  }
  opt(j, "popularity_skew", t.popularity_skew);
  opt(j, "catalog_path", t.catalog_path);
  if (j.contains("catalog")) j.at("catalog").get_to(t.catalog);
  if (t.path.empty() && t.schedule.empty()) {
    throw ConfigError("trace needs a path, a schedule, or lambda and duration_s");
  }
}

void parse_policy(const json& j, PolicyConfig& p, bool& sizes_given) {
  check_keys(j, "policy", {"mode", "timeout_ms", "phi", "batch_sizes"});
  if (j.contains("mode")) {
    auto mode = parse_policy_mode(j.at("mode").get<std::string>());
    if (!mode) throw ConfigError("unknown policy mode '" + j.at("mode").get<std::string>() + "'");
    p.mode = *mode;
  }
  if (j.contains("timeout_ms")) {
    const double ms = j.at("timeout_ms").get<double>();
    if (ms < 0.0) throw ConfigError("timeout_ms must be >= 0");
    p.timeout = SimTime(static_cast<std::int64_t>(ms * 1000.0));
    if (p.timeout == SimTime::zero()) p.mode = PolicyMode::kNoTimeout;
  }
  opt(j, "phi", p.phi);
  if (j.contains("batch_sizes")) {
    p.sizes = BatchSizeSet(j.at("batch_sizes").get<std::vector<std::size_t>>());
    sizes_given = true;
  }
}

void parse_table(const json& j, FlowTableConfig& t) {
  check_keys(j, "flow_table", {"records", "buckets", "stale_timeout_s"});
  opt(j, "records", t.records);
  opt(j, "buckets", t.buckets);
  if (j.contains("stale_timeout_s")) t.stale_timeout = std::chrono::seconds(j.at("stale_timeout_s").get<std::int64_t>());
}

void parse_deployment(const json& j, Deployment& d) {
  check_keys(j, "deployment", {"topology", "pipelines", "merge"});
  if (j.contains("topology")) {
    auto t = parse_topology(j.at("topology").get<std::string>());
    if (!t) throw ConfigError("unknown topology '" + j.at("topology").get<std::string>() + "'");
    d.topology = *t;
  }
  opt(j, "pipelines", d.pipelines);
  if (j.contains("merge")) {
    auto m = parse_merge_order(j.at("merge").get<std::string>());
    if (!m) throw ConfigError("unknown merge order '" + j.at("merge").get<std::string>() + "'");
    d.merge = *m;
  }
}

}  // namespace

ScenarioConfig scenario_from_json(const json& j) {
  ScenarioConfig c;
  try {
    check_keys(j, "scenario", {"seed", "trace", "deployment", "policy", "cache", "accelerator",
                               "flow_table", "series_length", "ring_capacity", "label_count",
                               "window_s", "detail", "outputs"});
    opt(j, "seed", c.seed);
    if (!j.contains("trace")) throw ConfigError("scenario needs a trace section");
    parse_trace(j.at("trace"), c.trace);
    if (j.contains("deployment")) parse_deployment(j.at("deployment"), c.sim.deployment);
    if (j.contains("accelerator")) j.at("accelerator").get_to(c.sim.profile);
    bool sizes_given = false;
    if (j.contains("policy")) parse_policy(j.at("policy"), c.sim.policy, sizes_given);
    if (sizes_given) {
      c.sim.profile.sizes = c.sim.policy.sizes;
    } else {
      c.sim.policy.sizes = c.sim.profile.sizes;
    }
    if (j.contains("cache")) {
      check_keys(j.at("cache"), "cache", {"capacity", "delta", "key_mode"});
      j.at("cache").get_to(c.sim.cache);
    }
    if (j.contains("flow_table")) parse_table(j.at("flow_table"), c.sim.table);
    opt(j, "series_length", c.sim.table.series_length);
    opt(j, "ring_capacity", c.sim.ring_capacity);
    opt(j, "label_count", c.sim.label_count);
    if (j.contains("window_s")) {
      c.sim.window = SimTime(static_cast<std::int64_t>(j.at("window_s").get<double>() * 1e6));
    }
    opt(j, "detail", c.sim.detail);
    if (j.contains("outputs")) {
      check_keys(j.at("outputs"), "outputs", {"report", "windows"});
      opt(j.at("outputs"), "report", c.outputs.report);
      opt(j.at("outputs"), "windows", c.outputs.windows);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  c.sim.validate();
  return c;
}

json scenario_to_json(const ScenarioConfig& c) {
  json trace;
  if (!c.trace.path.empty()) trace["path"] = c.trace.path;
  if (!c.trace.schedule.empty()) trace["schedule"] = schedule_string(c.trace.schedule);
  if (c.trace.path.empty()) {
    trace["popularity_skew"] = c.trace.popularity_skew;
    if (!c.trace.catalog_path.empty()) {
      trace["catalog_path"] = c.trace.catalog_path;
    } else {
      trace["catalog"] = c.trace.catalog;
    }
  }
  const SimConfig& s = c.sim;
  const auto sizes = s.policy.sizes.sizes();
  json j{{"seed", c.seed},
         {"trace", trace},
         {"deployment",
          {{"topology", to_string(s.deployment.topology)},
           {"pipelines", s.deployment.pipelines},
           {"merge", to_string(s.deployment.merge)}}},
         {"policy",
          {{"mode", to_string(s.policy.mode)},
           {"timeout_ms", static_cast<double>(s.policy.timeout.count()) / 1000.0},
           {"phi", s.policy.phi},
           {"batch_sizes", std::vector<std::size_t>(sizes.begin(), sizes.end())}}},
         {"cache", s.cache},
         {"accelerator", s.profile},
         {"flow_table",
          {{"records", s.table.records},
           {"buckets", s.table.buckets},
           {"stale_timeout_s", s.table.stale_timeout.count()}}},
         {"series_length", s.table.series_length},
         {"ring_capacity", s.ring_capacity},
         {"label_count", s.label_count},
         {"window_s", static_cast<double>(s.window.count()) / 1e6},
         {"detail", s.detail}};
  if (s.policy.mode == PolicyMode::kNoTimeout) j["policy"]["timeout_ms"] = 0.0;
  json outputs = json::object();
  if (!c.outputs.report.empty()) outputs["report"] = c.outputs.report;
  if (!c.outputs.windows.empty()) outputs["windows"] = c.outputs.windows;
  j["outputs"] = outputs;
  return j;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("scenario '" + path + "': " + e.what());
  }
  return scenario_from_json(j);
}

std::shared_ptr<const Catalog> scenario_catalog(const ScenarioConfig& c) {
  if (!c.trace.catalog_path.empty()) {
    std::ifstream in(c.trace.catalog_path);
    if (!in) throw ConfigError("cannot open catalog '" + c.trace.catalog_path + "'");
    return std::make_shared<const Catalog>(read_catalog_csv(in));
  }
  return std::make_shared<const Catalog>(make_synthetic_catalog(c.trace.catalog, c.seed));
}

std::unique_ptr<TraceSource> open_scenario_trace(const ScenarioConfig& c) {
  if (!c.trace.path.empty()) return open_trace(c.trace.path);
  GeneratorConfig g;
  g.schedule = c.trace.schedule;
  g.seed = c.seed ^ 0x9e3779b97f4a7c15ULL;
  g.popularity_skew = c.trace.popularity_skew;
  return std::make_unique<PoissonTraceGenerator>(g, scenario_catalog(c));
}

json scenario_report(const ScenarioConfig& c, const MetricsReport& r) {
  json j = to_json(r);
  j["config"] = scenario_to_json(c);
  return j;
}

}  // namespace dlflow
