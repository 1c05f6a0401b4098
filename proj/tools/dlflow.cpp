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

#include <chrono>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dlflow/flow_table.hpp"
#include "dlflow/live.hpp"
#include "dlflow/prefixlab.hpp"
#include "dlflow/scenario.hpp"
#include "dlflow/simulator.hpp"
#include "dlflow/trace_io.hpp"
#include "dlflow/traffic.hpp"

namespace {

using nlohmann::json;

constexpr int kUsageError = 2;

bool write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) {
    std::cerr << "error: cannot write " << path << '\n';
    return false;
  }
  return true;
}

// Exit code 2 marks bad or missing flags.
[[noreturn]] void usage_error(const std::string& msg) {
  std::cerr << "error: " << msg << '\n';
  std::exit(kUsageError);
}

int gen_trace(const dlflow::GeneratorConfig& gen, const dlflow::CatalogConfig& cat_cfg,
              const std::string& catalog_path, const std::string& catalog_out, const std::string& out,
              std::size_t k) {
  std::shared_ptr<const dlflow::Catalog> catalog;
  if (!catalog_path.empty()) {
    std::ifstream in(catalog_path);
    if (!in) throw std::runtime_error("cannot open catalog " + catalog_path);
    catalog = std::make_shared<const dlflow::Catalog>(dlflow::read_catalog_csv(in));
  } else {
    catalog = std::make_shared<const dlflow::Catalog>(dlflow::make_synthetic_catalog(cat_cfg, gen.seed));
  }
  if (!catalog_out.empty()) {
    std::ofstream c(catalog_out);
    dlflow::write_catalog_csv(c, *catalog);
    if (!c) {
      std::cerr << "error: cannot write " << catalog_out << '\n';
      return 1;
    }
  }
  dlflow::GeneratorConfig g = gen;
  g.seed = gen.seed ^ 0x9e3779b97f4a7c15ULL;
  dlflow::PoissonTraceGenerator source(g, catalog);
  dlflow::StatsTap tap(source, k);
  dlflow::write_trace(out, tap);
  json stats = tap.finish();
  stats["flows_started"] = source.flows_started();
  stats["out"] = out;
  std::cout << stats.dump(2) << '\n';
  return 0;
}

int simulate(const std::string& config_path, const std::string& report_override,
             const std::string& windows_override, bool live, double max_wall_s) {
  dlflow::ScenarioConfig cfg = dlflow::load_scenario(config_path);
  if (!report_override.empty()) cfg.outputs.report = report_override;
  if (!windows_override.empty()) cfg.outputs.windows = windows_override;
  auto trace = dlflow::open_scenario_trace(cfg);

  if (live) {
    dlflow::LiveOptions opts;
    opts.max_wall = std::chrono::milliseconds(static_cast<std::int64_t>(max_wall_s * 1000.0));
    const dlflow::LiveReport r = dlflow::run_live(*trace, cfg.sim, opts);
    json j = r;
    j["config"] = dlflow::scenario_to_json(cfg);
    const std::string text = j.dump(2) + "\n";
    if (cfg.outputs.report.empty()) {
      std::cout << text;
      return r.conserved() ? 0 : 1;
    }
    if (!write_text(cfg.outputs.report, text)) return 1;
    return r.conserved() ? 0 : 1;
  }

  const dlflow::MetricsReport report = dlflow::run(*trace, cfg.sim);
  const std::string text = dlflow::scenario_report(cfg, report).dump(2) + "\n";
  bool ok = true;
  if (cfg.outputs.report.empty()) {
    std::cout << text;
  } else {
    ok = write_text(cfg.outputs.report, text) && ok;
  }
  if (!cfg.outputs.windows.empty()) ok = write_text(cfg.outputs.windows, dlflow::windows_csv(report)) && ok;
  return ok ? 0 : 1;
}

int analyze_prefixes(const std::string& corpus_path, const std::string& trace_path, std::size_t k,
                     std::size_t dmin, std::size_t dmax, double beta, const std::string& weighting,
                     const std::string& out, const std::string& csv) {
  auto w = dlflow::parse_weighting(weighting);
  if (!w) usage_error("weighting must be byFlows or bySeries");
  dlflow::Corpus corpus;
  if (!corpus_path.empty()) {
    std::ifstream in(corpus_path);
    if (!in) throw std::runtime_error("cannot open corpus " + corpus_path);
    corpus = dlflow::read_corpus_csv(in);
  } else {
    auto trace = dlflow::open_trace(trace_path);
    corpus = dlflow::corpus_from_trace(*trace, k);
  }
  const dlflow::TypologyReport report = dlflow::typology_report(corpus, dmin, dmax, beta, *w);
  json j = report;
  j["series"] = corpus.size();
  const std::string text = j.dump(2) + "\n";
  bool ok = true;
  if (out.empty()) {
    std::cout << text;
  } else {
    ok = write_text(out, text);
  }
  if (!csv.empty()) ok = write_text(csv, dlflow::typology_csv(report)) && ok;
  return ok ? 0 : 1;
}

dlflow::FiveTuple random_tuple(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::uint32_t> ip;
  std::uniform_int_distribution<std::uint16_t> port(1024, 65535);
  return dlflow::FiveTuple{ip(rng), ip(rng), port(rng), port(rng), 6};
}

int bench(const std::vector<double>& loads, std::uint32_t records, std::uint32_t buckets,
          std::size_t ops, std::uint64_t seed, const std::string& out) {
  json rows = json::array();
  for (double load : loads) {
    if (load < 0.0 || load > 1.0) usage_error("load factors must lie in [0, 1]");
    dlflow::FlowTableConfig cfg;
    cfg.records = records;
    cfg.buckets = buckets;
    cfg.stale_timeout = std::chrono::seconds(30);
    dlflow::FlowTable table(cfg);
    std::mt19937_64 rng(seed);
    std::vector<dlflow::FiveTuple> flows;
    const auto target = static_cast<std::size_t>(load * records);
    dlflow::PacketRecord pkt;
    pkt.length = 100;
    while (table.size() < target) {
      pkt.flow = random_tuple(rng);
      if (table.on_packet(pkt, dlflow::SimTime(0)).verdict != dlflow::FlowVerdict::kDroppedNoCapacity) {
        flows.push_back(pkt.flow);
      } else {
        break;
      }
    }
    // Load 0 means a single flow carries every packet.
    if (flows.empty()) {
      pkt.flow = random_tuple(rng);
      flows.push_back(pkt.flow);
    }
    std::vector<std::uint32_t> order(ops);
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(flows.size() - 1));
    for (auto& o : order) o = pick(rng);

    const auto t0 = std::chrono::steady_clock::now();
    std::uint64_t tagged = 0;
    for (std::size_t i = 0; i < ops; ++i) {
      pkt.flow = flows[order[i]];
      pkt.ts = dlflow::SimTime(static_cast<std::int64_t>(i));
      tagged += table.on_packet(pkt, pkt.ts).verdict == dlflow::FlowVerdict::kTagAndForward;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json row{{"load", load},
             {"ops", ops},
             {"seconds", secs},
             {"ops_per_second", secs > 0 ? static_cast<double>(ops) / secs : 0.0},
             {"tagged", tagged},
             {"table", table.stats()}};
    std::cerr << "load " << load << ": " << static_cast<double>(ops) / secs / 1e6 << " Mops/s\n";
    rows.push_back(row);
  }
  json j{{"records", records}, {"buckets", buckets}, {"rows", rows}};
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  return write_text(out, j.dump(2) + "\n") ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dlflow: flow-table, batching and caching simulator for in-network traffic analytics"};
  app.require_subcommand(1);

  // gen-trace
  auto* gen = app.add_subcommand("gen-trace", "Generate a Poisson flow-arrival trace");
  double lambda = 0.0;
  double duration = 0.0;
  std::string schedule;
  std::uint64_t seed = 1;
  std::string out;
  std::string catalog_path;
  std::string catalog_out;
  double skew = 0.0;
  std::size_t series_length = dlflow::kDefaultSeriesLength;
  dlflow::CatalogConfig cat;
  auto* lambda_opt = gen->add_option("--lambda", lambda, "Flow arrivals per second");
  auto* duration_opt = gen->add_option("--duration", duration, "Duration in seconds");
  auto* schedule_opt = gen->add_option("--schedule", schedule, "Piecewise rate, e.g. 10000:120,70000:120");
  gen->add_option("--seed", seed, "Seed for catalog and arrivals");
  gen->add_option("--out", out, "Output trace (.csv or .bin)")->required();
  gen->add_option("--catalog", catalog_path, "Flow catalog CSV; synthesized when absent");
  gen->add_option("--catalog-out", catalog_out, "Write the catalog used");
  gen->add_option("--popularity-skew", skew, "Zipf exponent over catalog entries");
  gen->add_option("--series-length", series_length, "K used for the series count");
  gen->add_option("--catalog-size", cat.size, "Synthetic catalog entries");
  gen->add_option("--short-fraction", cat.short_fraction, "Share of short-lived flows");
  gen->add_option("--long-max-packets", cat.long_max_packets, "Longest long-lived flow");
  gen->add_option("--label-count", cat.label_count, "Ground-truth classes (0: unlabeled)");
  schedule_opt->excludes(lambda_opt)->excludes(duration_opt);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run a scenario");
  std::string config_path;
  std::string report_path;
  std::string windows_path;
  bool live = false;
  double max_wall_s = 0.0;
  sim->add_option("--config", config_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--report", report_path, "Override the report output path");
  sim->add_option("--windows", windows_path, "Override the windows CSV output path");
  sim->add_flag("--live", live, "Threaded wall-clock run instead of the simulator");
  sim->add_option("--max-wall", max_wall_s, "Live mode: stop dispatching after this many seconds");

  // analyze-prefixes
  auto* ap = app.add_subcommand("analyze-prefixes", "Prefix typology of a labeled series corpus");
  std::string corpus_path;
  std::string trace_path;
  std::size_t dmin = 1;
  std::size_t dmax = dlflow::kDefaultSeriesLength - 1;
  double beta = dlflow::kDefaultToxicBeta;
  std::string weighting = "byFlows";
  std::string ap_out;
  std::string ap_csv;
  auto* corpus_opt = ap->add_option("--corpus", corpus_path, "Corpus CSV feature_1..feature_K,label,flow_count");
  auto* trace_opt = ap->add_option("--trace", trace_path, "Build the corpus from a labeled trace");
  corpus_opt->excludes(trace_opt);
  ap->add_option("--series-length", series_length, "K when reading a trace");
  ap->add_option("--delta-min", dmin, "Smallest prefix length");
  ap->add_option("--delta-max", dmax, "Largest prefix length");
  ap->add_option("--beta", beta, "Toxicity threshold")->check(CLI::Range(0.0, 1.0));
  ap->add_option("--weighting", weighting, "byFlows or bySeries");
  ap->add_option("--out", ap_out, "JSON report path");
  ap->add_option("--csv", ap_csv, "CSV report path");

  // bench
  auto* bn = app.add_subcommand("bench", "Flow-table on_packet throughput at several load factors");
  std::vector<double> loads{0.0, 0.25, 0.5, 0.75, 1.0};
  std::uint32_t records = 1U << 20;
  std::uint32_t buckets = 1U << 18;
  std::size_t ops = 2'000'000;
  std::string bench_out;
  bn->add_option("--loads", loads, "Load factors")->delimiter(',');
  bn->add_option("--records", records, "Data-array capacity");
  bn->add_option("--buckets", buckets, "Primary buckets (power of two)");
  bn->add_option("--ops", ops, "Packets per load factor");
  bn->add_option("--seed", seed, "Key seed");
  bn->add_option("--out", bench_out, "JSON output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*gen) {
      dlflow::GeneratorConfig g;
      g.seed = seed;
      g.popularity_skew = skew;
      if (!schedule.empty()) {
        g.schedule = dlflow::parse_schedule(schedule);
      } else {
        if (lambda_opt->count() == 0) usage_error("--lambda or --schedule is required");
        if (duration_opt->count() == 0) usage_error("--duration is required with --lambda");
        g.schedule = {dlflow::RateSegment{lambda, duration}};
      }
      return gen_trace(g, cat, catalog_path, catalog_out, out, series_length);
    }
    if (*sim) return simulate(config_path, report_path, windows_path, live, max_wall_s);
    if (*ap) {
      if (corpus_path.empty() && trace_path.empty()) usage_error("--corpus or --trace is required");
      return analyze_prefixes(corpus_path, trace_path, series_length, dmin, dmax, beta, weighting, ap_out,
                              ap_csv);
    }
    if (*bn) return bench(loads, records, buckets, ops, seed, bench_out);
  } catch (const dlflow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const dlflow::FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
