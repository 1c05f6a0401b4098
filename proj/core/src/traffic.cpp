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

#include "dlflow/traffic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace dlflow {

bool is_valid_shape(const FlowShape& shape) {
  if (shape.packets.empty()) return false;
  if (shape.packets.front().gap_us != 0) return false;
  if (shape.packets.front().direction != Direction::kForward) return false;
  return std::all_of(shape.packets.begin(), shape.packets.end(),
                     [](const PacketShape& p) { return p.gap_us >= 0 && p.length >= 1; });
}

void to_json(nlohmann::json& j, const CatalogConfig& c) {
  j = nlohmann::json{{"size", c.size},
                     {"short_fraction", c.short_fraction},
                     {"short_min_packets", c.short_min_packets},
                     {"short_max_packets", c.short_max_packets},
                     {"long_min_packets", c.long_min_packets},
                     {"long_max_packets", c.long_max_packets},
                     {"min_length", c.min_length},
                     {"max_length", c.max_length},
                     {"gap_mean_us", c.gap_mean_us},
                     {"backward_probability", c.backward_probability},
                     {"common_lengths", c.common_lengths},
                     {"common_length_probability", c.common_length_probability},
                     {"label_count", c.label_count}};
}

void from_json(const nlohmann::json& j, CatalogConfig& c) {
  auto opt = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  opt("size", c.size);
  opt("short_fraction", c.short_fraction);
  opt("short_min_packets", c.short_min_packets);
  opt("short_max_packets", c.short_max_packets);
  opt("long_min_packets", c.long_min_packets);
  opt("long_max_packets", c.long_max_packets);
  opt("min_length", c.min_length);
  opt("max_length", c.max_length);
  opt("gap_mean_us", c.gap_mean_us);
  opt("backward_probability", c.backward_probability);
  opt("common_lengths", c.common_lengths);
  opt("common_length_probability", c.common_length_probability);
  opt("label_count", c.label_count);
}

Catalog make_synthetic_catalog(const CatalogConfig& c, std::uint64_t seed) {
  if (c.size == 0) throw std::invalid_argument("catalog size must be positive");
  if (c.short_min_packets < 1 || c.short_min_packets > c.short_max_packets ||
      c.long_min_packets < 1 || c.long_min_packets > c.long_max_packets) {
    throw std::invalid_argument("invalid packet count ranges");
  }
  if (c.min_length < 1 || c.min_length > c.max_length) throw std::invalid_argument("invalid length range");
  if (c.common_length_probability > 0.0 && c.common_lengths.empty()) {
    throw std::invalid_argument("common_length_probability needs common_lengths");
  }

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution is_short(c.short_fraction);
  std::uniform_int_distribution<std::uint32_t> short_count(c.short_min_packets, c.short_max_packets);
  std::uniform_int_distribution<std::uint32_t> long_count(c.long_min_packets, c.long_max_packets);
  std::uniform_int_distribution<std::uint32_t> length(c.min_length, c.max_length);
  std::bernoulli_distribution backward(c.backward_probability);
  std::bernoulli_distribution common(c.common_length_probability);
  std::uniform_int_distribution<std::size_t> common_pick(0, c.common_lengths.empty() ? 0 : c.common_lengths.size() - 1);
  std::exponential_distribution<double> gap(1.0 / c.gap_mean_us);
  std::uniform_int_distribution<std::uint32_t> label(0, c.label_count == 0 ? 0 : c.label_count - 1);

  Catalog catalog;
  catalog.shapes.reserve(c.size);
  for (std::size_t i = 0; i < c.size; ++i) {
    FlowShape shape;
    const std::uint32_t n = is_short(rng) ? short_count(rng) : long_count(rng);
    shape.packets.reserve(n);
    for (std::uint32_t p = 0; p < n; ++p) {
      PacketShape ps;
      ps.gap_us = p == 0 ? 0 : static_cast<std::int64_t>(gap(rng));
      ps.length = common(rng) ? c.common_lengths[common_pick(rng)]
                              : static_cast<std::uint16_t>(length(rng));
      ps.direction = (p == 0 || !backward(rng)) ? Direction::kForward : Direction::kBackward;
      shape.packets.push_back(ps);
    }
    if (c.label_count > 0) shape.label = Label(label(rng));
    catalog.shapes.push_back(std::move(shape));
  }
  return catalog;
}

std::vector<PacketRecord> collect(TraceSource& source) {
  std::vector<PacketRecord> out;
  while (auto p = source.next()) out.push_back(*p);
  return out;
}

std::vector<RateSegment> parse_schedule(std::string_view text) {
  std::vector<RateSegment> out;
  while (!text.empty()) {
    const std::size_t comma = text.find(',');
    std::string_view item = text.substr(0, comma);
    const std::size_t colon = item.find(':');
    if (colon == std::string_view::npos) {
      throw std::invalid_argument("schedule segment '" + std::string(item) + "' is not rate:duration");
    }
    RateSegment seg;
    try {
      seg.flows_per_second = std::stod(std::string(item.substr(0, colon)));
      seg.duration_s = std::stod(std::string(item.substr(colon + 1)));
    } catch (const std::exception&) {
      throw std::invalid_argument("schedule segment '" + std::string(item) + "' is not numeric");
    }
    if (seg.flows_per_second < 0 || seg.duration_s < 0) {
      throw std::invalid_argument("schedule values must be non-negative");
    }
    out.push_back(seg);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

PoissonTraceGenerator::PoissonTraceGenerator(GeneratorConfig config,
                                             std::shared_ptr<const Catalog> catalog)
    : config_(std::move(config)), catalog_(std::move(catalog)), rng_(config_.seed) {
  if (!catalog_ || catalog_->shapes.empty()) throw std::invalid_argument("catalog is empty");
  for (const FlowShape& s : catalog_->shapes) {
    if (!is_valid_shape(s)) throw std::invalid_argument("catalog contains an invalid flow shape");
  }
  if (config_.popularity_skew > 0.0) {
    popularity_cdf_.resize(catalog_->shapes.size());
    double total = 0.0;
    for (std::size_t i = 0; i < popularity_cdf_.size(); ++i) {
      total += 1.0 / std::pow(static_cast<double>(i + 1), config_.popularity_skew);
      popularity_cdf_[i] = total;
    }
    for (double& v : popularity_cdf_) v /= total;
  }
  advance_arrival();
}

FiveTuple PoissonTraceGenerator::tuple_for_flow(std::uint64_t flow_id) {
  static constexpr std::uint16_t kServerPorts[] = {443, 80, 8080, 53, 993, 5222, 1935, 3478};
  const std::uint64_t h = splitmix(flow_id);
  FiveTuple t;
  t.src_ip = 0x0A000000U | static_cast<std::uint32_t>((flow_id >> 16) & 0xffffffU);
  t.src_port = static_cast<std::uint16_t>(flow_id & 0xffffU);
  t.dst_ip = 0xAC100000U | static_cast<std::uint32_t>(h & 0xfffffU);
  t.dst_port = kServerPorts[(h >> 20) % std::size(kServerPorts)];
  t.proto = (t.dst_port == 53 || t.dst_port == 3478) ? 17 : 6;
  return t;
}

void PoissonTraceGenerator::advance_arrival() {
  next_arrival_.reset();
  while (segment_ < config_.schedule.size()) {
    const RateSegment& seg = config_.schedule[segment_];
    const double seg_end = segment_start_us_ + seg.duration_s * 1e6;
    if (seg.flows_per_second > 0.0) {
      std::exponential_distribution<double> gap(seg.flows_per_second / 1e6);
      const double t = clock_us_ + gap(rng_);
      if (t < seg_end) {
        clock_us_ = t;
        next_arrival_ = static_cast<std::int64_t>(t);
        return;
      }
    }
    // Memoryless: restart the clock at the segment boundary.
    clock_us_ = seg_end;
    segment_start_us_ = seg_end;
    ++segment_;
  }
}

std::uint32_t PoissonTraceGenerator::pick_shape() {
  const std::size_t n = catalog_->shapes.size();
  if (popularity_cdf_.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    return static_cast<std::uint32_t>(pick(rng_));
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = u(rng_);
  auto it = std::lower_bound(popularity_cdf_.begin(), popularity_cdf_.end(), x);
  return static_cast<std::uint32_t>(std::min<std::size_t>(it - popularity_cdf_.begin(), n - 1));
}

void PoissonTraceGenerator::sift_top() {
  const Later later;
  const std::size_t n = active_.size();
  const ActiveFlow moving = active_[0];
  std::size_t i = 0;
  for (;;) {
    std::size_t child = 2 * i + 1;
    if (child >= n) break;
    if (child + 1 < n && later(active_[child], active_[child + 1])) ++child;
    if (!later(moving, active_[child])) break;
    active_[i] = active_[child];
    i = child;
  }
  active_[i] = moving;
}

std::optional<PacketRecord> PoissonTraceGenerator::next() {
  while (next_arrival_ && (active_.empty() || *next_arrival_ <= active_.front().next_ts)) {
    active_.push_back(ActiveFlow{*next_arrival_, next_flow_id_++, pick_shape(), 0});
    std::push_heap(active_.begin(), active_.end(), Later{});
    advance_arrival();
  }
  if (active_.empty()) return std::nullopt;

  ActiveFlow& f = active_.front();
  const FlowShape& shape = catalog_->shapes[f.shape];
  const PacketShape& ps = shape.packets[f.packet];
  const FiveTuple fwd = tuple_for_flow(f.flow_id);

  PacketRecord pkt;
  pkt.flow = ps.direction == Direction::kForward ? fwd : reversed(fwd);
  pkt.ts = SimTime(f.next_ts);
  pkt.length = ps.length;
  pkt.direction = ps.direction;
  pkt.label = shape.label;

  if (++f.packet < shape.packets.size()) {
    f.next_ts += shape.packets[f.packet].gap_us;
    sift_top();
  } else {
    std::pop_heap(active_.begin(), active_.end(), Later{});
    active_.pop_back();
  }
  return pkt;
}

std::unique_ptr<PoissonTraceGenerator> generate_trace(double flows_per_second, double duration_s,
                                                      std::shared_ptr<const Catalog> catalog,
                                                      std::uint64_t seed) {
  if (!(flows_per_second > 0.0)) throw std::invalid_argument("flow arrival rate must be positive");
  return piecewise_rate({RateSegment{flows_per_second, duration_s}}, std::move(catalog), seed);
}

std::unique_ptr<PoissonTraceGenerator> piecewise_rate(std::vector<RateSegment> schedule,
                                                      std::shared_ptr<const Catalog> catalog,
                                                      std::uint64_t seed) {
  GeneratorConfig config;
  config.schedule = std::move(schedule);
  config.seed = seed;
  return std::make_unique<PoissonTraceGenerator>(std::move(config), std::move(catalog));
}

Dispatcher::Dispatcher(std::size_t pipelines) : pipelines_(pipelines) {
  if (pipelines_ == 0) throw std::invalid_argument("need at least one pipeline");
}

std::size_t Dispatcher::dispatch(const PacketRecord& pkt) const {
  return symmetric_rss_hash(pkt.flow) % pipelines_;
}

void to_json(nlohmann::json& j, const TraceStats& s) {
  j = nlohmann::json{{"volume_bytes", s.volume_bytes},
                     {"packets", s.packets},
                     {"flows", s.flows},
                     {"series", s.series},
                     {"long_lived_flows", s.long_lived_flows},
                     {"duration_s", s.duration_s},
                     {"link_load_bps", s.link_load_bps},
                     {"mpps", s.mpps},
                     {"kflows_per_s", s.kflows_per_s},
                     {"kclass_per_s", s.kclass_per_s}};
}

std::optional<PacketRecord> StatsTap::next() {
  auto pkt = inner_->next();
  if (!pkt) return pkt;
  ++packets_;
  bytes_ += pkt->length;
  if (first_ts_ < 0) first_ts_ = pkt->ts.count();
  last_ts_ = pkt->ts.count();
  ++per_flow_[canonicalize(pkt->flow).tuple];
  return pkt;
}

TraceStats StatsTap::finish(double link_load_bps) const {
  TraceStats s;
  s.volume_bytes = bytes_;
  s.packets = packets_;
  s.flows = per_flow_.size();
  for (const auto& [key, count] : per_flow_) {
    if (count >= k_) ++s.series;
    if (is_long_lived(count)) ++s.long_lived_flows;
  }
  s.duration_s = first_ts_ < 0 ? 0.0 : static_cast<double>(last_ts_ - first_ts_) / 1e6;
  s.link_load_bps = link_load_bps;
  if (s.duration_s > 0.0) {
    double scale = 1.0;
    if (link_load_bps > 0.0 && bytes_ > 0) {
      scale = link_load_bps / (static_cast<double>(bytes_) * 8.0 / s.duration_s);
    }
    s.mpps = static_cast<double>(s.packets) / s.duration_s * scale / 1e6;
    s.kflows_per_s = static_cast<double>(s.flows) / s.duration_s * scale / 1e3;
    s.kclass_per_s = static_cast<double>(s.series) / s.duration_s * scale / 1e3;
  }
  return s;
}

TraceStats compute_stats(TraceSource& trace, std::size_t k, double link_load_bps) {
  StatsTap tap(trace, k);
  while (tap.next()) {
  }
  return tap.finish(link_load_bps);
}

}  // namespace dlflow
