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

#include "dlflow/prefixlab.hpp"

#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "dlflow/trace_io.hpp"
#include "dlflow/traffic.hpp"

namespace dlflow {

namespace {

template <typename T>
T parse_field(std::string_view text, std::size_t line, const char* what) {
  T value{};
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw FormatError(line, std::string("bad ") + what + " '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t comma = line.find(',', pos);
    out.push_back(line.substr(pos, comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

bool same_prefix(const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b,
                 std::size_t delta) {
  for (std::size_t i = 0; i < delta; ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

std::size_t series_length(const Corpus& corpus) {
  if (corpus.empty()) return 0;
  const std::size_t k = corpus.front().features.size();
  for (const CorpusEntry& e : corpus) {
    if (e.features.size() != k) throw std::invalid_argument("corpus series lengths differ");
  }
  return k;
}

void add_weight(TypologyRow& row, PrefixClass c, std::uint64_t w) {
  row.total_weight += w;
  switch (c.type) {
    case PrefixType::kNonProfitable: row.non_profitable += w; break;
    case PrefixType::kSafe: row.safe += w; break;
    case PrefixType::kDangerous:
      row.dangerous += w;
      if (c.toxic) row.toxic += w;
      break;
  }
}

void add_prefix(TypologyRow& row, PrefixClass c) {
  ++row.prefixes;
  switch (c.type) {
    case PrefixType::kNonProfitable: ++row.non_profitable_prefixes; break;
    case PrefixType::kSafe: ++row.safe_prefixes; break;
    case PrefixType::kDangerous:
      ++row.dangerous_prefixes;
      if (c.toxic) ++row.toxic_prefixes;
      break;
  }
}

}  // namespace

Corpus read_corpus_csv(std::istream& in) {
  Corpus corpus;
  std::map<std::vector<std::int32_t>, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  std::size_t k = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (line.rfind("feature_1", 0) == 0) continue;
    const auto fields = split(line);
    if (fields.size() < 3) throw FormatError(line_no, "expected features, label and flow_count");
    const std::size_t n = fields.size() - 2;
    if (k == 0) k = n;
    if (n != k) {
      throw FormatError(line_no, "expected " + std::to_string(k) + " features, got " + std::to_string(n));
    }
    CorpusEntry e;
    e.features.reserve(n);
    for (std::size_t i = 0; i < n; ++i) e.features.push_back(parse_field<std::int32_t>(fields[i], line_no, "feature"));
    e.label = Label(parse_field<std::uint32_t>(fields[n], line_no, "label"));
    e.flow_count = parse_field<std::uint64_t>(fields[n + 1], line_no, "flow_count");
    if (e.flow_count == 0) throw FormatError(line_no, "flow_count must be positive");
    auto [it, inserted] = seen.emplace(e.features, corpus.size());
    if (inserted) {
      corpus.push_back(std::move(e));
      continue;
    }
    CorpusEntry& prev = corpus[it->second];
    if (prev.label != e.label) throw FormatError(line_no, "series repeated with a different label");
    prev.flow_count += e.flow_count;
  }
  return corpus;
}

void write_corpus_csv(std::ostream& out, const Corpus& corpus) {
  const std::size_t k = series_length(corpus);
  for (std::size_t i = 1; i <= k; ++i) out << "feature_" << i << ',';
  out << "label,flow_count\n";
  for (const CorpusEntry& e : corpus) {
    for (std::int32_t f : e.features) out << f << ',';
    out << e.label.class_id() << ',' << e.flow_count << '\n';
  }
}

Corpus corpus_from_trace(TraceSource& trace, std::size_t k) {
  struct Partial {
    bool initiator_is_src = true;
    std::vector<std::int32_t> features;
    std::optional<Label> label;
  };
  std::map<FiveTuple, Partial> flows;
  Corpus corpus;
  std::map<std::vector<std::int32_t>, std::size_t> seen;
  while (auto pkt = trace.next()) {
    const CanonicalTuple c = canonicalize(pkt->flow);
    auto [it, fresh] = flows.try_emplace(c.tuple);
    Partial& p = it->second;
    if (fresh) p.initiator_is_src = c.direction == Direction::kForward;
    if (p.features.size() >= k) continue;
    const bool from_initiator = (c.direction == Direction::kForward) == p.initiator_is_src;
    p.features.push_back(feature_of(pkt->length, from_initiator ? Direction::kForward : Direction::kBackward));
    if (pkt->label) p.label = pkt->label;
    if (p.features.size() < k || !p.label) continue;
    auto [pos, inserted] = seen.emplace(p.features, corpus.size());
    if (inserted) {
      corpus.push_back(CorpusEntry{p.features, *p.label, 1});
    } else if (corpus[pos->second].label != *p.label) {
      throw std::invalid_argument("one series observed with two labels");
    } else {
      ++corpus[pos->second].flow_count;
    }
  }
  return corpus;
}

const char* to_string(PrefixType t) {
  switch (t) {
    case PrefixType::kNonProfitable: return "non_profitable";
    case PrefixType::kSafe: return "safe";
    case PrefixType::kDangerous: return "dangerous";
  }
  return "unknown";
}

CorpusIndex::CorpusIndex(const Corpus& corpus, std::size_t delta) : corpus_(&corpus), delta_(delta) {
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& f = corpus[i].features;
    if (f.size() < delta) throw std::invalid_argument("series shorter than the prefix length");
    Members& m = groups_[Prefix{{f.begin(), f.begin() + static_cast<std::ptrdiff_t>(delta)}}];
    m.series.push_back(i);
    m.flows += corpus[i].flow_count;
    total_flows_ += corpus[i].flow_count;
  }
}

const CorpusIndex::Members* CorpusIndex::find(const Prefix& sigma) const {
  auto it = groups_.find(sigma);
  return it == groups_.end() ? nullptr : &it->second;
}

namespace {

PrefixClass classify_members(const CorpusIndex::Members& m, const Corpus& corpus, double beta) {
  if (m.series.size() == 1) return {PrefixType::kNonProfitable, false};
  std::unordered_map<std::uint32_t, std::uint64_t> per_label;
  for (std::size_t i : m.series) per_label[corpus[i].label.class_id()] += corpus[i].flow_count;
  if (per_label.size() == 1) return {PrefixType::kSafe, false};
  std::uint64_t top = 0;
  for (const auto& [label, flows] : per_label) top = std::max(top, flows);
  const double share = static_cast<double>(top) / static_cast<double>(m.flows);
  return {PrefixType::kDangerous, share < beta};
}

}  // namespace

std::optional<PrefixClass> classify_prefix(const Prefix& sigma, const CorpusIndex& index, double beta) {
  const CorpusIndex::Members* m = index.find(sigma);
  if (m == nullptr) return std::nullopt;
  return classify_members(*m, index.corpus(), beta);
}

const char* to_string(Weighting w) { return w == Weighting::kBySeries ? "bySeries" : "byFlows"; }

std::optional<Weighting> parse_weighting(std::string_view text) {
  if (text == "bySeries" || text == "series") return Weighting::kBySeries;
  if (text == "byFlows" || text == "flows") return Weighting::kByFlows;
  return std::nullopt;
}

TypologyReport typology_report(const Corpus& corpus, std::size_t delta_min, std::size_t delta_max,
                               double beta, Weighting weighting) {
  TypologyReport report;
  report.weighting = weighting;
  report.beta = beta;
  const std::size_t k = series_length(corpus);
  for (std::size_t delta = std::max<std::size_t>(delta_min, 1); delta <= std::min(delta_max, k); ++delta) {
    const CorpusIndex index(corpus, delta);
    TypologyRow row;
    row.delta = delta;
    for (const auto& [sigma, m] : index.groups()) {
      const PrefixClass c = classify_members(m, corpus, beta);
      add_prefix(row, c);
      add_weight(row, c, weighting == Weighting::kBySeries ? m.series.size() : m.flows);
    }
    report.rows.push_back(row);
  }
  return report;
}

TypologyRow brute_force_recount(const Corpus& corpus, std::size_t delta, double beta,
                                Weighting weighting) {
  TypologyRow row;
  row.delta = delta;
  const std::size_t n = corpus.size();
  std::vector<char> done(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (done[i]) continue;
    // Members of this prefix, found by comparing against every later series.
    std::vector<std::size_t> members{i};
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!done[j] && same_prefix(corpus[i].features, corpus[j].features, delta)) members.push_back(j);
    }
    std::uint64_t flows = 0;
    bool one_label = true;
    for (std::size_t j : members) {
      done[j] = 1;
      flows += corpus[j].flow_count;
      one_label = one_label && corpus[j].label == corpus[i].label;
    }
    PrefixClass c;
    if (members.size() == 1) {
      c = {PrefixType::kNonProfitable, false};
    } else if (one_label) {
      c = {PrefixType::kSafe, false};
    } else {
      std::uint64_t top = 0;
      for (std::size_t a : members) {
        std::uint64_t same = 0;
        for (std::size_t b : members) {
          if (corpus[b].label == corpus[a].label) same += corpus[b].flow_count;
        }
        top = std::max(top, same);
      }
      c = {PrefixType::kDangerous, static_cast<double>(top) / static_cast<double>(flows) < beta};
    }
    add_prefix(row, c);
    for (std::size_t j : members) {
      add_weight(row, c, weighting == Weighting::kBySeries ? 1 : corpus[j].flow_count);
    }
  }
  return row;
}

void to_json(nlohmann::json& j, const TypologyReport& r) {
  j = nlohmann::json{{"weighting", to_string(r.weighting)}, {"beta", r.beta}};
  nlohmann::json rows = nlohmann::json::array();
  for (const TypologyRow& row : r.rows) {
    rows.push_back({{"delta", row.delta},
                    {"prefixes",
                     {{"total", row.prefixes},
                      {"non_profitable", row.non_profitable_prefixes},
                      {"safe", row.safe_prefixes},
                      {"dangerous", row.dangerous_prefixes},
                      {"toxic", row.toxic_prefixes}}},
                    {"total_weight", row.total_weight},
                    {"non_profitable", row.fraction(row.non_profitable)},
                    {"safe", row.fraction(row.safe)},
                    {"dangerous", row.fraction(row.dangerous)},
                    {"toxic", row.fraction(row.toxic)},
                    {"safe_or_likely_good", row.likely_good_fraction()}});
  }
  j["rows"] = rows;
}

std::string typology_csv(const TypologyReport& r) {
  std::ostringstream out;
  out << "# dlflow-typology-v1 weighting=" << to_string(r.weighting) << " beta=" << r.beta << '\n';
  out << "delta,prefixes,total_weight,non_profitable,safe,dangerous,toxic,safe_or_likely_good\n";
  for (const TypologyRow& row : r.rows) {
    out << row.delta << ',' << row.prefixes << ',' << row.total_weight << ','
        << row.fraction(row.non_profitable) << ',' << row.fraction(row.safe) << ','
        << row.fraction(row.dangerous) << ',' << row.fraction(row.toxic) << ','
        << row.likely_good_fraction() << '\n';
  }
  return out.str();
}

}  // namespace dlflow
