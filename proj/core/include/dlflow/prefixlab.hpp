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

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "dlflow/model.hpp"

namespace dlflow {

inline constexpr double kDefaultToxicBeta = 0.7;

/// One distinct labeled series and the number of flows that produced it.
struct CorpusEntry {
  std::vector<std::int32_t> features;
  Label label;
  std::uint64_t flow_count = 1;

  friend bool operator==(const CorpusEntry&, const CorpusEntry&) = default;
};

using Corpus = std::vector<CorpusEntry>;

/// Reads "feature_1,...,feature_K,label,flow_count" rows; an optional header
/// line starting with "feature_1" and '#' comments are skipped. Rows with the
/// same features are merged; conflicting labels for one series and rows of
/// differing length are FormatErrors carrying the line number.
Corpus read_corpus_csv(std::istream& in);
void write_corpus_csv(std::ostream& out, const Corpus& corpus);

class TraceSource;

/// Series of every labeled flow with at least k packets, merged by features.
/// Throws std::invalid_argument when one series carries two labels.
Corpus corpus_from_trace(TraceSource& trace, std::size_t k);

enum class PrefixType { kNonProfitable, kSafe, kDangerous };

const char* to_string(PrefixType t);

struct PrefixClass {
  PrefixType type = PrefixType::kNonProfitable;
  bool toxic = false;  // only ever set for kDangerous

  friend bool operator==(const PrefixClass&, const PrefixClass&) = default;
};

/// D(sigma) for every prefix of one length.
class CorpusIndex {
 public:
  struct Members {
    std::vector<std::size_t> series;  // positions in the corpus
    std::uint64_t flows = 0;
  };

  CorpusIndex(const Corpus& corpus, std::size_t delta);

  std::size_t delta() const { return delta_; }
  const Corpus& corpus() const { return *corpus_; }
  const Members* find(const Prefix& sigma) const;
  const std::unordered_map<Prefix, Members, PrefixHash>& groups() const { return groups_; }
  std::uint64_t total_flows() const { return total_flows_; }

 private:
  const Corpus* corpus_;
  std::size_t delta_;
  std::unordered_map<Prefix, Members, PrefixHash> groups_;
  std::uint64_t total_flows_ = 0;
};

/// Nullopt when sigma has no member series.
std::optional<PrefixClass> classify_prefix(const Prefix& sigma, const CorpusIndex& index,
                                           double beta = kDefaultToxicBeta);

enum class Weighting { kBySeries, kByFlows };

const char* to_string(Weighting w);
std::optional<Weighting> parse_weighting(std::string_view text);

/// Class distribution for one prefix length. Weights count series (each
/// distinct series once) or flows, according to the report's weighting;
/// toxic is a subset of dangerous.
struct TypologyRow {
  std::size_t delta = 0;
  std::uint64_t prefixes = 0;
  std::uint64_t non_profitable_prefixes = 0;
  std::uint64_t safe_prefixes = 0;
  std::uint64_t dangerous_prefixes = 0;
  std::uint64_t toxic_prefixes = 0;
  std::uint64_t total_weight = 0;
  std::uint64_t non_profitable = 0;
  std::uint64_t safe = 0;
  std::uint64_t dangerous = 0;
  std::uint64_t toxic = 0;

  double fraction(std::uint64_t weight) const {
    return total_weight == 0 ? 0.0 : static_cast<double>(weight) / static_cast<double>(total_weight);
  }
  /// Safe, or dangerous with a dominant label of share at least beta.
  double likely_good_fraction() const { return fraction(safe + dangerous - toxic); }

  friend bool operator==(const TypologyRow&, const TypologyRow&) = default;
};

struct TypologyReport {
  Weighting weighting = Weighting::kByFlows;
  double beta = kDefaultToxicBeta;
  std::vector<TypologyRow> rows;

  friend bool operator==(const TypologyReport&, const TypologyReport&) = default;
};

void to_json(nlohmann::json& j, const TypologyReport& r);
std::string typology_csv(const TypologyReport& r);

/// Rows for delta_min..delta_max, skipping lengths above the series length.
/// Empty corpus gives an empty report. Throws std::invalid_argument when the
/// series lengths differ.
TypologyReport typology_report(const Corpus& corpus, std::size_t delta_min, std::size_t delta_max,
                               double beta = kDefaultToxicBeta,
                               Weighting weighting = Weighting::kByFlows);

/// Nested-loop recount of one row; must agree with typology_report.
TypologyRow brute_force_recount(const Corpus& corpus, std::size_t delta, double beta,
                                Weighting weighting);

}  // namespace dlflow
