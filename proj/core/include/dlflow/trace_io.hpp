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
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>

#include "dlflow/traffic.hpp"

namespace dlflow {

/// Malformed trace, catalog or corpus input. `line()` is 1-based, 0 when the
/// error is not tied to a line.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::size_t line, const std::string& what)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline constexpr const char* kTraceCsvHeader =
    "ts_us,src_ip,dst_ip,src_port,dst_port,proto,length,direction,label";
inline constexpr char kTraceBinaryMagic[8] = {'D', 'L', 'F', 'T', 'R', 'C', '0', '1'};
inline constexpr std::size_t kTraceBinaryRecordSize = 28;

enum class TraceFormat { kCsv, kBinary };

/// .bin selects the binary format, anything else CSV.
TraceFormat format_for_path(const std::string& path);

std::uint64_t write_trace_csv(std::ostream& out, TraceSource& trace);
std::uint64_t write_trace_binary(std::ostream& out, TraceSource& trace);
std::uint64_t write_trace(const std::string& path, TraceSource& trace);

class CsvTraceReader final : public TraceSource {
 public:
  explicit CsvTraceReader(std::istream& in) : in_(&in) {}
  std::optional<PacketRecord> next() override;

 private:
  std::istream* in_;
  std::size_t line_no_ = 0;
  std::int64_t last_ts_ = 0;
};

class BinaryTraceReader final : public TraceSource {
 public:
  explicit BinaryTraceReader(std::istream& in);
  std::optional<PacketRecord> next() override;

 private:
  std::istream* in_;
  std::uint64_t record_no_ = 0;
};

/// Opens a trace file and owns the underlying stream.
std::unique_ptr<TraceSource> open_trace(const std::string& path);

PacketRecord parse_trace_csv_line(std::string_view line, std::size_t line_no);

/// Catalog CSV: header "label,packets"; packets are ';'-separated
/// gap_us:length:direction triples. The label column may be empty.
void write_catalog_csv(std::ostream& out, const Catalog& catalog);
Catalog read_catalog_csv(std::istream& in);

}  // namespace dlflow
