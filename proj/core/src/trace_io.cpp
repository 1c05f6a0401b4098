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

#include "dlflow/trace_io.hpp"

#include <array>
#include <charconv>
#include <cstring>
#include <sstream>
#include <vector>

namespace dlflow {
namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view text, std::size_t line, const char* field) {
  text = trim(text);
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw FormatError(line, std::string("invalid ") + field + " '" + std::string(text) + "'");
  }
  return value;
}

Direction parse_direction(std::string_view text, std::size_t line) {
  int v = parse_number<int>(text, line, "direction");
  if (v == 1) return Direction::kForward;
  if (v == -1) return Direction::kBackward;
  throw FormatError(line, "direction must be 1 or -1");
}

template <typename T>
void put_le(char* dst, T value) {
  using U = std::make_unsigned_t<T>;
  U u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = static_cast<char>((u >> (8 * i)) & 0xff);
}

template <typename T>
T get_le(const char* src) {
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    u |= static_cast<U>(static_cast<U>(static_cast<unsigned char>(src[i])) << (8 * i));
  }
  return static_cast<T>(u);
}

class FileTrace final : public TraceSource {
 public:
  FileTrace(const std::string& path, TraceFormat format) : file_(path, std::ios::binary) {
    if (!file_) throw std::runtime_error("cannot open trace '" + path + "'");
    if (format == TraceFormat::kBinary) {
      reader_ = std::make_unique<BinaryTraceReader>(file_);
    } else {
      reader_ = std::make_unique<CsvTraceReader>(file_);
    }
  }
  std::optional<PacketRecord> next() override { return reader_->next(); }

 private:
  std::ifstream file_;
  std::unique_ptr<TraceSource> reader_;
};

}  // namespace

TraceFormat format_for_path(const std::string& path) {
  const std::string ext = ".bin";
  if (path.size() >= ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0) {
    return TraceFormat::kBinary;
  }
  return TraceFormat::kCsv;
}

std::uint64_t write_trace_csv(std::ostream& out, TraceSource& trace) {
  out << kTraceCsvHeader << '\n';
  std::uint64_t n = 0;
  while (auto p = trace.next()) {
    out << p->ts.count() << ',' << ip_to_string(p->flow.src_ip) << ','
        << ip_to_string(p->flow.dst_ip) << ',' << p->flow.src_port << ',' << p->flow.dst_port
        << ',' << static_cast<unsigned>(p->flow.proto) << ',' << p->length << ','
        << sign(p->direction) << ',';
    if (p->label) out << p->label->class_id();
    out << '\n';
    ++n;
  }
  return n;
}

std::uint64_t write_trace_binary(std::ostream& out, TraceSource& trace) {
  out.write(kTraceBinaryMagic, sizeof(kTraceBinaryMagic));
  std::array<char, kTraceBinaryRecordSize> rec{};
  std::uint64_t n = 0;
  while (auto p = trace.next()) {
    put_le<std::int64_t>(rec.data() + 0, p->ts.count());
    put_le<std::uint32_t>(rec.data() + 8, p->flow.src_ip);
    put_le<std::uint32_t>(rec.data() + 12, p->flow.dst_ip);
    put_le<std::uint16_t>(rec.data() + 16, p->flow.src_port);
    put_le<std::uint16_t>(rec.data() + 18, p->flow.dst_port);
    rec[20] = static_cast<char>(p->flow.proto);
    rec[21] = static_cast<char>(sign(p->direction));
    put_le<std::uint16_t>(rec.data() + 22, p->length);
    put_le<std::int32_t>(rec.data() + 24,
                         p->label ? static_cast<std::int32_t>(p->label->class_id()) : -1);
    out.write(rec.data(), static_cast<std::streamsize>(rec.size()));
    ++n;
  }
  return n;
}

std::uint64_t write_trace(const std::string& path, TraceSource& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  const std::uint64_t n = format_for_path(path) == TraceFormat::kBinary
                              ? write_trace_binary(out, trace)
                              : write_trace_csv(out, trace);
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
  return n;
}

PacketRecord parse_trace_csv_line(std::string_view line, std::size_t line_no) {
  auto fields = split(line, ',');
  if (fields.size() != 8 && fields.size() != 9) {
    throw FormatError(line_no, "expected 8 or 9 fields, got " + std::to_string(fields.size()));
  }
  PacketRecord p;
  p.ts = SimTime(parse_number<std::int64_t>(fields[0], line_no, "ts_us"));
  if (p.ts.count() < 0) throw FormatError(line_no, "negative timestamp");
  auto src = parse_ip(trim(fields[1]));
  auto dst = parse_ip(trim(fields[2]));
  if (!src) throw FormatError(line_no, "invalid src_ip '" + std::string(fields[1]) + "'");
  if (!dst) throw FormatError(line_no, "invalid dst_ip '" + std::string(fields[2]) + "'");
  p.flow.src_ip = *src;
  p.flow.dst_ip = *dst;
  p.flow.src_port = parse_number<std::uint16_t>(fields[3], line_no, "src_port");
  p.flow.dst_port = parse_number<std::uint16_t>(fields[4], line_no, "dst_port");
  p.flow.proto = parse_number<std::uint8_t>(fields[5], line_no, "proto");
  const auto length = parse_number<std::uint32_t>(fields[6], line_no, "length");
  if (length < 1 || length > kMaxPacketLength) throw FormatError(line_no, "length out of range 1..65535");
  p.length = static_cast<std::uint16_t>(length);
  p.direction = parse_direction(fields[7], line_no);
  if (fields.size() == 9 && !trim(fields[8]).empty()) {
    p.label = Label(parse_number<std::uint32_t>(fields[8], line_no, "label"));
  }
  return p;
}

std::optional<PacketRecord> CsvTraceReader::next() {
  std::string line;
  while (std::getline(*in_, line)) {
    ++line_no_;
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    if (line_no_ == 1 && view.starts_with("ts_us")) continue;
    PacketRecord p = parse_trace_csv_line(view, line_no_);
    if (p.ts.count() < last_ts_) throw FormatError(line_no_, "timestamps must be non-decreasing");
    last_ts_ = p.ts.count();
    return p;
  }
  return std::nullopt;
}

BinaryTraceReader::BinaryTraceReader(std::istream& in) : in_(&in) {
  char magic[sizeof(kTraceBinaryMagic)];
  in_->read(magic, sizeof(magic));
  if (in_->gcount() != static_cast<std::streamsize>(sizeof(magic)) ||
      std::memcmp(magic, kTraceBinaryMagic, sizeof(magic)) != 0) {
    throw FormatError(0, "not a binary trace (bad magic)");
  }
}

std::optional<PacketRecord> BinaryTraceReader::next() {
  std::array<char, kTraceBinaryRecordSize> rec{};
  in_->read(rec.data(), static_cast<std::streamsize>(rec.size()));
  const auto got = in_->gcount();
  if (got == 0) return std::nullopt;
  ++record_no_;
  if (got != static_cast<std::streamsize>(rec.size())) {
    throw FormatError(0, "truncated binary record " + std::to_string(record_no_));
  }
  PacketRecord p;
  p.ts = SimTime(get_le<std::int64_t>(rec.data()));
  p.flow.src_ip = get_le<std::uint32_t>(rec.data() + 8);
  p.flow.dst_ip = get_le<std::uint32_t>(rec.data() + 12);
  p.flow.src_port = get_le<std::uint16_t>(rec.data() + 16);
  p.flow.dst_port = get_le<std::uint16_t>(rec.data() + 18);
  p.flow.proto = static_cast<std::uint8_t>(rec[20]);
  const auto dir = static_cast<std::int8_t>(rec[21]);
  if (dir != 1 && dir != -1) throw FormatError(0, "bad direction in binary record " + std::to_string(record_no_));
  p.direction = static_cast<Direction>(dir);
  p.length = get_le<std::uint16_t>(rec.data() + 22);
  if (p.length == 0) throw FormatError(0, "zero length in binary record " + std::to_string(record_no_));
  const auto label = get_le<std::int32_t>(rec.data() + 24);
  if (label >= 0) p.label = Label(static_cast<std::uint32_t>(label));
  return p;
}

std::unique_ptr<TraceSource> open_trace(const std::string& path) {
  return std::make_unique<FileTrace>(path, format_for_path(path));
}

void write_catalog_csv(std::ostream& out, const Catalog& catalog) {
  out << "label,packets\n";
  for (const FlowShape& s : catalog.shapes) {
    if (s.label) out << s.label->class_id();
    out << ',';
    for (std::size_t i = 0; i < s.packets.size(); ++i) {
      const PacketShape& p = s.packets[i];
      if (i > 0) out << ';';
      out << p.gap_us << ':' << p.length << ':' << sign(p.direction);
    }
    out << '\n';
  }
}

Catalog read_catalog_csv(std::istream& in) {
  Catalog catalog;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    if (line_no == 1 && view.starts_with("label")) continue;
    const std::size_t comma = view.find(',');
    if (comma == std::string_view::npos) throw FormatError(line_no, "expected label,packets");
    FlowShape shape;
    if (auto label_text = trim(view.substr(0, comma)); !label_text.empty()) {
      shape.label = Label(parse_number<std::uint32_t>(label_text, line_no, "label"));
    }
    for (std::string_view triple : split(view.substr(comma + 1), ';')) {
      auto parts = split(triple, ':');
      if (parts.size() != 3) throw FormatError(line_no, "packet entry must be gap_us:length:direction");
      PacketShape p;
      p.gap_us = parse_number<std::int64_t>(parts[0], line_no, "gap_us");
      const auto length = parse_number<std::uint32_t>(parts[1], line_no, "length");
      if (length < 1 || length > kMaxPacketLength) throw FormatError(line_no, "length out of range 1..65535");
      p.length = static_cast<std::uint16_t>(length);
      p.direction = parse_direction(parts[2], line_no);
      shape.packets.push_back(p);
    }
    if (!is_valid_shape(shape)) {
      throw FormatError(line_no, "invalid shape (first gap must be 0, first packet forward, gaps >= 0)");
    }
    catalog.shapes.push_back(std::move(shape));
  }
  if (catalog.shapes.empty()) throw FormatError(0, "catalog has no shapes");
  return catalog;
}

}  // namespace dlflow
