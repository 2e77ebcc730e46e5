// -*-c++-*----------------------------------------------------------------------------------------
// Copyright 2026 The FIBAR Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fibar/event_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "fibar/errors.hpp"

namespace fibar
{
namespace
{
constexpr std::array<uint8_t, 4> kMagic = {'E', 'V', 'F', '1'};
constexpr size_t kWriteBufferRecords = 8192;

void check_event_bounds(const SensorGeometry & geom, const Event & e, uint64_t index)
{
  if (!geom.contains(e.x, e.y)) {
    throw DataError(
      "pixel (" + std::to_string(e.x) + ", " + std::to_string(e.y) + ") outside " +
        std::to_string(geom.width) + "x" + std::to_string(geom.height) + " sensor",
      index);
  }
}

void check_polarity(const Event & e, uint64_t index)
{
  if (e.polarity != 1 && e.polarity != -1) {
    throw DataError("polarity must be -1 or +1", index);
  }
}

// parses an unsigned integer field terminated by `sep` (or end of line for sep == 0)
template <class T>
const char * parse_field(const char * p, const char * end, char sep, T & v, uint64_t line)
{
  while (p < end && *p == ' ') {
    p++;
  }
  auto [q, ec] = std::from_chars(p, end, v);
  if (ec != std::errc() || q == p) {
    throw ParseError("expected unsigned integer field", line);
  }
  while (q < end && (*q == ' ' || *q == '\r')) {
    q++;
  }
  if (sep != 0) {
    if (q >= end || *q != sep) {
      throw ParseError("expected ',' separator", line);
    }
    return (q + 1);
  }
  if (q != end) {
    throw ParseError("trailing characters", line);
  }
  return (q);
}
}  // namespace

std::array<uint8_t, kEvfHeaderSize> encode_evf_header(const SensorGeometry & geom)
{
  geom.validate();
  if (geom.width > 0x7FFF + 1 || geom.height > 0xFFFF) {
    throw RangeError("geometry does not fit the EVF1 header");
  }
  std::array<uint8_t, kEvfHeaderSize> h{};
  std::copy(kMagic.begin(), kMagic.end(), h.begin());
  detail::store_u16(h.data() + 4, static_cast<uint16_t>(geom.width));
  detail::store_u16(h.data() + 6, static_cast<uint16_t>(geom.height));
  return (h);
}

SensorGeometry decode_evf_header(std::span<const uint8_t> bytes)
{
  if (bytes.size() < kEvfHeaderSize) {
    throw TruncationError("EVF1 header truncated", bytes.size());
  }
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw FormatError("bad magic, not an EVF1 file");
  }
  for (size_t i = 8; i < kEvfHeaderSize; i++) {
    if (bytes[i] != 0) {
      throw FormatError("EVF1 reserved header bytes must be zero");
    }
  }
  SensorGeometry g{detail::load_u16(bytes.data() + 4), detail::load_u16(bytes.data() + 6)};
  if (g.width < 2 || g.height < 2) {
    throw FormatError("EVF1 geometry must be at least 2x2");
  }
  return (g);
}

// ---------------- EvfDecoder

EvfDecoder::EvfDecoder(std::span<const uint8_t> bytes)
: bytes_(bytes), geometry_(decode_evf_header(bytes))
{
}

void EvfDecoder::throw_truncated() const
{
  throw TruncationError("truncated EVF1 record", pos_);
}

void EvfDecoder::throw_out_of_bounds(const Event & e) const
{
  check_event_bounds(geometry_, e, count_);
  throw InvariantError("bounds check inconsistent");  // unreachable
}

// ---------------- EvfReader

EvfReader::EvfReader(std::istream & in, size_t buffer_bytes) : in_(in)
{
  std::array<uint8_t, kEvfHeaderSize> h{};
  in_.read(reinterpret_cast<char *>(h.data()), h.size());
  const auto n = static_cast<size_t>(in_.gcount());
  geometry_ = decode_evf_header(std::span<const uint8_t>(h.data(), n));
  buf_.resize(std::max<size_t>(buffer_bytes / kEvfRecordSize, 1) * kEvfRecordSize);
}

bool EvfReader::refill()
{
  // move the partial record (if any) to the front
  const size_t rest = end_ - pos_;
  std::memmove(buf_.data(), buf_.data() + pos_, rest);
  offset_ += pos_;
  pos_ = 0;
  end_ = rest;
  in_.read(reinterpret_cast<char *>(buf_.data() + end_), buf_.size() - end_);
  end_ += static_cast<size_t>(in_.gcount());
  return (end_ - pos_ >= kEvfRecordSize);
}

bool EvfReader::next(Event & e)
{
  if (end_ - pos_ < kEvfRecordSize && !refill()) {
    if (end_ != pos_) {
      throw TruncationError("truncated EVF1 record", offset_ + pos_);
    }
    return (false);
  }
  detail::decode_record(buf_.data() + pos_, t_, e);
  check_event_bounds(geometry_, e, count_);
  pos_ += kEvfRecordSize;
  count_++;
  return (true);
}

// ---------------- EvfWriter

EvfWriter::EvfWriter(std::ostream & out, const SensorGeometry & geom) : out_(out), geometry_(geom)
{
  const auto h = encode_evf_header(geom);
  out_.write(reinterpret_cast<const char *>(h.data()), h.size());
  buf_.reserve(kWriteBufferRecords * kEvfRecordSize);
}

EvfWriter::~EvfWriter()
{
  try {
    flush();
  } catch (...) {
    // destructor must not throw; callers wanting errors call flush() themselves
  }
}

void EvfWriter::write(const Event & e)
{
  check_event_bounds(geometry_, e, count_);
  check_polarity(e, count_);
  if (e.t < t_) {
    throw OrderError(
      "event " + std::to_string(count_) + " goes back in time (" + std::to_string(e.t) + " < " +
      std::to_string(t_) + ")");
  }
  const uint64_t dt = e.t - t_;
  if (dt > std::numeric_limits<uint32_t>::max()) {
    throw RangeError("time gap before event " + std::to_string(count_) + " exceeds 32 bits");
  }
  uint8_t rec[kEvfRecordSize];
  detail::store_u32(rec, static_cast<uint32_t>(dt));
  detail::store_u16(rec + 4, static_cast<uint16_t>(e.x | (e.polarity > 0 ? 0x8000 : 0)));
  detail::store_u16(rec + 6, e.y);
  buf_.insert(buf_.end(), rec, rec + kEvfRecordSize);
  t_ = e.t;
  count_++;
  if (buf_.size() >= kWriteBufferRecords * kEvfRecordSize) {
    flush();
  }
}

void EvfWriter::flush()
{
  if (!buf_.empty()) {
    out_.write(reinterpret_cast<const char *>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
    buf_.clear();
  }
  out_.flush();
  if (!out_) {
    throw Error("write failed");
  }
}

// ---------------- CSV

CsvReader::CsvReader(std::istream & in, std::optional<SensorGeometry> geom)
: in_(in), bounds_(geom), geometry_(geom.value_or(SensorGeometry{}))
{
}

bool CsvReader::next(Event & e)
{
  while (std::getline(in_, text_)) {
    line_++;
    const char * p = text_.data();
    const char * end = p + text_.size();
    while (end > p && (end[-1] == '\r' || end[-1] == ' ')) {
      end--;
    }
    if (p == end) {
      continue;
    }
    if (line_ == 1 && std::string_view(p, end - p) == "t_us,x,y,p") {
      continue;
    }
    uint64_t t = 0;
    uint32_t x = 0;
    uint32_t y = 0;
    uint32_t pol = 0;
    p = parse_field(p, end, ',', t, line_);
    p = parse_field(p, end, ',', x, line_);
    p = parse_field(p, end, ',', y, line_);
    parse_field(p, end, 0, pol, line_);
    if (pol > 1) {
      throw ParseError("polarity must be 0 or 1", line_);
    }
    if (x > 0x7FFF || y > 0xFFFF) {
      throw ParseError("coordinate out of range", line_);
    }
    if (bounds_ && !bounds_->contains(x, y)) {
      throw ParseError("pixel outside sensor geometry", line_);
    }
    if (t < t_) {
      throw ParseError("timestamp goes back in time", line_);
    }
    t_ = t;
    e.t = t;
    e.x = static_cast<uint16_t>(x);
    e.y = static_cast<uint16_t>(y);
    e.polarity = pol ? 1 : -1;
    return (true);
  }
  return (false);
}

CsvWriter::CsvWriter(std::ostream & out, bool header) : out_(out)
{
  if (header) {
    out_ << "t_us,x,y,p\n";
  }
}

void CsvWriter::write(const Event & e)
{
  check_polarity(e, count_);
  if (e.t < t_) {
    throw OrderError("event " + std::to_string(count_) + " goes back in time");
  }
  t_ = e.t;
  out_ << e.t << ',' << e.x << ',' << e.y << ',' << (e.polarity > 0 ? '1' : '0') << '\n';
  count_++;
}

// ---------------- convenience

EventStream read_stream(std::istream & in)
{
  EvfReader reader(in);
  EventStream s;
  s.geometry = reader.geometry();
  Event e;
  while (reader.next(e)) {
    s.events.push_back(e);
  }
  return (s);
}

uint64_t write_stream(const SensorGeometry & geom, std::span<const Event> events, std::ostream & out)
{
  EvfWriter w(out, geom);
  for (const auto & e : events) {
    w.write(e);
  }
  w.flush();
  return (w.count());
}

std::vector<Event> read_csv(std::istream & in, std::optional<SensorGeometry> geom)
{
  CsvReader reader(in, geom);
  std::vector<Event> events;
  Event e;
  while (reader.next(e)) {
    events.push_back(e);
  }
  return (events);
}

uint64_t write_csv(std::span<const Event> events, std::ostream & out, bool header)
{
  CsvWriter w(out, header);
  for (const auto & e : events) {
    w.write(e);
  }
  out.flush();
  return (w.count());
}

EventFormat format_from_path(const std::string & path)
{
  const auto dot = path.rfind('.');
  if (dot != std::string::npos) {
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == "csv") {
      return (EventFormat::Csv);
    }
  }
  return (EventFormat::Evf);
}

namespace
{
template <class Reader>
class FileSource : public EventSource
{
public:
  template <class... Args>
  explicit FileSource(const std::string & path, Args &&... args)
  : file_(open(path)), reader_(file_, std::forward<Args>(args)...)
  {
  }
  const SensorGeometry & geometry() const override { return (reader_.geometry()); }
  bool next(Event & e) override { return (reader_.next(e)); }

private:
  static std::ifstream open(const std::string & path)
  {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
      throw Error("cannot open " + path);
    }
    return (f);
  }
  std::ifstream file_;
  Reader reader_;
};
}  // namespace

std::unique_ptr<EventSource> open_event_file(
  const std::string & path, std::optional<SensorGeometry> csv_geometry)
{
  if (format_from_path(path) == EventFormat::Csv) {
    if (!csv_geometry) {
      throw ParamError("CSV input needs an explicit sensor geometry");
    }
    csv_geometry->validate();
    return (std::make_unique<FileSource<CsvReader>>(path, csv_geometry));
  }
  return (std::make_unique<FileSource<EvfReader>>(path));
}

}  // namespace fibar
