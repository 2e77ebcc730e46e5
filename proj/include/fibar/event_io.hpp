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

#ifndef FIBAR__EVENT_IO_HPP_
#define FIBAR__EVENT_IO_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <iterator>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fibar/core.hpp"

//
// EVF1 layout, all fields little endian:
//
//   header (16 bytes): "EVF1" | width u16 | height u16 | 8 zero bytes
//   record  (8 bytes): dt u32 | xp u16 | y u16
//
// dt is the time since the previous record (the first record counts from 0),
// bit 15 of xp is the polarity (1 = ON), bits 0..14 hold x.
//
namespace fibar
{
constexpr size_t kEvfHeaderSize = 16;
constexpr size_t kEvfRecordSize = 8;

std::array<uint8_t, kEvfHeaderSize> encode_evf_header(const SensorGeometry & geom);
// throws FormatError on bad magic, nonzero reserved bytes or degenerate geometry
SensorGeometry decode_evf_header(std::span<const uint8_t> bytes);

// Polymorphic single pass source, used by the CLI where the input format is
// only known at runtime. The hot loops use the concrete decoders directly.
class EventSource
{
public:
  virtual ~EventSource() = default;
  virtual const SensorGeometry & geometry() const = 0;
  // returns false at end of stream
  virtual bool next(Event & e) = 0;
};

// Events that are already decoded, e.g. from the synthetic sensor.
class SpanSource : public EventSource
{
public:
  SpanSource(const SensorGeometry & geom, std::span<const Event> events)
  : geometry_(geom), events_(events)
  {
  }
  const SensorGeometry & geometry() const override { return (geometry_); }
  bool next(Event & e) override
  {
    if (idx_ == events_.size()) {
      return (false);
    }
    e = events_[idx_++];
    return (true);
  }

private:
  SensorGeometry geometry_;
  std::span<const Event> events_;
  size_t idx_{0};
};

// Decodes an EVF1 image that is already in memory. No allocation per event.
class EvfDecoder : public EventSource
{
public:
  explicit EvfDecoder(std::span<const uint8_t> bytes);
  const SensorGeometry & geometry() const override { return (geometry_); }
  bool next(Event & e) override { return (next_inline(e)); }
  inline bool next_inline(Event & e);
  uint64_t count() const { return (count_); }

private:
  [[noreturn]] void throw_truncated() const;
  [[noreturn]] void throw_out_of_bounds(const Event & e) const;
  std::span<const uint8_t> bytes_;
  size_t pos_{kEvfHeaderSize};
  SensorGeometry geometry_;
  uint64_t t_{0};
  uint64_t count_{0};
};

// Streams EVF1 from an istream through a fixed size buffer.
class EvfReader : public EventSource
{
public:
  explicit EvfReader(std::istream & in, size_t buffer_bytes = 1 << 16);
  const SensorGeometry & geometry() const override { return (geometry_); }
  bool next(Event & e) override;
  uint64_t count() const { return (count_); }

private:
  bool refill();
  std::istream & in_;
  std::vector<uint8_t> buf_;
  size_t pos_{0};
  size_t end_{0};
  uint64_t offset_{kEvfHeaderSize};  // file offset of buf_[0]
  SensorGeometry geometry_;
  uint64_t t_{0};
  uint64_t count_{0};
};

class EvfWriter
{
public:
  EvfWriter(std::ostream & out, const SensorGeometry & geom);
  ~EvfWriter();
  EvfWriter(const EvfWriter &) = delete;
  EvfWriter & operator=(const EvfWriter &) = delete;
  // throws OrderError on time regression, RangeError if dt needs more than 32 bits,
  // DataError if the pixel lies outside the sensor
  void write(const Event & e);
  void flush();
  uint64_t count() const { return (count_); }

private:
  std::ostream & out_;
  SensorGeometry geometry_;
  std::vector<uint8_t> buf_;
  uint64_t t_{0};
  uint64_t count_{0};
};

// CSV lines "t_us,x,y,p" with p in {0, 1}; the header line is optional.
// The file carries no geometry, so bounds are checked only when one is given.
class CsvReader : public EventSource
{
public:
  explicit CsvReader(std::istream & in, std::optional<SensorGeometry> geom = std::nullopt);
  const SensorGeometry & geometry() const override { return (geometry_); }
  bool next(Event & e) override;
  uint64_t line() const { return (line_); }

private:
  std::istream & in_;
  std::optional<SensorGeometry> bounds_;
  SensorGeometry geometry_;
  std::string text_;
  uint64_t line_{0};
  uint64_t t_{0};
};

class CsvWriter
{
public:
  explicit CsvWriter(std::ostream & out, bool header = true);
  void write(const Event & e);
  uint64_t count() const { return (count_); }

private:
  std::ostream & out_;
  uint64_t t_{0};
  uint64_t count_{0};
};

struct EventStream
{
  SensorGeometry geometry;
  std::vector<Event> events;
};

EventStream read_stream(std::istream & in);
uint64_t write_stream(const SensorGeometry & geom, std::span<const Event> events, std::ostream & out);
std::vector<Event> read_csv(std::istream & in, std::optional<SensorGeometry> geom = std::nullopt);
uint64_t write_csv(std::span<const Event> events, std::ostream & out, bool header = true);

enum class EventFormat { Evf, Csv };
// ".csv" selects CSV, anything else is EVF1
EventFormat format_from_path(const std::string & path);

// Owns the file stream together with the reader. CSV input needs the geometry
// from the caller.
std::unique_ptr<EventSource> open_event_file(
  const std::string & path, std::optional<SensorGeometry> csv_geometry = std::nullopt);

// Minimal input iterator so sources work with range-for:
//   for (const Event & e : events_of(reader)) ...
template <class Source>
class EventRange
{
public:
  class iterator
  {
  public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Event;
    using difference_type = std::ptrdiff_t;
    using pointer = const Event *;
    using reference = const Event &;
    iterator() = default;
    explicit iterator(Source * src) : src_(src) { ++(*this); }
    reference operator*() const { return (event_); }
    pointer operator->() const { return (&event_); }
    iterator & operator++()
    {
      if (src_ && !src_->next(event_)) {
        src_ = nullptr;
      }
      return (*this);
    }
    void operator++(int) { ++(*this); }
    bool operator==(const iterator & o) const { return (src_ == o.src_); }

  private:
    Source * src_{nullptr};
    Event event_;
  };
  explicit EventRange(Source & src) : src_(&src) {}
  iterator begin() { return (iterator(src_)); }
  iterator end() { return (iterator()); }

private:
  Source * src_;
};

template <class Source>
EventRange<Source> events_of(Source & src)
{
  return (EventRange<Source>(src));
}

// ---------------- inline implementation

namespace detail
{
inline uint16_t load_u16(const uint8_t * p)
{
  return (static_cast<uint16_t>(p[0] | (static_cast<uint16_t>(p[1]) << 8)));
}
inline uint32_t load_u32(const uint8_t * p)
{
  return (
    static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
    (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24));
}
inline void store_u16(uint8_t * p, uint16_t v)
{
  p[0] = static_cast<uint8_t>(v);
  p[1] = static_cast<uint8_t>(v >> 8);
}
inline void store_u32(uint8_t * p, uint32_t v)
{
  p[0] = static_cast<uint8_t>(v);
  p[1] = static_cast<uint8_t>(v >> 8);
  p[2] = static_cast<uint8_t>(v >> 16);
  p[3] = static_cast<uint8_t>(v >> 24);
}
// decodes one record relative to the running timestamp t
inline void decode_record(const uint8_t * p, uint64_t & t, Event & e)
{
  t += load_u32(p);
  const uint16_t xp = load_u16(p + 4);
  e.t = t;
  e.x = xp & 0x7FFF;
  e.y = load_u16(p + 6);
  e.polarity = (xp & 0x8000) ? 1 : -1;
}
}  // namespace detail

inline bool EvfDecoder::next_inline(Event & e)
{
  if (pos_ + kEvfRecordSize > bytes_.size()) {
    if (pos_ != bytes_.size()) {
      throw_truncated();
    }
    return (false);
  }
  detail::decode_record(bytes_.data() + pos_, t_, e);
  if (e.x >= geometry_.width || e.y >= geometry_.height) {
    throw_out_of_bounds(e);
  }
  pos_ += kEvfRecordSize;
  count_++;
  return (true);
}

}  // namespace fibar
#endif  // FIBAR__EVENT_IO_HPP_
