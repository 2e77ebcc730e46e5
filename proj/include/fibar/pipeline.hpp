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

#ifndef FIBAR__PIPELINE_HPP_
#define FIBAR__PIPELINE_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fibar/core.hpp"
#include "fibar/errors.hpp"
#include "fibar/event_io.hpp"
#include "fibar/spatial.hpp"
#include "fibar/temporal.hpp"

namespace fibar
{
struct ScaleMode
{
  enum class Kind { Robust, Fixed };
  Kind kind{Kind::Robust};
  double bound{1.0};  // only used by Fixed: maps [-bound, bound] to [0, 255]

  static ScaleMode robust() { return (ScaleMode{}); }
  static ScaleMode fixed(double a) { return (ScaleMode{Kind::Fixed, a}); }
  std::string to_string() const;
};

// "robust" or "fixed:<a>" with a > 0
ScaleMode parse_scale_mode(const std::string & s);

struct Frame
{
  uint32_t width{0};
  uint32_t height{0};
  std::vector<uint8_t> pixels;  // row major
  uint64_t readout_time{0};     // microseconds
  ScaleMode scale;
  double lo{0};  // brightness mapped to 0
  double hi{0};  // brightness mapped to 255
  bool degenerate{false};  // flat brightness, rendered mid gray

  uint8_t at(uint32_t x, uint32_t y) const { return (pixels[y * width + x]); }
  friend bool operator==(const Frame & a, const Frame & b)
  {
    return (a.width == b.width && a.height == b.height && a.pixels == b.pixels);
  }
};

// Maps the brightness of a state grid to 8 bit gray. Does not modify anything.
Frame render_state(
  std::span<const PixelState> grid, const SensorGeometry & geom, const ScaleMode & mode,
  uint64_t readout_time = 0);

//
// Owns the complete reconstruction state: the per-pixel grid, the spatial
// filter (queue and totals) and an optional relative threshold map.
// process() applies one event, render() reads out an image at any time
// without touching the state.
//
class ReconstructionEngine
{
public:
  ReconstructionEngine(const SensorGeometry & geom, const FilterParams & params, bool strict = false);

  // Relative threshold per pixel, multiplied onto the detrended increment.
  void set_threshold_map(std::vector<float> c_prime);
  void clear_threshold_map() { c_prime_.clear(); }
  bool has_threshold_map() const { return (!c_prime_.empty()); }

  // Out of bounds events are counted and dropped, or throw DataError in strict mode.
  inline void process(const Event & e);

  Frame render(const ScaleMode & mode, uint64_t readout_time = 0) const;

  const SensorGeometry & geometry() const { return (geometry_); }
  const FilterParams & params() const { return (params_); }
  std::span<const PixelState> state() const { return (grid_); }
  const PixelState & pixel(uint32_t x, uint32_t y) const { return (grid_[geometry_.index(x, y)]); }
  bool spatial_enabled() const { return (spatial_.has_value()); }
  // only valid when spatial filtering is enabled
  const SpatialFilter & spatial() const { return (*spatial_); }

  uint64_t events_processed() const { return (processed_); }
  uint64_t events_rejected() const { return (rejected_); }
  uint64_t last_time() const { return (last_t_); }

  // bytes held by the grid, the queue and the threshold map
  size_t memory_bytes() const;
  // value = number of queued events per pixel (image of active pixels)
  std::vector<uint16_t> active_image() const;
  // FNV-1a over the full mutable state, for purity and determinism checks
  uint64_t state_digest() const;

  // instrumentation: indices of pixels going stale are appended here
  void set_stale_log(std::vector<uint32_t> * log) { stale_log_ = log; }
  // benchmark stage isolation
  void set_blur_enabled(bool on);

private:
  [[noreturn]] void reject_strict(const Event & e) const;

  SensorGeometry geometry_;
  FilterParams params_;
  TemporalCoeffs<float> coeffs_;
  std::vector<PixelState> grid_;
  std::optional<SpatialFilter> spatial_;
  std::vector<float> c_prime_;
  std::vector<uint32_t> * stale_log_{nullptr};
  bool strict_;
  uint64_t processed_{0};
  uint64_t rejected_{0};
  uint64_t last_t_{0};
};

inline void ReconstructionEngine::process(const Event & e)
{
  if (e.x >= geometry_.width || e.y >= geometry_.height) {
    if (strict_) {
      reject_strict(e);
    }
    rejected_++;
    return;
  }
  const uint32_t idx = static_cast<uint32_t>(e.y) * geometry_.width + e.x;
  PixelState & s = grid_[idx];
  if (c_prime_.empty()) {
    update_pixel(s, e.polarity, coeffs_);
  } else {
    update_pixel(s, e.polarity, coeffs_, c_prime_[idx]);
  }
  if (spatial_) {
    spatial_->on_event(grid_, e.x, e.y, stale_log_);
  }
  processed_++;
  last_t_ = e.t;
}

// Read-out times: either every 1/fps seconds starting one period after t = 0,
// or an explicit non-decreasing list.
class ReadoutClock
{
public:
  static ReadoutClock from_fps(double fps);
  static ReadoutClock from_times(std::vector<uint64_t> times);

  bool has_next() const { return (explicit_ ? idx_ < times_.size() : true); }
  uint64_t peek() const;
  void advance() { idx_++; }
  bool periodic() const { return (!explicit_); }

private:
  bool explicit_{false};
  double period_us_{0};
  std::vector<uint64_t> times_;
  size_t idx_{0};
};

struct FrameDiagnostics
{
  uint64_t frame_index{0};
  uint64_t readout_time{0};
  uint64_t events{0};
  uint32_t q_target{0};
  double fill_ratio{0};  // 0 while no pixel is active
  uint32_t n_pix_act{0};
  uint32_t n_tiles_act{0};
  uint64_t blur_count{0};
};

FrameDiagnostics diagnostics_of(const ReconstructionEngine & engine, uint64_t frame_index, uint64_t t);

using FrameSink = std::function<void(const Frame &, const FrameDiagnostics &)>;

struct RunOptions
{
  ScaleMode scale;
  // periodic clocks stop at the first read-out at or after the last event
  // unless an explicit end time is given
  std::optional<uint64_t> end_time;
};

struct RunStats
{
  uint64_t frames{0};
  uint64_t events{0};
  uint64_t rejected{0};
};

//
// Streams all events through the engine. A frame for read-out time T is
// rendered from the state before the first event with t >= T is applied.
// Read-out times after the last event render the final state.
//
RunStats run(
  EventSource & source, ReconstructionEngine & engine, ReadoutClock clock, const RunOptions & opt,
  const FrameSink & sink);

// binary PGM (P5, maxval 255)
void write_pgm(const Frame & frame, std::ostream & out);
void write_pgm(const Frame & frame, const std::string & path);
std::string frame_file_name(uint64_t index);  // frame_%06d.pgm

void write_diagnostics_header(std::ostream & out);
void write_diagnostics_row(std::ostream & out, const FrameDiagnostics & d);

}  // namespace fibar
#endif  // FIBAR__PIPELINE_HPP_
