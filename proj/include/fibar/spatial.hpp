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

#ifndef FIBAR__SPATIAL_HPP_
#define FIBAR__SPATIAL_HPP_

#include <cassert>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "fibar/core.hpp"
#include "fibar/temporal.hpp"

namespace fibar
{
struct QueueEntry
{
  uint16_t x;
  uint16_t y;
};
static_assert(sizeof(QueueEntry) == 4);

// FIFO ring of pixel coordinates. Capacity is exact (not rounded up to a
// power of two) so the queue stays within 4 bytes per pixel.
class ActiveQueue
{
public:
  explicit ActiveQueue(uint32_t capacity) : buf_(capacity) {}

  void push(QueueEntry e)
  {
    assert(size_ < buf_.size());
    buf_[tail_] = e;
    if (++tail_ == buf_.size()) {
      tail_ = 0;
    }
    size_++;
  }
  QueueEntry pop()
  {
    assert(size_ > 0);
    const QueueEntry e = buf_[head_];
    if (++head_ == buf_.size()) {
      head_ = 0;
    }
    size_--;
    return (e);
  }
  uint32_t size() const { return (size_); }
  bool empty() const { return (size_ == 0); }
  uint32_t capacity() const { return (static_cast<uint32_t>(buf_.size())); }
  size_t memory_bytes() const { return (buf_.capacity() * sizeof(QueueEntry)); }
  // i = 0 is the oldest entry
  QueueEntry at(uint32_t i) const
  {
    uint64_t k = static_cast<uint64_t>(head_) + i;
    if (k >= buf_.size()) {
      k -= buf_.size();
    }
    return (buf_[k]);
  }

private:
  std::vector<QueueEntry> buf_;
  uint32_t head_{0};
  uint32_t tail_{0};
  uint32_t size_{0};
};

// active pixels / (active tiles * tile area); n_tiles_act must be >= 1
inline Rational fill_ratio(uint32_t n_pix_act, uint32_t n_tiles_act, uint32_t tile_area)
{
  return (Rational{n_pix_act, static_cast<uint64_t>(n_tiles_act) * tile_area});
}

//
// Next target queue length,
//   floor(q * r_target / r_observed)
//     = floor(q * num * n_tiles_act * A / (den * n_pix_act)),
// clamped to [q_min, q_max]. Integer arithmetic only. n_pix_act must be >= 1.
//
inline uint32_t regulate_queue(
  uint64_t q_current, Rational target, uint32_t n_pix_act, uint32_t n_tiles_act,
  uint32_t tile_area, uint32_t q_min, uint32_t q_max)
{
  assert(n_pix_act > 0);
  const uint64_t num = q_current * target.num * n_tiles_act * tile_area;
  const uint64_t den = target.den * n_pix_act;
  const uint64_t q = num / den;
  return (static_cast<uint32_t>(q < q_min ? q_min : (q > q_max ? q_max : q)));
}

// 3x3 binomial kernel [1 2 1] x [1 2 1] / 16. At the border the weights of
// the taps that fall inside the sensor are renormalized to sum to one.
float blur_value(std::span<const PixelState> grid, const SensorGeometry & geom, uint32_t x, uint32_t y);
// sum of the (unnormalized) in-bounds kernel weights at (x, y), 16 in the interior
uint32_t blur_weight_sum(const SensorGeometry & geom, uint32_t x, uint32_t y);

inline float blur_pixel(std::span<PixelState> grid, const SensorGeometry & geom, uint32_t x, uint32_t y)
{
  const float v = blur_value(grid, geom, x, y);
  grid[geom.index(x, y)].l = v;
  return (v);
}

//
// Active pixel tracking and staleness detection. The filter keeps a global
// FIFO of recent events. When the last queued event of a pixel leaves the
// queue the pixel is stale and gets a single blur. The target queue length is
// regulated so the image of active pixels keeps the requested fill ratio over
// the tiles.
//
// Per-pixel counters live in the PixelState grid that is passed in, so the
// filter itself only owns the queue and a few totals.
//
class SpatialFilter
{
public:
  SpatialFilter(const SensorGeometry & geom, const FilterParams & params);

  // To be called after the temporal update of (x, y). Returns the number of
  // pixels that went stale. Their indices are appended to `stale` if given.
  inline uint32_t on_event(
    std::span<PixelState> grid, uint32_t x, uint32_t y, std::vector<uint32_t> * stale = nullptr);

  uint32_t q_target() const { return (q_target_); }
  uint32_t queue_length() const { return (queue_.size()); }
  const ActiveQueue & queue() const { return (queue_); }
  uint32_t n_pix_act() const { return (n_pix_act_); }
  uint32_t n_tiles_act() const { return (n_tiles_act_); }
  uint32_t tile_area() const { return (tile_area_); }
  // undefined (den == 0) while no pixel is active
  Rational observed_fill_ratio() const
  {
    return (fill_ratio(n_pix_act_, n_tiles_act_, tile_area_));
  }
  uint64_t blur_count() const { return (blur_count_); }
  uint64_t stale_count() const { return (stale_count_); }
  // events not enqueued because the pixel's counter was saturated
  uint64_t saturated_count() const { return (saturated_count_); }
  // counter underflows seen in release builds (debug builds assert)
  uint64_t invariant_violations() const { return (invariant_violations_); }
  size_t memory_bytes() const { return (queue_.memory_bytes()); }

  // index of the pixel holding the tile counter for (x, y)
  uint32_t tile_anchor(uint32_t x, uint32_t y) const
  {
    if (tile_shift_ >= 0) {
      return (((y >> tile_shift_) << tile_shift_) * width_ + ((x >> tile_shift_) << tile_shift_));
    }
    return ((y - y % tile_side_) * width_ + (x - x % tile_side_));
  }

  // stage isolation for the benchmark: track staleness but skip the blur
  void set_blur_enabled(bool on) { blur_enabled_ = on; }

private:
  inline void activate(std::span<PixelState> grid, uint32_t x, uint32_t y);
  inline void deactivate(std::span<PixelState> grid, uint32_t x, uint32_t y);
  inline void regulate();

  SensorGeometry geometry_;
  uint32_t width_;
  uint32_t tile_side_;
  int tile_shift_{-1};
  uint32_t tile_area_;
  Rational target_;
  uint32_t q_min_;
  uint32_t q_max_;
  uint32_t q_target_;
  uint32_t regulate_every_;
  uint32_t since_regulation_{0};
  ActiveQueue queue_;
  uint32_t n_pix_act_{0};
  uint32_t n_tiles_act_{0};
  uint64_t blur_count_{0};
  uint64_t stale_count_{0};
  uint64_t saturated_count_{0};
  uint64_t invariant_violations_{0};
  bool blur_enabled_{true};
};

// ---------------- inline implementation

inline void SpatialFilter::activate(std::span<PixelState> grid, uint32_t x, uint32_t y)
{
  n_pix_act_++;
  PixelState & anchor = grid[tile_anchor(x, y)];
  if (anchor.tile_active++ == 0) {
    n_tiles_act_++;
  }
}

inline void SpatialFilter::deactivate(std::span<PixelState> grid, uint32_t x, uint32_t y)
{
  n_pix_act_--;
  PixelState & anchor = grid[tile_anchor(x, y)];
  if (--anchor.tile_active == 0) {
    n_tiles_act_--;
  }
}

inline void SpatialFilter::regulate()
{
  if (n_pix_act_ == 0) {
    return;
  }
  q_target_ =
    regulate_queue(queue_.size(), target_, n_pix_act_, n_tiles_act_, tile_area_, q_min_, q_max_);
}

inline uint32_t SpatialFilter::on_event(
  std::span<PixelState> grid, uint32_t x, uint32_t y, std::vector<uint32_t> * stale)
{
  PixelState & s = grid[y * width_ + x];
  if (s.active_count == std::numeric_limits<uint16_t>::max()) {
    // keep sum(active_count) == queue length by not enqueuing at all
    saturated_count_++;
  } else {
    if (s.active_count++ == 0) {
      activate(grid, x, y);
    }
    queue_.push(QueueEntry{static_cast<uint16_t>(x), static_cast<uint16_t>(y)});
  }
  uint32_t num_stale = 0;
  while (queue_.size() > q_target_) {
    const QueueEntry e = queue_.pop();
    PixelState & ps = grid[e.y * width_ + e.x];
    assert(ps.active_count > 0);
    if (ps.active_count == 0) {
      invariant_violations_++;
      continue;
    }
    if (--ps.active_count == 0) {
      deactivate(grid, e.x, e.y);
      stale_count_++;
      num_stale++;
      if (blur_enabled_) {
        blur_pixel(grid, geometry_, e.x, e.y);
        blur_count_++;
      }
      if (stale) {
        stale->push_back(e.y * width_ + e.x);
      }
    }
  }
  if (++since_regulation_ >= regulate_every_) {
    since_regulation_ = 0;
    regulate();
  }
  return (num_stale);
}

}  // namespace fibar
#endif  // FIBAR__SPATIAL_HPP_
