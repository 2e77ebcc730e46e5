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

#include "fibar/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

namespace fibar
{
std::string ScaleMode::to_string() const
{
  if (kind == Kind::Robust) {
    return ("robust");
  }
  std::ostringstream ss;
  ss << "fixed:" << bound;
  return (ss.str());
}

ScaleMode parse_scale_mode(const std::string & s)
{
  if (s == "robust") {
    return (ScaleMode::robust());
  }
  const std::string prefix = "fixed:";
  if (s.rfind(prefix, 0) == 0) {
    try {
      size_t pos = 0;
      const std::string num = s.substr(prefix.size());
      const double a = std::stod(num, &pos);
      if (pos == num.size() && a > 0 && std::isfinite(a)) {
        return (ScaleMode::fixed(a));
      }
    } catch (const std::logic_error &) {
    }
  }
  throw ParamError("scale mode must be 'robust' or 'fixed:<a>' with a > 0, got '" + s + "'");
}

// ---------------- engine

ReconstructionEngine::ReconstructionEngine(
  const SensorGeometry & geom, const FilterParams & params, bool strict)
: geometry_(geom), params_(params), coeffs_(params), strict_(strict)
{
  params.validate(geom);
  grid_.resize(geom.num_pixels());
  if (params.spatial_enabled) {
    spatial_.emplace(geom, params);
  }
}

void ReconstructionEngine::set_threshold_map(std::vector<float> c_prime)
{
  if (c_prime.size() != geometry_.num_pixels()) {
    throw ParamError("threshold map size does not match sensor geometry");
  }
  for (size_t i = 0; i < c_prime.size(); i++) {
    if (!(c_prime[i] > 0) || !std::isfinite(c_prime[i])) {
      throw DataError("relative threshold must be positive and finite", i);
    }
  }
  c_prime_ = std::move(c_prime);
}

void ReconstructionEngine::reject_strict(const Event & e) const
{
  throw DataError(
    "event at (" + std::to_string(e.x) + ", " + std::to_string(e.y) + ") outside the sensor",
    processed_ + rejected_);
}

void ReconstructionEngine::set_blur_enabled(bool on)
{
  if (spatial_) {
    spatial_->set_blur_enabled(on);
  }
}

size_t ReconstructionEngine::memory_bytes() const
{
  size_t b = grid_.capacity() * sizeof(PixelState) + c_prime_.capacity() * sizeof(float);
  if (spatial_) {
    b += spatial_->memory_bytes();
  }
  return (b);
}

std::vector<uint16_t> ReconstructionEngine::active_image() const
{
  std::vector<uint16_t> img(grid_.size());
  std::transform(
    grid_.begin(), grid_.end(), img.begin(), [](const PixelState & s) { return s.active_count; });
  return (img);
}

uint64_t ReconstructionEngine::state_digest() const
{
  uint64_t h = 1469598103934665603ULL;
  const auto mix = [&h](const void * data, size_t n) {
    const auto * p = static_cast<const uint8_t *>(data);
    for (size_t i = 0; i < n; i++) {
      h = (h ^ p[i]) * 1099511628211ULL;
    }
  };
  mix(grid_.data(), grid_.size() * sizeof(PixelState));
  if (spatial_) {
    const auto & q = spatial_->queue();
    for (uint32_t i = 0; i < q.size(); i++) {
      const QueueEntry e = q.at(i);
      mix(&e, sizeof(e));
    }
    const uint64_t totals[] = {
      spatial_->q_target(), spatial_->n_pix_act(), spatial_->n_tiles_act(), spatial_->blur_count()};
    mix(totals, sizeof(totals));
  }
  const uint64_t counters[] = {processed_, rejected_};
  mix(counters, sizeof(counters));
  return (h);
}

// ---------------- rendering

namespace
{
// the ratio is formed first so that a positive affine change of l, lo and hi
// leaves the result unchanged
uint8_t to_gray(double l, double lo, double range)
{
  const double v = std::floor((l - lo) / range * 255.0 + 0.5);
  return (static_cast<uint8_t>(std::clamp(v, 0.0, 255.0)));
}
}  // namespace

Frame ReconstructionEngine::render(const ScaleMode & mode, uint64_t readout_time) const
{
  return (render_state(grid_, geometry_, mode, readout_time));
}

Frame render_state(
  std::span<const PixelState> grid, const SensorGeometry & geom, const ScaleMode & mode,
  uint64_t readout_time)
{
  if (grid.size() != geom.num_pixels()) {
    throw ParamError("state size does not match sensor geometry");
  }
  Frame f;
  f.width = geom.width;
  f.height = geom.height;
  f.readout_time = readout_time;
  f.scale = mode;
  f.pixels.resize(grid.size());
  if (mode.kind == ScaleMode::Kind::Fixed) {
    f.lo = -mode.bound;
    f.hi = mode.bound;
  } else {
    // order statistics keep the mapping equivariant under affine changes of l
    std::vector<float> v(grid.size());
    std::transform(grid.begin(), grid.end(), v.begin(), [](const PixelState & s) { return s.l; });
    const size_t n = v.size();
    const size_t k_lo = static_cast<size_t>(std::floor(0.01 * static_cast<double>(n - 1)));
    const size_t k_hi = static_cast<size_t>(std::ceil(0.99 * static_cast<double>(n - 1)));
    std::nth_element(v.begin(), v.begin() + k_lo, v.end());
    f.lo = v[k_lo];
    std::nth_element(v.begin() + k_lo, v.begin() + k_hi, v.end());
    f.hi = v[k_hi];
    if (f.lo == f.hi) {
      // sparse activity: fall back to the full range
      const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
      f.lo = *mn;
      f.hi = *mx;
    }
  }
  if (!(f.hi > f.lo)) {
    f.degenerate = true;
    std::fill(f.pixels.begin(), f.pixels.end(), uint8_t{128});
    return (f);
  }
  const double range = f.hi - f.lo;
  for (size_t i = 0; i < grid.size(); i++) {
    f.pixels[i] = to_gray(grid[i].l, f.lo, range);
  }
  return (f);
}

// ---------------- read-out clock and run loop

ReadoutClock ReadoutClock::from_fps(double fps)
{
  if (!(fps > 0) || !std::isfinite(fps)) {
    throw ParamError("frame rate must be positive");
  }
  ReadoutClock c;
  c.period_us_ = 1e6 / fps;
  c.idx_ = 1;  // no read-out at t = 0
  return (c);
}

ReadoutClock ReadoutClock::from_times(std::vector<uint64_t> times)
{
  if (!std::is_sorted(times.begin(), times.end())) {
    throw ParamError("read-out times must be non-decreasing");
  }
  ReadoutClock c;
  c.explicit_ = true;
  c.times_ = std::move(times);
  return (c);
}

uint64_t ReadoutClock::peek() const
{
  if (explicit_) {
    return (times_[idx_]);
  }
  return (static_cast<uint64_t>(std::llround(static_cast<double>(idx_) * period_us_)));
}

FrameDiagnostics diagnostics_of(const ReconstructionEngine & engine, uint64_t frame_index, uint64_t t)
{
  FrameDiagnostics d;
  d.frame_index = frame_index;
  d.readout_time = t;
  d.events = engine.events_processed();
  if (engine.spatial_enabled()) {
    const auto & sp = engine.spatial();
    d.q_target = sp.q_target();
    d.n_pix_act = sp.n_pix_act();
    d.n_tiles_act = sp.n_tiles_act();
    d.fill_ratio = sp.n_tiles_act() > 0 ? sp.observed_fill_ratio().to_double() : 0.0;
    d.blur_count = sp.blur_count();
  }
  return (d);
}

RunStats run(
  EventSource & source, ReconstructionEngine & engine, ReadoutClock clock, const RunOptions & opt,
  const FrameSink & sink)
{
  RunStats stats;
  const auto emit = [&](uint64_t t) {
    const Frame f = engine.render(opt.scale, t);
    if (sink) {
      sink(f, diagnostics_of(engine, stats.frames, t));
    }
    stats.frames++;
  };
  Event e;
  bool any = false;
  uint64_t t_last = 0;
  while (source.next(e)) {
    while (clock.has_next() && clock.peek() <= e.t) {
      emit(clock.peek());
      clock.advance();
    }
    engine.process(e);
    any = true;
    t_last = e.t;
    stats.events++;
  }
  if (clock.periodic()) {
    if (opt.end_time) {
      while (clock.peek() <= *opt.end_time) {
        emit(clock.peek());
        clock.advance();
      }
    } else if (any) {
      // close the interval that holds the last event
      while (true) {
        const uint64_t t = clock.peek();
        emit(t);
        clock.advance();
        if (t >= t_last) {
          break;
        }
      }
    }
  } else {
    while (clock.has_next()) {
      emit(clock.peek());
      clock.advance();
    }
  }
  stats.rejected = engine.events_rejected();
  return (stats);
}

// ---------------- output

void write_pgm(const Frame & frame, std::ostream & out)
{
  out << "P5\n" << frame.width << " " << frame.height << "\n255\n";
  out.write(reinterpret_cast<const char *>(frame.pixels.data()), static_cast<std::streamsize>(frame.pixels.size()));
}

void write_pgm(const Frame & frame, const std::string & path)
{
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw Error("cannot open " + path + " for writing");
  }
  write_pgm(frame, f);
  if (!f) {
    throw Error("failed writing " + path);
  }
}

std::string frame_file_name(uint64_t index)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06llu.pgm", static_cast<unsigned long long>(index));
  return (buf);
}

void write_diagnostics_header(std::ostream & out)
{
  out << "frame,readout_time_us,q_target,fill_ratio,n_pix_act,n_tiles_act,blur_count\n";
}

void write_diagnostics_row(std::ostream & out, const FrameDiagnostics & d)
{
  out << d.frame_index << "," << d.readout_time << "," << d.q_target << "," << d.fill_ratio << ","
      << d.n_pix_act << "," << d.n_tiles_act << "," << d.blur_count << "\n";
}

}  // namespace fibar
