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

#include "fibar/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "fibar/errors.hpp"

namespace fibar
{
SceneKind parse_scene_kind(const std::string & s)
{
  if (s == "triangle") {
    return (SceneKind::TriangleGlobal);
  }
  if (s == "edge") {
    return (SceneKind::MovingEdge);
  }
  if (s == "sinusoid") {
    return (SceneKind::TranslatingSinusoid);
  }
  throw ParamError("unknown scene '" + s + "', expected triangle, edge or sinusoid");
}

std::string to_string(SceneKind k)
{
  switch (k) {
    case SceneKind::TriangleGlobal:
      return ("triangle");
    case SceneKind::MovingEdge:
      return ("edge");
    case SceneKind::TranslatingSinusoid:
      return ("sinusoid");
  }
  return ("?");
}

double SceneSignal::projection(double x, double y) const
{
  return (x * std::cos(angle) + y * std::sin(angle));
}

namespace
{
// std::floor is an out of line call on baseline x86-64
inline double fast_floor(double v)
{
  const double f = static_cast<double>(static_cast<int64_t>(v));
  return (f > v ? f - 1.0 : f);
}
}  // namespace

double SceneSignal::profile(double s) const
{
  if (kind == SceneKind::TranslatingSinusoid) {
    return (0.5 * amplitude * std::sin(2.0 * std::numbers::pi * s / wavelength));
  }
  const double d = s - wavelength * fast_floor(s / wavelength);
  const double half = 0.5 * wavelength;
  if (d < ramp_width) {
    return (amplitude * (d / ramp_width - 0.5));
  }
  if (d < half) {
    return (0.5 * amplitude);
  }
  if (d < half + ramp_width) {
    return (amplitude * (0.5 - (d - half) / ramp_width));
  }
  return (-0.5 * amplitude);
}

double SceneSignal::value(double x, double y, double t) const
{
  if (kind == SceneKind::TriangleGlobal) {
    const double u = t / period - std::floor(t / period);
    const double tri = u < 0.5 ? 2.0 * u : 2.0 - 2.0 * u;
    return (amplitude * (tri - 0.5));
  }
  return (profile(projection(x, y) - speed * t));
}

double SceneSignal::max_step() const
{
  switch (kind) {
    case SceneKind::TriangleGlobal:
      return (2.0 * amplitude / (period * sample_rate));
    case SceneKind::MovingEdge:
      return (amplitude / ramp_width * std::abs(speed) / sample_rate);
    case SceneKind::TranslatingSinusoid:
      return (0.5 * amplitude * 2.0 * std::numbers::pi / wavelength * std::abs(speed) / sample_rate);
  }
  return (0);
}

void SceneSignal::validate() const
{
  const auto positive = [](double v) { return (v > 0 && std::isfinite(v)); };
  if (!positive(duration) || !positive(sample_rate)) {
    throw ParamError("scene duration and sample rate must be positive");
  }
  if (!(amplitude >= 0) || !std::isfinite(amplitude)) {
    throw ParamError("scene amplitude must be non-negative");
  }
  if (kind == SceneKind::TriangleGlobal && !positive(period)) {
    throw ParamError("triangle period must be positive");
  }
  if (kind != SceneKind::TriangleGlobal && (!positive(wavelength) || !std::isfinite(speed))) {
    throw ParamError("wavelength must be positive and speed finite");
  }
  if (kind == SceneKind::MovingEdge && (!positive(ramp_width) || 2.0 * ramp_width > wavelength)) {
    throw ParamError("edge ramp width must be positive and at most half the wavelength");
  }
}

double IdealSensorConfig::min_threshold() const
{
  double m = std::numeric_limits<double>::infinity();
  for (const double c : c_on) {
    m = std::min(m, c);
  }
  for (const double c : c_off) {
    m = std::min(m, c);
  }
  return (m);
}

void IdealSensorConfig::validate() const
{
  geometry.validate();
  if (c_on.size() != geometry.num_pixels() || c_off.size() != geometry.num_pixels()) {
    throw ParamError("threshold maps must have one entry per pixel");
  }
  const auto bad = [](double c) { return (!(c > 0) || !std::isfinite(c)); };
  if (std::any_of(c_on.begin(), c_on.end(), bad) || std::any_of(c_off.begin(), c_off.end(), bad)) {
    throw ParamError("all contrast thresholds must be positive");
  }
}

IdealSensorConfig make_uniform_sensor(const SensorGeometry & geom, double c_on, double c_off)
{
  IdealSensorConfig cfg;
  cfg.geometry = geom;
  cfg.c_on.assign(geom.num_pixels(), c_on);
  cfg.c_off.assign(geom.num_pixels(), c_off);
  cfg.validate();
  return (cfg);
}

IdealSensorConfig make_lognormal_sensor(
  const SensorGeometry & geom, double c_mean, double sigma, uint64_t seed, double imbalance,
  double off_ratio)
{
  IdealSensorConfig cfg;
  cfg.geometry = geom;
  cfg.seed = seed;
  const uint32_t n = geom.num_pixels();
  cfg.c_on.resize(n);
  cfg.c_off.resize(n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (uint32_t i = 0; i < n; i++) {
    const double z1 = normal(rng);
    const double z2 = normal(rng);
    const double z3 = normal(rng);
    cfg.c_on[i] = c_mean * std::exp(sigma * z1 + imbalance * z3);
    cfg.c_off[i] = c_mean * off_ratio * std::exp(sigma * z2 - imbalance * z3);
  }
  cfg.validate();
  return (cfg);
}

namespace
{
struct Crossing
{
  double frac;  // position inside the sample interval, [0, 1]
  uint32_t pixel;
  int8_t polarity;
};
}  // namespace

uint64_t generate(const SceneSignal & scene, const IdealSensorConfig & sensor, const EventSink & sink)
{
  scene.validate();
  sensor.validate();
  const double step = scene.max_step();
  const double c_min = sensor.min_threshold();
  if (!(step < 0.25 * c_min)) {
    throw ParamError(
      "sample rate too low: brightness changes by " + std::to_string(step) +
      " per sample, must stay below a quarter of the smallest threshold (" +
      std::to_string(c_min) + ")");
  }
  const SensorGeometry & g = sensor.geometry;
  const uint32_t n = g.num_pixels();
  std::vector<double> level(n);
  std::vector<double> ref(n);
  std::vector<uint64_t> t_prev_event(n, 0);
  std::vector<uint8_t> fired(n, 0);
  const bool global = scene.kind == SceneKind::TriangleGlobal;
  std::vector<double> proj(global ? 0 : n);
  for (uint32_t y = 0; y < g.height; y++) {
    for (uint32_t x = 0; x < g.width; x++) {
      const uint32_t i = g.index(x, y);
      level[i] = scene.value(x, y, 0.0);
      if (!global) {
        proj[i] = scene.projection(x, y);
      }
    }
  }
  ref = level;

  const uint64_t num_samples = static_cast<uint64_t>(std::llround(scene.duration * scene.sample_rate));
  const double dt_us = 1e6 / scene.sample_rate;
  // Samples are processed in chunks, pixel major inside a chunk so the
  // per-pixel state stays in cache. Crossings are bucketed by sample.
  constexpr uint64_t kChunk = 64;
  std::vector<std::vector<Crossing>> buckets(kChunk);
  std::vector<double> chunk_global(kChunk);
  std::vector<double> chunk_shift(kChunk);
  uint64_t count = 0;
  for (uint64_t k0 = 1; k0 <= num_samples; k0 += kChunk) {
    const uint64_t nk = std::min(kChunk, num_samples - k0 + 1);
    for (uint64_t j = 0; j < nk; j++) {
      const double t1 = static_cast<double>(k0 + j) / scene.sample_rate;
      chunk_global[j] = global ? scene.value(0, 0, t1) : 0.0;
      chunk_shift[j] = global ? 0.0 : scene.speed * t1;
      buckets[j].clear();
    }
    for (uint32_t i = 0; i < n; i++) {
      double l0 = level[i];
      double r = ref[i];
      const double c_on = sensor.c_on[i];
      const double c_off = sensor.c_off[i];
      for (uint64_t j = 0; j < nk; j++) {
        const double l1 = global ? chunk_global[j] : scene.profile(proj[i] - chunk_shift[j]);
        // at most one crossing per sample, guaranteed by the step check above
        int8_t p = 0;
        double target = 0;
        if (l1 - r >= c_on) {
          p = 1;
          target = r + c_on;
        } else if (r - l1 >= c_off) {
          p = -1;
          target = r - c_off;
        }
        if (p != 0) {
          const double frac = l1 == l0 ? 1.0 : std::clamp((target - l0) / (l1 - l0), 0.0, 1.0);
          bool swallowed = false;
          if (sensor.refractory_us > 0) {
            const auto t_us = static_cast<uint64_t>(
              std::llround((static_cast<double>(k0 + j - 1) + frac) * dt_us));
            swallowed = fired[i] && t_us - t_prev_event[i] < sensor.refractory_us;
            if (!swallowed) {
              fired[i] = 1;
              t_prev_event[i] = t_us;
            }
          }
          if (!swallowed) {
            r = target;
            buckets[j].push_back(Crossing{frac, i, p});
          }
        }
        l0 = l1;
      }
      level[i] = l0;
      ref[i] = r;
    }
    for (uint64_t j = 0; j < nk; j++) {
      auto & batch = buckets[j];
      std::sort(batch.begin(), batch.end(), [](const Crossing & a, const Crossing & b) {
        return (a.frac < b.frac || (a.frac == b.frac && a.pixel < b.pixel));
      });
      for (const auto & c : batch) {
        Event e;
        e.t = static_cast<uint64_t>(std::llround((static_cast<double>(k0 + j - 1) + c.frac) * dt_us));
        e.x = static_cast<uint16_t>(c.pixel % g.width);
        e.y = static_cast<uint16_t>(c.pixel / g.width);
        e.polarity = c.polarity;
        sink(e);
      }
      count += batch.size();
    }
  }
  return (count);
}

std::vector<Event> generate_events(const SceneSignal & scene, const IdealSensorConfig & sensor)
{
  std::vector<Event> events;
  generate(scene, sensor, [&events](const Event & e) { events.push_back(e); });
  return (events);
}

std::vector<int8_t> polarities_at(std::span<const Event> events, uint16_t x, uint16_t y)
{
  std::vector<int8_t> p;
  for (const auto & e : events) {
    if (e.x == x && e.y == y) {
      p.push_back(e.polarity);
    }
  }
  return (p);
}

std::vector<double> reconstruct_simple(std::span<const int8_t> polarities)
{
  std::vector<double> trace;
  trace.reserve(polarities.size());
  double l = 0;
  for (const int8_t p : polarities) {
    l += p;
    trace.push_back(l);
  }
  return (trace);
}

std::vector<double> reconstruct_calibrated(std::span<const int8_t> polarities, double c_on, double c_off)
{
  std::vector<double> trace;
  trace.reserve(polarities.size());
  double l = 0;
  for (const int8_t p : polarities) {
    l += p > 0 ? c_on : -c_off;
    trace.push_back(l);
  }
  return (trace);
}

}  // namespace fibar
