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

#ifndef FIBAR__SYNTH_HPP_
#define FIBAR__SYNTH_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fibar/core.hpp"

namespace fibar
{
enum class SceneKind { TriangleGlobal, MovingEdge, TranslatingSinusoid };

SceneKind parse_scene_kind(const std::string & s);  // "triangle", "edge", "sinusoid"
std::string to_string(SceneKind k);

// Log brightness as a function of pixel position and time.
//   triangle: spatially uniform triangle wave, starting at its minimum
//   edge:     periodic pattern of bright and dark bars with linear ramps,
//             translating along `angle`
//   sinusoid: translating sine grating
struct SceneSignal
{
  SceneKind kind{SceneKind::TriangleGlobal};
  double amplitude{2.0};     // peak to peak, log intensity units
  double period{1.0};        // seconds, triangle only
  double speed{100.0};       // pixels / second
  double wavelength{64.0};   // pixels, spatial period of edge pattern and grating
  double ramp_width{4.0};    // pixels, width of one edge transition
  double angle{0.0};         // radians, direction of motion
  double duration{1.0};      // seconds
  double sample_rate{1e4};   // Hz

  double value(double x, double y, double t) const;
  // brightness at coordinate s along the direction of motion (edge, sinusoid)
  double profile(double s) const;
  // coordinate of pixel (x, y) along the direction of motion
  double projection(double x, double y) const;
  // largest brightness change between two consecutive samples
  double max_step() const;
  void validate() const;
};

// Per-pixel ON/OFF thresholds in log intensity units, row major.
struct IdealSensorConfig
{
  SensorGeometry geometry;
  std::vector<double> c_on;
  std::vector<double> c_off;
  uint64_t refractory_us{0};
  uint64_t seed{0};

  double min_threshold() const;
  void validate() const;
};

IdealSensorConfig make_uniform_sensor(const SensorGeometry & geom, double c_on, double c_off);

//
// Fixed pattern threshold spread. Each pixel gets
//   c_on  = c_mean * exp(sigma * z1 + imbalance * z3)
//   c_off = c_mean * off_ratio * exp(sigma * z2 - imbalance * z3)
// with independent standard normal z. The imbalance term moves ON and OFF
// in opposite directions.
//
IdealSensorConfig make_lognormal_sensor(
  const SensorGeometry & geom, double c_mean, double sigma, uint64_t seed, double imbalance = 0.0,
  double off_ratio = 1.0);

// harmonic mean of ON and OFF threshold, 2 c_on c_off / (c_on + c_off)
inline double harmonic_threshold(double c_on, double c_off)
{
  return (2.0 * c_on * c_off / (c_on + c_off));
}

using EventSink = std::function<void(const Event &)>;

//
// Ideal event sensor: each pixel keeps a reference level and emits ON when
// L - ref >= c_on (ref += c_on) and OFF when ref - L >= c_off (ref -= c_off).
// Crossing times are interpolated inside each sample interval and events are
// emitted globally sorted by time. Returns the number of events.
//
uint64_t generate(const SceneSignal & scene, const IdealSensorConfig & sensor, const EventSink & sink);
std::vector<Event> generate_events(const SceneSignal & scene, const IdealSensorConfig & sensor);

// polarity sequence seen by a single pixel
std::vector<int8_t> polarities_at(std::span<const Event> events, uint16_t x, uint16_t y);

// running sum of polarities, starting from 0
std::vector<double> reconstruct_simple(std::span<const int8_t> polarities);
// running sum of threshold weighted polarities, starting from 0
std::vector<double> reconstruct_calibrated(std::span<const int8_t> polarities, double c_on, double c_off);

}  // namespace fibar
#endif  // FIBAR__SYNTH_HPP_
