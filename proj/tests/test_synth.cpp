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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fibar/errors.hpp"
#include "fibar/synth.hpp"

using namespace fibar;

namespace
{
const SensorGeometry kSmall{4, 3};

SceneSignal triangle(double amplitude, double cycles, double rate = 2000)
{
  SceneSignal s;
  s.kind = SceneKind::TriangleGlobal;
  s.amplitude = amplitude;
  s.period = 1.0;
  s.duration = cycles;
  s.sample_rate = rate;
  return (s);
}

std::pair<int, int> counts_at(const std::vector<Event> & ev, uint16_t x, uint16_t y)
{
  int on = 0;
  int off = 0;
  for (const auto & e : ev) {
    if (e.x == x && e.y == y) {
      (e.polarity > 0 ? on : off)++;
    }
  }
  return {on, off};
}

// mean of the trace over each stimulus cycle
std::vector<double> cycle_means(
  const std::vector<Event> & ev, const std::vector<double> & trace, uint64_t period_us, size_t cycles)
{
  std::vector<double> sum(cycles, 0.0);
  std::vector<double> n(cycles, 0.0);
  size_t k = 0;
  for (const auto & e : ev) {
    if (e.x != 0 || e.y != 0) {
      continue;
    }
    const size_t c = std::min<size_t>(e.t / period_us, cycles - 1);
    sum[c] += trace[k++];
    n[c] += 1;
  }
  for (size_t c = 0; c < cycles; c++) {
    sum[c] /= n[c];
  }
  return (sum);
}
}  // namespace

TEST(Scene, Parse)
{
  EXPECT_EQ(parse_scene_kind("triangle"), SceneKind::TriangleGlobal);
  EXPECT_EQ(parse_scene_kind("edge"), SceneKind::MovingEdge);
  EXPECT_EQ(parse_scene_kind("sinusoid"), SceneKind::TranslatingSinusoid);
  EXPECT_THROW(parse_scene_kind("square"), ParamError);
  EXPECT_EQ(to_string(SceneKind::MovingEdge), "edge");
}

TEST(Scene, TriangleShape)
{
  const auto s = triangle(2.0, 1.0);
  EXPECT_DOUBLE_EQ(s.value(0, 0, 0.0), -1.0);
  EXPECT_DOUBLE_EQ(s.value(0, 0, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(s.value(3, 2, 0.25), 0.0);
  EXPECT_DOUBLE_EQ(s.value(0, 0, 1.0), -1.0);
}

TEST(Scene, EdgeProfile)
{
  SceneSignal s;
  s.kind = SceneKind::MovingEdge;
  s.amplitude = 1.0;
  s.wavelength = 16;
  s.ramp_width = 4;
  EXPECT_DOUBLE_EQ(s.profile(0), -0.5);
  EXPECT_DOUBLE_EQ(s.profile(2), 0.0);
  EXPECT_DOUBLE_EQ(s.profile(5), 0.5);
  EXPECT_DOUBLE_EQ(s.profile(10), 0.0);
  EXPECT_DOUBLE_EQ(s.profile(13), -0.5);
  EXPECT_DOUBLE_EQ(s.profile(-14), 0.0);
  EXPECT_DOUBLE_EQ(s.profile(16 + 5), 0.5);
}

TEST(Generate, ConstantSceneIsSilent)
{
  const auto sensor = make_uniform_sensor(kSmall, 0.1, 0.1);
  EXPECT_TRUE(generate_events(triangle(0.0, 2.0), sensor).empty());
}

TEST(Generate, OneCycleCounts)
{
  const auto sensor = make_uniform_sensor(kSmall, 0.1, 0.1);
  const auto ev = generate_events(triangle(2.0, 1.0), sensor);
  for (uint16_t y = 0; y < kSmall.height; y++) {
    for (uint16_t x = 0; x < kSmall.width; x++) {
      const auto [on, off] = counts_at(ev, x, y);
      EXPECT_NEAR(on, 20, 1);
      EXPECT_NEAR(off, 20, 1);
    }
  }
}

TEST(Generate, ImbalanceRatio)
{
  const auto sensor = make_uniform_sensor(kSmall, 0.1, 0.05);
  const auto ev = generate_events(triangle(2.0, 1.0), sensor);
  const auto [on, off] = counts_at(ev, 1, 1);
  EXPECT_NEAR(off, 2 * on, 1);
}

TEST(Generate, SortedAndDeterministic)
{
  auto sensor = make_lognormal_sensor(SensorGeometry{16, 8}, 0.1, 0.2, 42);
  SceneSignal s;
  s.kind = SceneKind::MovingEdge;
  s.amplitude = 1.0;
  s.angle = 0.3;
  s.duration = 0.5;
  s.sample_rate = 2000;
  const auto a = generate_events(s, sensor);
  const auto b = generate_events(s, sensor);
  ASSERT_FALSE(a.empty());
  EXPECT_EQ(a, b);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end(), [](const Event & l, const Event & r) {
    return (l.t < r.t);
  }));
}

TEST(Generate, TimescaleCovariance)
{
  const auto sensor = make_lognormal_sensor(kSmall, 0.1, 0.1, 3);
  auto slow = triangle(1.0, 3.0, 500);
  auto fast = slow;
  fast.period /= 10;
  fast.duration /= 10;
  fast.sample_rate *= 10;
  const auto a = generate_events(slow, sensor);
  const auto b = generate_events(fast, sensor);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); i++) {
    ASSERT_EQ(a[i].x, b[i].x);
    ASSERT_EQ(a[i].y, b[i].y);
    ASSERT_EQ(a[i].polarity, b[i].polarity);
    ASSERT_NEAR(static_cast<double>(a[i].t), 10.0 * static_cast<double>(b[i].t), 10.0);
  }
}

TEST(Generate, AntiAliasingCheck)
{
  const auto sensor = make_uniform_sensor(kSmall, 0.1, 0.1);
  // step 2 * 2 / 100 = 0.04 > 0.1 / 4
  EXPECT_THROW(generate_events(triangle(2.0, 1.0, 100), sensor), ParamError);
  EXPECT_NO_THROW(generate_events(triangle(2.0, 1.0, 200), sensor));
}

TEST(Generate, Validation)
{
  EXPECT_THROW(make_uniform_sensor(kSmall, 0.0, 0.1), ParamError);
  EXPECT_THROW(make_uniform_sensor(SensorGeometry{1, 1}, 0.1, 0.1), ParamError);
  auto s = triangle(1.0, 1.0);
  s.duration = 0;
  EXPECT_THROW(generate_events(s, make_uniform_sensor(kSmall, 0.1, 0.1)), ParamError);
}

TEST(Generate, StationarityRelation)
{
  const auto sensor = make_lognormal_sensor(SensorGeometry{8, 8}, 0.1, 0.15, 9, 0.1);
  const auto ev = generate_events(triangle(3.0, 5.0, 4000), sensor);
  for (uint16_t y = 0; y < 8; y++) {
    for (uint16_t x = 0; x < 8; x++) {
      const auto [on, off] = counts_at(ev, x, y);
      const uint32_t i = y * 8 + x;
      const double up = on * sensor.c_on[i];
      const double down = off * sensor.c_off[i];
      EXPECT_NEAR(up, down, std::max(sensor.c_on[i], sensor.c_off[i]));
    }
  }
}

TEST(Sensor, LognormalSpreadAndSeed)
{
  const SensorGeometry g{64, 64};
  const auto a = make_lognormal_sensor(g, 0.2, 0.1, 1);
  const auto b = make_lognormal_sensor(g, 0.2, 0.1, 1);
  const auto c = make_lognormal_sensor(g, 0.2, 0.1, 2);
  EXPECT_EQ(a.c_on, b.c_on);
  EXPECT_NE(a.c_on, c.c_on);
  double mean = 0;
  double sq = 0;
  for (const double v : a.c_on) {
    mean += std::log(v / 0.2);
    sq += std::log(v / 0.2) * std::log(v / 0.2);
  }
  mean /= a.c_on.size();
  const double sd = std::sqrt(sq / a.c_on.size() - mean * mean);
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(sd, 0.1, 0.01);
  const auto d = make_lognormal_sensor(g, 0.2, 0.0, 1, 0.0, 1.5);
  EXPECT_DOUBLE_EQ(d.c_off[17], 0.3);
  EXPECT_DOUBLE_EQ(harmonic_threshold(0.1, 0.3), 0.15);
}

TEST(Reconstruct, SimpleAndCalibrated)
{
  const std::vector<int8_t> p = {1, 1, -1};
  EXPECT_EQ(reconstruct_simple(p), (std::vector<double>{1, 2, 1}));
  const std::vector<int8_t> one = {1};
  EXPECT_EQ(reconstruct_calibrated(one, 0.1, 0.2), (std::vector<double>{0.1}));
  EXPECT_TRUE(reconstruct_simple(std::vector<int8_t>{}).empty());
}

TEST(Reconstruct, DriftOnlyWithImbalance)
{
  const size_t cycles = 12;
  const auto balanced = make_uniform_sensor(kSmall, 0.1, 0.1);
  const auto imbalanced = make_uniform_sensor(kSmall, 0.1, 0.12);
  const auto ev_b = generate_events(triangle(2.0, cycles), balanced);
  const auto ev_i = generate_events(triangle(2.0, cycles), imbalanced);

  const auto mb = cycle_means(ev_b, reconstruct_simple(polarities_at(ev_b, 0, 0)), 1000000, cycles);
  for (size_t c = 1; c < cycles; c++) {
    EXPECT_NEAR(mb[c], mb[0], 1.0);
  }

  // simple sum drifts upwards: fewer of the coarser OFF events undo each rise
  const auto pi = polarities_at(ev_i, 0, 0);
  const auto mi = cycle_means(ev_i, reconstruct_simple(pi), 1000000, cycles);
  for (size_t c = 1; c < cycles; c++) {
    EXPECT_GT(mi[c], mi[c - 1]);
  }

  // true thresholds: periodic, drift per cycle below one threshold step
  const auto mc = cycle_means(ev_i, reconstruct_calibrated(pi, 0.1, 0.12), 1000000, cycles);
  for (size_t c = 1; c < cycles; c++) {
    EXPECT_LT(std::abs(mc[c] - mc[c - 1]), 0.1);
  }
  EXPECT_LT(std::abs(mc.back() - mc[1]), 0.12);

  // OFF threshold mis-set by 20 percent: linear drift comes back
  const auto mm = cycle_means(ev_i, reconstruct_calibrated(pi, 0.1, 0.144), 1000000, cycles);
  for (size_t c = 1; c < cycles; c++) {
    EXPECT_LT(mm[c], mm[c - 1]);
  }
}
