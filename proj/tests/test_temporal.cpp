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

#include <cmath>
#include <random>
#include <vector>

#include "fibar/core.hpp"
#include "fibar/errors.hpp"
#include "fibar/temporal.hpp"

using namespace fibar;

namespace
{
FilterParams params(double t_cut)
{
  return (compute_params(t_cut, Rational{1, 2}, SensorGeometry{64, 64}));
}

std::vector<int> random_polarities(size_t n, uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution on(0.5);
  std::vector<int> p(n);
  for (auto & v : p) {
    v = on(rng) ? 1 : -1;
  }
  return (p);
}
}  // namespace

TEST(Temporal, StateLayout) { EXPECT_EQ(sizeof(PixelState), 12u); }

TEST(Temporal, HandEvaluatedStep)
{
  PixelState s;
  const TemporalCoeffs<float> c(0.9, 0.9);
  const float delta = update_pixel(s, 1, c);
  EXPECT_NEAR(s.p_bar, 0.1f, 1e-7);
  EXPECT_NEAR(delta, 0.9f, 1e-7);
  EXPECT_NEAR(s.l, 0.855f, 1e-6);
  EXPECT_EQ(s.active_count, 0);
}

TEST(Temporal, ConstantInputIsRejected)
{
  const auto p = params(100);
  const TemporalCoeffs<double> c(p);
  double p_bar = 0;
  double l = 0;
  for (int k = 0; k < 20000; k++) {
    update_two_stage(p_bar, l, 1, c);
  }
  EXPECT_NEAR(p_bar, 1.0, 1e-12);
  EXPECT_NEAR(l, 0.0, 1e-12);
}

TEST(Temporal, ImpulseResponseFirstStep)
{
  const auto p = params(40);
  IirReference<double> iir(p.alpha, p.beta);
  EXPECT_NEAR(iir.update(1), 0.5 * p.alpha * (1.0 + p.beta), 1e-15);
}

TEST(Temporal, ZeroInputStaysZero)
{
  const auto p = params(40);
  IirReference<double> iir(p.alpha, p.beta);
  for (int k = 0; k < 100; k++) {
    EXPECT_EQ(iir.update(0), 0.0);
  }
}

TEST(Temporal, TwoStageMatchesSingleRecursion)
{
  const auto p = params(40);
  const TemporalCoeffs<double> c(p);
  IirReference<double> iir(p.alpha, p.beta);
  double p_bar = 0;
  double l = 0;
  for (const int v : random_polarities(100000, 3)) {
    update_two_stage(p_bar, l, v, c);
    ASSERT_NEAR(l, iir.update(v), 1e-9);
  }
}

TEST(Temporal, PBarBounded)
{
  const TemporalCoeffs<float> c(params(5));
  PixelState s;
  for (const int v : random_polarities(50000, 11)) {
    update_pixel(s, v, c);
    ASSERT_LE(std::abs(s.p_bar), 1.0f);
  }
}

// geometric series bound on the high pass for +-1 inputs
TEST(Temporal, BoundedOutput)
{
  for (const double t : {5.0, 40.0, 100.0}) {
    const auto p = params(t);
    const TemporalCoeffs<double> c(p);
    const double bound = 0.5 * (1.0 + p.beta) / (1.0 - p.beta);
    double p_bar = 0;
    double l = 0;
    double worst = 0;
    // long runs of one sign are the worst case for the detrended increment
    std::mt19937_64 rng(5);
    std::geometric_distribution<int> run(0.02);
    int sign = 1;
    for (int k = 0; k < 200000;) {
      const int n = 1 + run(rng);
      for (int i = 0; i < n; i++, k++) {
        update_two_stage(p_bar, l, sign, c);
        worst = std::max(worst, std::abs(l));
      }
      sign = -sign;
    }
    EXPECT_LE(worst, bound) << t;
  }
}

TEST(Temporal, PixelsIndependentUnderInterleaving)
{
  const auto p = params(40);
  const TemporalCoeffs<float> c(p);
  const auto a = random_polarities(2000, 1);
  const auto b = random_polarities(3000, 2);
  PixelState a1, b1, a2, b2;
  for (const int v : a) {
    update_pixel(a1, v, c);
  }
  for (const int v : b) {
    update_pixel(b1, v, c);
  }
  std::mt19937_64 rng(9);
  size_t i = 0;
  size_t j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && (rng() & 1))) {
      update_pixel(a2, a[i++], c);
    } else {
      update_pixel(b2, b[j++], c);
    }
  }
  EXPECT_EQ(a1.l, a2.l);
  EXPECT_EQ(a1.p_bar, a2.p_bar);
  EXPECT_EQ(b1.l, b2.l);
  EXPECT_EQ(b1.p_bar, b2.p_bar);
}

TEST(Temporal, ThresholdScale)
{
  EXPECT_DOUBLE_EQ(apply_threshold_map(0.9, 1.0), 0.9);
  EXPECT_NEAR(apply_threshold_map(0.9, 1.2), 1.08, 1e-15);
  EXPECT_THROW(apply_threshold_map(0.9, 0.0), DataError);
  EXPECT_THROW(apply_threshold_map(0.9, -1.0), DataError);
}

TEST(Temporal, UnityScaleIsBitIdentical)
{
  const TemporalCoeffs<float> c(params(40));
  PixelState s1;
  PixelState s2;
  for (const int v : random_polarities(10000, 4)) {
    update_pixel(s1, v, c);
    update_pixel(s2, v, c, 1.0f);
  }
  EXPECT_EQ(s1.l, s2.l);
  EXPECT_EQ(s1.p_bar, s2.p_bar);
}
