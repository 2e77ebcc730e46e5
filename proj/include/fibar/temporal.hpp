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

#ifndef FIBAR__TEMPORAL_HPP_
#define FIBAR__TEMPORAL_HPP_

#include <cstdint>

#include "fibar/core.hpp"

namespace fibar
{
//
// Per-pixel filter memory. The layout is part of the cache budget:
// two 4-byte floats plus the 2-byte active event counter pad to 12 bytes,
// and the padding holds the per-tile active pixel counter (only meaningful
// for the pixel at the top left corner of each tile).
//
struct PixelState
{
  float p_bar{0};             // moving average of the polarity, in [-1, 1]
  float l{0};                 // reconstructed brightness
  uint16_t active_count{0};   // events of this pixel in the active event queue
  uint8_t tile_active{0};     // active pixels in the tile anchored here
  uint8_t spare{0};
};
static_assert(sizeof(PixelState) == 12, "pixel state must stay at 12 bytes");

template <class T>
struct TemporalCoeffs
{
  T alpha{0};
  T one_minus_alpha{0};
  T beta{0};
  T gain{0};  // (1 + beta) / 2

  TemporalCoeffs() = default;
  TemporalCoeffs(double a, double b)
  : alpha(static_cast<T>(a)),
    one_minus_alpha(static_cast<T>(1.0 - a)),
    beta(static_cast<T>(b)),
    gain(static_cast<T>(0.5 * (1.0 + b)))
  {
  }
  explicit TemporalCoeffs(const FilterParams & p) : TemporalCoeffs(p.alpha, p.beta) {}
};

//
// Two stage update: detrend the polarity with its exponential moving average,
// then run the high pass on the detrended increment. Returns the detrended
// increment. `scale` multiplies the increment before the high pass and is
// the hook for per-pixel relative thresholds (1 means no correction).
//
template <class T>
inline T update_two_stage(T & p_bar, T & l, int polarity, const TemporalCoeffs<T> & c, T scale = T(1))
{
  const T p = static_cast<T>(polarity);
  p_bar = c.alpha * p_bar + c.one_minus_alpha * p;
  const T delta = p - p_bar;
  l = c.beta * l + c.gain * (delta * scale);
  return (delta);
}

inline float update_pixel(PixelState & s, int polarity, const TemporalCoeffs<float> & c)
{
  return (update_two_stage(s.p_bar, s.l, polarity, c));
}

inline float update_pixel(
  PixelState & s, int polarity, const TemporalCoeffs<float> & c, float c_prime)
{
  return (update_two_stage(s.p_bar, s.l, polarity, c, c_prime));
}

// delta * c_prime, throws DataError for c_prime <= 0
double apply_threshold_map(double delta_l_det, double c_prime);

//
// The same filter written as one second order recursion,
//   l_k = (a + b) l_{k-1} - a b l_{k-2} + a/2 (1 + b) (p_k - p_{k-1}).
// It cannot separate p_bar from l, so it only serves as a test oracle
// for the two stage form.
//
template <class T>
class IirReference
{
public:
  IirReference(double alpha, double beta)
  : c1_(static_cast<T>(alpha + beta)),
    c2_(static_cast<T>(-alpha * beta)),
    cp_(static_cast<T>(0.5 * alpha * (1.0 + beta)))
  {
  }
  T update(int polarity)
  {
    const T l = c1_ * l1_ + c2_ * l2_ + cp_ * static_cast<T>(polarity - p_prev_);
    l2_ = l1_;
    l1_ = l;
    p_prev_ = polarity;
    return (l);
  }
  T value() const { return (l1_); }

private:
  T c1_;
  T c2_;
  T cp_;
  T l1_{0};
  T l2_{0};
  int p_prev_{0};
};

}  // namespace fibar
#endif  // FIBAR__TEMPORAL_HPP_
