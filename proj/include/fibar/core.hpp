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

#ifndef FIBAR__CORE_HPP_
#define FIBAR__CORE_HPP_

#include <cstdint>
#include <numeric>

namespace fibar
{
struct Event
{
  uint64_t t{0};  // microseconds
  uint16_t x{0};
  uint16_t y{0};
  int8_t polarity{1};  // -1 or +1
  friend bool operator==(const Event &, const Event &) = default;
};

struct SensorGeometry
{
  uint32_t width{0};
  uint32_t height{0};

  uint32_t num_pixels() const { return (width * height); }
  bool contains(uint32_t x, uint32_t y) const { return (x < width && y < height); }
  uint32_t index(uint32_t x, uint32_t y) const { return (y * width + x); }
  // throws ParamError unless width, height >= 2 and the pixel count fits 32 bits
  void validate() const;
  friend bool operator==(const SensorGeometry &, const SensorGeometry &) = default;
};

// non-negative fraction, used where the hot path must stay in integer arithmetic
struct Rational
{
  uint64_t num{0};
  uint64_t den{1};

  double to_double() const { return (static_cast<double>(num) / static_cast<double>(den)); }
  Rational reduced() const
  {
    const uint64_t g = std::gcd(num, den);
    return (g == 0 ? *this : Rational{num / g, den / g});
  }
  friend bool operator==(const Rational & a, const Rational & b)
  {
    // cross multiplication, values stay far below 2^32 in practice
    return (a.num * b.den == b.num * a.den);
  }
};

// Parses "0.5", "1/2" or "2/4". Throws ParamError on garbage.
Rational parse_rational(const char * s);

struct FilterParams
{
  double t_cut{40.0};     // cutoff period in events
  double omega_cut{0.0};  // 2 pi / t_cut
  double alpha{0.0};      // first stage (detrending) mixing coefficient
  double beta{0.0};       // second stage (high pass) coefficient
  Rational fill_ratio_target{1, 2};
  uint32_t tile_side{2};
  uint32_t q_min{256};
  uint32_t q_max{0};
  uint32_t q_init{0};
  bool spatial_enabled{true};
  uint32_t regulate_every{1};  // run queue regulation every N-th event

  uint32_t tile_area() const { return (tile_side * tile_side); }
  // throws ParamError if the fields are inconsistent with each other or with geometry
  void validate(const SensorGeometry & geom) const;
};

double omega_from_tcut(double t_cut);
double alpha_from_omega(double omega_cut);
double beta_from_omega(double omega_cut);

// Derives alpha/beta from the cutoff period and sets the queue defaults:
// q_init = n_pix / 16, q_min = 256, q_max = n_pix (q_min is lowered on
// sensors with fewer than 256 pixels).
FilterParams compute_params(
  double t_cut, Rational fill_ratio_target, const SensorGeometry & geom, uint32_t tile_side = 2);

// cutoff period heuristic 4 * max(N_ON, N_OFF), counts taken per sweep of the dynamic range
double suggest_tcut(uint64_t n_on, uint64_t n_off);

struct BodeGain
{
  double total{0};
  double alpha{0};  // |H_alpha(e^{j omega})|, high pass
  double beta{0};   // |H_beta(e^{j omega})|, low pass
};

BodeGain bode_gain(double omega, double alpha, double beta);
inline BodeGain bode_gain(double omega, const FilterParams & p)
{
  return (bode_gain(omega, p.alpha, p.beta));
}

}  // namespace fibar
#endif  // FIBAR__CORE_HPP_
