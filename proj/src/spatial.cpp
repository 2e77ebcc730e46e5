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

#include "fibar/spatial.hpp"

#include <bit>

namespace fibar
{
namespace
{
constexpr uint32_t kTap[3] = {1, 2, 1};
}

float blur_value(std::span<const PixelState> grid, const SensorGeometry & geom, uint32_t x, uint32_t y)
{
  const uint32_t w = geom.width;
  if (x > 0 && y > 0 && x + 1 < w && y + 1 < geom.height) {
    const PixelState * r0 = &grid[(y - 1) * w + x];
    const PixelState * r1 = r0 + w;
    const PixelState * r2 = r1 + w;
    const double sum = static_cast<double>(r0[-1].l) + 2.0 * r0[0].l + r0[1].l +
                       2.0 * r1[-1].l + 4.0 * r1[0].l + 2.0 * r1[1].l +
                       static_cast<double>(r2[-1].l) + 2.0 * r2[0].l + r2[1].l;
    return (static_cast<float>(sum * (1.0 / 16.0)));
  }
  double sum = 0;
  uint32_t wsum = 0;
  for (int dy = -1; dy <= 1; dy++) {
    const int64_t yy = static_cast<int64_t>(y) + dy;
    if (yy < 0 || yy >= geom.height) {
      continue;
    }
    for (int dx = -1; dx <= 1; dx++) {
      const int64_t xx = static_cast<int64_t>(x) + dx;
      if (xx < 0 || xx >= w) {
        continue;
      }
      const uint32_t k = kTap[dx + 1] * kTap[dy + 1];
      sum += k * static_cast<double>(grid[yy * w + xx].l);
      wsum += k;
    }
  }
  return (static_cast<float>(sum / wsum));
}

uint32_t blur_weight_sum(const SensorGeometry & geom, uint32_t x, uint32_t y)
{
  uint32_t wsum = 0;
  for (int dy = -1; dy <= 1; dy++) {
    for (int dx = -1; dx <= 1; dx++) {
      const int64_t xx = static_cast<int64_t>(x) + dx;
      const int64_t yy = static_cast<int64_t>(y) + dy;
      if (xx >= 0 && yy >= 0 && xx < geom.width && yy < geom.height) {
        wsum += kTap[dx + 1] * kTap[dy + 1];
      }
    }
  }
  return (wsum);
}

SpatialFilter::SpatialFilter(const SensorGeometry & geom, const FilterParams & params)
: geometry_(geom),
  width_(geom.width),
  tile_side_(params.tile_side),
  tile_area_(params.tile_area()),
  target_(params.fill_ratio_target),
  q_min_(params.q_min),
  q_max_(params.q_max),
  q_target_(params.q_init),
  regulate_every_(params.regulate_every),
  // one slot above q_max: the new event is pushed before trimming
  queue_(params.q_max + 1)
{
  params.validate(geom);
  if (std::has_single_bit(tile_side_)) {
    tile_shift_ = std::countr_zero(tile_side_);
  }
}

}  // namespace fibar
