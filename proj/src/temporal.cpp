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

#include "fibar/temporal.hpp"

#include <cmath>
#include <string>

#include "fibar/errors.hpp"

namespace fibar
{
double apply_threshold_map(double delta_l_det, double c_prime)
{
  if (!(c_prime > 0) || !std::isfinite(c_prime)) {
    throw DataError("relative threshold must be positive, got " + std::to_string(c_prime));
  }
  return (delta_l_det * c_prime);
}

}  // namespace fibar
