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

#include "fibar/core.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>

#include "fibar/errors.hpp"

namespace fibar
{
void SensorGeometry::validate() const
{
  if (width < 2 || height < 2) {
    throw ParamError(
      "sensor geometry must be at least 2x2, got " + std::to_string(width) + "x" +
      std::to_string(height));
  }
  if (static_cast<uint64_t>(width) * height > std::numeric_limits<uint32_t>::max()) {
    throw ParamError("sensor pixel count does not fit 32 bits");
  }
  // events carry 15 bits of x in the binary format and 16 bits of y
  if (width > 0x8000 || height > 0x10000) {
    throw ParamError("sensor geometry exceeds event coordinate range");
  }
}

Rational parse_rational(const char * s)
{
  const std::string str(s);
  try {
    const auto slash = str.find('/');
    if (slash != std::string::npos) {
      size_t pos = 0;
      const auto num = std::stoull(str.substr(0, slash), &pos);
      const auto den = std::stoull(str.substr(slash + 1), &pos);
      if (den == 0) {
        throw ParamError("zero denominator in " + str);
      }
      return (Rational{num, den}.reduced());
    }
    // decimal: scale by a power of ten so the ratio stays exact
    size_t pos = 0;
    const double v = std::stod(str, &pos);
    if (pos != str.size() || !(v >= 0)) {
      throw ParamError("cannot parse ratio " + str);
    }
    const auto dot = str.find('.');
    const size_t decimals = dot == std::string::npos ? 0 : str.size() - dot - 1;
    if (decimals > 9) {
      throw ParamError("too many decimals in " + str);
    }
    uint64_t den = 1;
    for (size_t i = 0; i < decimals; i++) {
      den *= 10;
    }
    return (Rational{static_cast<uint64_t>(std::llround(v * static_cast<double>(den))), den}
              .reduced());
  } catch (const std::logic_error &) {
    throw ParamError("cannot parse ratio " + str);
  }
}

void FilterParams::validate(const SensorGeometry & geom) const
{
  geom.validate();
  if (!(t_cut > 4.0) || !std::isfinite(t_cut)) {
    throw ParamError("t_cut must be a finite value > 4, got " + std::to_string(t_cut));
  }
  if (!(alpha > 0 && alpha < 1 && beta > 0 && beta < 1)) {
    throw ParamError("filter coefficients must lie in (0, 1)");
  }
  if (tile_side < 1 || tile_side > 15) {
    throw ParamError("tile side must be in [1, 15]");
  }
  const uint64_t area = tile_area();
  if (
    fill_ratio_target.den == 0 || fill_ratio_target.num * area < fill_ratio_target.den ||
    fill_ratio_target.num > fill_ratio_target.den) {
    throw ParamError(
      "fill ratio target must be in [1/" + std::to_string(area) + ", 1], got " +
      std::to_string(fill_ratio_target.to_double()));
  }
  if (q_min < 1 || q_max > geom.num_pixels() || q_min > q_max) {
    throw ParamError("queue bounds must satisfy 1 <= q_min <= q_max <= n_pix");
  }
  if (q_init < q_min || q_init > q_max) {
    throw ParamError("initial queue target must lie within [q_min, q_max]");
  }
  if (regulate_every < 1) {
    throw ParamError("regulation cadence must be >= 1");
  }
}

double omega_from_tcut(double t_cut) { return (2.0 * std::numbers::pi / t_cut); }

// |H_alpha|^2 drops to half its maximum (at omega = pi) at omega_cut
double alpha_from_omega(double omega_cut)
{
  return ((1.0 - std::sin(omega_cut)) / std::cos(omega_cut));
}

// |H_beta|^2 drops to half its maximum (at omega = 0) at omega_cut
double beta_from_omega(double omega_cut)
{
  // 1 - cos(omega) without cancellation, so long cutoff periods keep their digits
  const double s = std::sin(0.5 * omega_cut);
  const double h = 2.0 * s * s;
  return (1.0 + h - std::sqrt(h * (2.0 + h)));
}

FilterParams compute_params(
  double t_cut, Rational fill_ratio_target, const SensorGeometry & geom, uint32_t tile_side)
{
  geom.validate();
  if (!(t_cut > 4.0) || !std::isfinite(t_cut)) {
    // for omega_cut >= pi/2 the alpha formula leaves (0, 1)
    throw ParamError("t_cut must be a finite value > 4, got " + std::to_string(t_cut));
  }
  FilterParams p;
  p.t_cut = t_cut;
  p.omega_cut = omega_from_tcut(t_cut);
  p.alpha = alpha_from_omega(p.omega_cut);
  p.beta = beta_from_omega(p.omega_cut);
  p.fill_ratio_target = fill_ratio_target.reduced();
  p.tile_side = tile_side;
  const uint32_t n_pix = geom.num_pixels();
  p.q_max = n_pix;
  p.q_min = std::min<uint32_t>(256, n_pix);
  p.q_init = std::clamp(n_pix / 16, p.q_min, p.q_max);
  p.validate(geom);
  return (p);
}

double suggest_tcut(uint64_t n_on, uint64_t n_off)
{
  if (n_on == 0 && n_off == 0) {
    throw ParamError("cannot suggest a cutoff period without any events");
  }
  return (4.0 * static_cast<double>(std::max(n_on, n_off)));
}

BodeGain bode_gain(double omega, double alpha, double beta)
{
  using cplx = std::complex<double>;
  const cplx z = std::polar(1.0, omega);
  const cplx h_alpha = alpha * (z - 1.0) / (z - alpha);
  const cplx h_beta = z * (1.0 + beta) / (2.0 * (z - beta));
  BodeGain g;
  g.alpha = std::abs(h_alpha);
  g.beta = std::abs(h_beta);
  g.total = std::abs(h_alpha * h_beta);
  return (g);
}

}  // namespace fibar
