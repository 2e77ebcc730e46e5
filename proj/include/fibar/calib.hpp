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

#ifndef FIBAR__CALIB_HPP_
#define FIBAR__CALIB_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fibar/core.hpp"
#include "fibar/event_io.hpp"

//
// Relative contrast thresholds from event counts.
//
// Under a stationary, spatially uniform stimulus every pixel sees the same
// cumulative brightness increase |dL| = N_on c_on = N_off c_off. With the
// per-pixel harmonic mean threshold C_i and the global harmonic mean C the
// mean event count is n_tot = 2 |dL| / C, so |dL| cancels from
//
//   C'_i     = C_i / C    = n_tot / (N_on + N_off)
//   C'_on,i  = c_on,i / C = n_tot / (2 N_on)
//   C'_off,i = c_off,i / C = n_tot / (2 N_off)
//
// and the estimate needs nothing but the counts.
//
namespace fibar
{
struct EventCounts
{
  SensorGeometry geometry;
  std::vector<uint32_t> n_on;
  std::vector<uint32_t> n_off;
  uint64_t total_on{0};
  uint64_t total_off{0};

  explicit EventCounts(const SensorGeometry & geom)
  : geometry(geom), n_on(geom.num_pixels(), 0), n_off(geom.num_pixels(), 0)
  {
  }
  void add(const Event & e)
  {
    const uint32_t i = geometry.index(e.x, e.y);
    if (e.polarity > 0) {
      n_on[i]++;
      total_on++;
    } else {
      n_off[i]++;
      total_off++;
    }
  }
  // partial counts over disjoint parts of a stream add up
  void merge(const EventCounts & other);
};

EventCounts count_events(EventSource & source);
EventCounts count_events(const SensorGeometry & geom, std::span<const Event> events);

struct ThresholdMap
{
  SensorGeometry geometry;
  std::vector<double> c_prime;      // NaN where undefined (no events)
  std::vector<double> c_on_prime;   // NaN where N_on == 0
  std::vector<double> c_off_prime;  // NaN where N_off == 0
  std::vector<uint32_t> n_on;
  std::vector<uint32_t> n_off;
  std::vector<uint8_t> excluded;
  // mean total count over the included pixels, kept as the exact ratio
  // included_events / n_included
  uint64_t included_events{0};
  uint64_t n_included{0};

  double nbar_tot() const
  {
    return (static_cast<double>(included_events) / static_cast<double>(n_included));
  }
  // per-pixel scale for the reconstruction, 1 for excluded pixels
  std::vector<float> relative_thresholds() const;
};

// Excludes pixels without events, then the `exclusion_quantile` fraction of
// pixels with the lowest and the highest total counts. Throws Error when
// nothing is left.
ThresholdMap estimate_thresholds(const EventCounts & counts, double exclusion_quantile = 0.01);

// CSV "x,y,c_prime,c_on_prime,c_off_prime,n_on,n_off,excluded"
void write_threshold_map(const ThresholdMap & map, std::ostream & out);
ThresholdMap read_threshold_map(std::istream & in);

enum class ThresholdKind { CPrime, COnPrime, COffPrime };
ThresholdKind parse_threshold_kind(const std::string & s);  // c_prime, c_on_prime, c_off_prime

// values of one kind over the included pixels, skipping undefined entries
std::vector<double> included_values(const ThresholdMap & map, ThresholdKind kind);

struct Histogram
{
  std::vector<double> edges;  // bins + 1 entries
  std::vector<uint64_t> counts;
  uint64_t total() const;
};

// Equal width bins over `range`, or over the data range when not given. The
// last bin includes its upper edge; values outside the range are dropped.
Histogram histogram(
  std::span<const double> values, uint32_t bins,
  std::optional<std::pair<double, double>> range = std::nullopt);
Histogram histogram(
  const ThresholdMap & map, ThresholdKind kind, uint32_t bins,
  std::optional<std::pair<double, double>> range = std::nullopt);
void write_histogram(const Histogram & h, std::ostream & out);

double harmonic_mean(std::span<const double> values);
double variance(std::span<const double> values);

}  // namespace fibar
#endif  // FIBAR__CALIB_HPP_
