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

#include "fibar/calib.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "fibar/errors.hpp"

namespace fibar
{
namespace
{
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

void EventCounts::merge(const EventCounts & other)
{
  if (!(other.geometry == geometry)) {
    throw ParamError("cannot merge counts of different geometries");
  }
  for (size_t i = 0; i < n_on.size(); i++) {
    n_on[i] += other.n_on[i];
    n_off[i] += other.n_off[i];
  }
  total_on += other.total_on;
  total_off += other.total_off;
}

EventCounts count_events(EventSource & source)
{
  EventCounts c(source.geometry());
  Event e;
  while (source.next(e)) {
    c.add(e);
  }
  return (c);
}

EventCounts count_events(const SensorGeometry & geom, std::span<const Event> events)
{
  EventCounts c(geom);
  for (const auto & e : events) {
    if (!geom.contains(e.x, e.y)) {
      throw DataError("event outside the sensor");
    }
    c.add(e);
  }
  return (c);
}

std::vector<float> ThresholdMap::relative_thresholds() const
{
  std::vector<float> r(c_prime.size(), 1.0f);
  for (size_t i = 0; i < r.size(); i++) {
    if (!excluded[i]) {
      r[i] = static_cast<float>(c_prime[i]);
    }
  }
  return (r);
}

ThresholdMap estimate_thresholds(const EventCounts & counts, double exclusion_quantile)
{
  if (!(exclusion_quantile >= 0 && exclusion_quantile < 0.5)) {
    throw ParamError("exclusion quantile must lie in [0, 0.5)");
  }
  const size_t n = counts.n_on.size();
  ThresholdMap m;
  m.geometry = counts.geometry;
  m.n_on = counts.n_on;
  m.n_off = counts.n_off;
  m.excluded.assign(n, 0);
  std::vector<uint64_t> total(n);
  std::vector<uint32_t> active;
  active.reserve(n);
  for (size_t i = 0; i < n; i++) {
    total[i] = static_cast<uint64_t>(counts.n_on[i]) + counts.n_off[i];
    if (total[i] == 0) {
      m.excluded[i] = 1;  // dead pixel
    } else {
      active.push_back(static_cast<uint32_t>(i));
    }
  }
  // drop the extreme count (hot and cold) pixels, ties broken by pixel index
  std::stable_sort(active.begin(), active.end(), [&total](uint32_t a, uint32_t b) {
    return (total[a] < total[b]);
  });
  const auto k = static_cast<size_t>(std::floor(exclusion_quantile * static_cast<double>(active.size())));
  for (size_t j = 0; j < k; j++) {
    m.excluded[active[j]] = 1;
    m.excluded[active[active.size() - 1 - j]] = 1;
  }
  for (size_t i = 0; i < n; i++) {
    if (!m.excluded[i]) {
      m.included_events += total[i];
      m.n_included++;
    }
  }
  if (m.n_included == 0) {
    throw DataError("no pixels left for threshold estimation");
  }
  const double nbar = m.nbar_tot();
  m.c_prime.assign(n, kNaN);
  m.c_on_prime.assign(n, kNaN);
  m.c_off_prime.assign(n, kNaN);
  for (size_t i = 0; i < n; i++) {
    if (total[i] > 0) {
      // n_tot / N_tot as one rounding of the exact ratio sum / (n_incl * N_tot)
      m.c_prime[i] = static_cast<double>(m.included_events) /
                     (static_cast<double>(m.n_included) * static_cast<double>(total[i]));
    }
    if (counts.n_on[i] > 0) {
      m.c_on_prime[i] = 0.5 * nbar / counts.n_on[i];
    }
    if (counts.n_off[i] > 0) {
      m.c_off_prime[i] = 0.5 * nbar / counts.n_off[i];
    }
  }
  return (m);
}

void write_threshold_map(const ThresholdMap & map, std::ostream & out)
{
  out << "x,y,c_prime,c_on_prime,c_off_prime,n_on,n_off,excluded\n";
  out.precision(17);
  const uint32_t w = map.geometry.width;
  for (size_t i = 0; i < map.c_prime.size(); i++) {
    out << (i % w) << "," << (i / w) << "," << map.c_prime[i] << "," << map.c_on_prime[i] << ","
        << map.c_off_prime[i] << "," << map.n_on[i] << "," << map.n_off[i] << ","
        << static_cast<int>(map.excluded[i]) << "\n";
  }
}

namespace
{
double parse_double(const std::string & s, uint64_t line)
{
  if (s == "nan" || s == "-nan") {
    return (kNaN);
  }
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == s.size()) {
      return (v);
    }
  } catch (const std::logic_error &) {
  }
  throw ParseError("bad number '" + s + "'", line);
}

uint64_t parse_uint(const std::string & s, uint64_t line)
{
  try {
    size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos == s.size() && !s.empty() && s[0] != '-') {
      return (v);
    }
  } catch (const std::logic_error &) {
  }
  throw ParseError("bad integer '" + s + "'", line);
}
}  // namespace

ThresholdMap read_threshold_map(std::istream & in)
{
  struct Row
  {
    uint32_t x, y;
    double c, c_on, c_off;
    uint32_t n_on, n_off;
    uint8_t excl;
  };
  std::vector<Row> rows;
  std::string line;
  uint64_t line_no = 0;
  uint32_t w = 0;
  uint32_t h = 0;
  while (std::getline(in, line)) {
    line_no++;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty() || (line_no == 1 && line.rfind("x,y,", 0) == 0)) {
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      f.push_back(tok);
    }
    if (f.size() != 8) {
      throw ParseError("expected 8 fields", line_no);
    }
    Row r{};
    r.x = static_cast<uint32_t>(parse_uint(f[0], line_no));
    r.y = static_cast<uint32_t>(parse_uint(f[1], line_no));
    r.c = parse_double(f[2], line_no);
    r.c_on = parse_double(f[3], line_no);
    r.c_off = parse_double(f[4], line_no);
    r.n_on = static_cast<uint32_t>(parse_uint(f[5], line_no));
    r.n_off = static_cast<uint32_t>(parse_uint(f[6], line_no));
    r.excl = static_cast<uint8_t>(parse_uint(f[7], line_no) != 0);
    if (r.x >= 0x8000 || r.y >= 0x10000) {
      throw ParseError("coordinate out of range", line_no);
    }
    if (!r.excl && !(r.c > 0 && std::isfinite(r.c))) {
      throw ParseError("included pixel needs a positive c_prime", line_no);
    }
    w = std::max(w, r.x + 1);
    h = std::max(h, r.y + 1);
    rows.push_back(r);
  }
  ThresholdMap m;
  m.geometry = SensorGeometry{w, h};
  if (rows.empty()) {
    throw FormatError("empty threshold map");
  }
  if (m.geometry.width < 2 || m.geometry.height < 2) {
    throw FormatError("threshold map must cover at least 2x2 pixels");
  }
  const size_t n = m.geometry.num_pixels();
  if (rows.size() != n) {
    throw FormatError("threshold map does not cover every pixel exactly once");
  }
  m.c_prime.assign(n, kNaN);
  m.c_on_prime.assign(n, kNaN);
  m.c_off_prime.assign(n, kNaN);
  m.n_on.assign(n, 0);
  m.n_off.assign(n, 0);
  m.excluded.assign(n, 2);  // sentinel for "not seen"
  for (const auto & r : rows) {
    const size_t i = m.geometry.index(r.x, r.y);
    if (m.excluded[i] != 2) {
      throw FormatError("duplicate threshold map entry");
    }
    m.c_prime[i] = r.c;
    m.c_on_prime[i] = r.c_on;
    m.c_off_prime[i] = r.c_off;
    m.n_on[i] = r.n_on;
    m.n_off[i] = r.n_off;
    m.excluded[i] = r.excl;
    if (!r.excl) {
      m.included_events += static_cast<uint64_t>(r.n_on) + r.n_off;
      m.n_included++;
    }
  }
  return (m);
}

ThresholdKind parse_threshold_kind(const std::string & s)
{
  if (s == "c_prime") {
    return (ThresholdKind::CPrime);
  }
  if (s == "c_on_prime") {
    return (ThresholdKind::COnPrime);
  }
  if (s == "c_off_prime") {
    return (ThresholdKind::COffPrime);
  }
  throw ParamError("unknown threshold kind '" + s + "'");
}

std::vector<double> included_values(const ThresholdMap & map, ThresholdKind kind)
{
  const auto & src = kind == ThresholdKind::CPrime
                       ? map.c_prime
                       : (kind == ThresholdKind::COnPrime ? map.c_on_prime : map.c_off_prime);
  std::vector<double> v;
  for (size_t i = 0; i < src.size(); i++) {
    if (!map.excluded[i] && std::isfinite(src[i])) {
      v.push_back(src[i]);
    }
  }
  return (v);
}

uint64_t Histogram::total() const { return (std::accumulate(counts.begin(), counts.end(), uint64_t{0})); }

Histogram histogram(
  std::span<const double> values, uint32_t bins, std::optional<std::pair<double, double>> range)
{
  if (values.empty()) {
    throw DataError("cannot build a histogram of no values");
  }
  if (bins < 1) {
    throw ParamError("histogram needs at least one bin");
  }
  double lo = 0;
  double hi = 0;
  if (range) {
    std::tie(lo, hi) = *range;
    if (!(hi > lo)) {
      throw ParamError("histogram range must be increasing");
    }
  } else {
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    lo = *mn;
    hi = *mx;
    if (!(hi > lo)) {
      // all values equal: center them in the middle bin
      const double half = std::max(std::abs(lo) * 0.05, 1e-9);
      lo -= half;
      hi += half;
    }
  }
  Histogram h;
  h.edges.resize(bins + 1);
  for (uint32_t b = 0; b <= bins; b++) {
    h.edges[b] = lo + (hi - lo) * b / bins;
  }
  h.counts.assign(bins, 0);
  for (const double v : values) {
    if (!(v >= lo && v <= hi)) {
      continue;
    }
    auto b = static_cast<uint32_t>((v - lo) / (hi - lo) * bins);
    h.counts[std::min(b, bins - 1)]++;
  }
  return (h);
}

Histogram histogram(
  const ThresholdMap & map, ThresholdKind kind, uint32_t bins,
  std::optional<std::pair<double, double>> range)
{
  const auto v = included_values(map, kind);
  return (histogram(v, bins, range));
}

void write_histogram(const Histogram & h, std::ostream & out)
{
  out << "bin_lo,bin_hi,count\n";
  out.precision(10);
  for (size_t b = 0; b < h.counts.size(); b++) {
    out << h.edges[b] << "," << h.edges[b + 1] << "," << h.counts[b] << "\n";
  }
}

double harmonic_mean(std::span<const double> values)
{
  double s = 0;
  for (const double v : values) {
    s += 1.0 / v;
  }
  return (static_cast<double>(values.size()) / s);
}

double variance(std::span<const double> values)
{
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double s = 0;
  for (const double v : values) {
    s += (v - mean) * (v - mean);
  }
  return (s / n);
}

}  // namespace fibar
