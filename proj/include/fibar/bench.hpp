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

#ifndef FIBAR__BENCH_HPP_
#define FIBAR__BENCH_HPP_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fibar/core.hpp"

//
// Single threaded throughput measurement of the reconstruction stages.
//
// Instrumenting each event would distort a loop that runs at a few ns per
// event, so stages are isolated by subtraction: each measured path adds one
// stage to the previous one and the stage cost is the difference of medians.
//
//   decode    parse EVF1 from memory, events discarded
//   temporal  decode + temporal filter            - decode
//   tracking  decode + temporal + queue, no blur  - (decode + temporal)
//   blur      full                                - (decode + temporal + tracking)
//   full      decode + temporal + spatial filter, end to end
//
namespace fibar
{
enum class BenchStage { Decode, Temporal, Tracking, Blur, Full };

BenchStage parse_bench_stage(const std::string & s);
std::string to_string(BenchStage s);

struct BenchReport
{
  BenchStage stage{BenchStage::Full};
  uint64_t events{0};
  double wall_time_s{0};    // median wall time of the stage's measured path
  double ns_per_event{0};   // isolated stage cost
  double mev_per_s{0};      // 1000 / ns_per_event
  double path_ns_per_event{0};  // end to end cost of decode up to and including this stage
  SensorGeometry geometry;
  std::string params_summary;
};

struct BenchOptions
{
  uint32_t repeat{5};
  double t_cut{40.0};
  Rational fill_ratio{1, 2};
};

// median wall time in seconds of the given path over `repeat` runs
double time_decode(std::span<const uint8_t> evf, uint32_t repeat);
double time_path(
  std::span<const uint8_t> evf, const FilterParams & params, bool blur, uint32_t repeat);

// Measures all paths once and derives every stage; `stages` selects the rows returned.
std::vector<BenchReport> run_bench(
  std::span<const uint8_t> evf, const std::vector<BenchStage> & stages, const BenchOptions & opt);

// reference per-event cost reported for the original implementation (ns)
double published_reference_ns(BenchStage s);

// Pins the calling thread to the CPU it runs on. Returns a warning text when
// exclusive use of a core cannot be assumed, empty otherwise.
std::string pin_to_current_cpu();
std::string cpu_model_name();

void write_bench_csv(const std::vector<BenchReport> & reports, std::ostream & out);
void write_bench_text(const std::vector<BenchReport> & reports, std::ostream & out);

}  // namespace fibar
#endif  // FIBAR__BENCH_HPP_
