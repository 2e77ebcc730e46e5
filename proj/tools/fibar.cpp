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

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fibar/bench.hpp"
#include "fibar/calib.hpp"
#include "fibar/core.hpp"
#include "fibar/errors.hpp"
#include "fibar/event_io.hpp"
#include "fibar/pipeline.hpp"
#include "fibar/synth.hpp"
#include "fibar/temporal.hpp"

namespace fs = std::filesystem;
using namespace fibar;

namespace
{
constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitParam = 2;
constexpr int kExitFormat = 3;
constexpr int kExitInvariant = 4;

void setup_logging()
{
  auto logger = spdlog::stderr_color_mt("fibar");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char * env = std::getenv("FIBAR_LOG")) {
    spdlog::set_level(spdlog::level::from_str(env));
  }
}

// geometry for CSV input, which does not carry one
struct GeometryFlags
{
  uint32_t width{0};
  uint32_t height{0};

  void add_to(CLI::App * app)
  {
    app->add_option("--width", width, "sensor width, required for CSV input");
    app->add_option("--height", height, "sensor height, required for CSV input");
  }
  std::optional<SensorGeometry> get() const
  {
    if (width == 0 && height == 0) {
      return (std::nullopt);
    }
    return (SensorGeometry{width, height});
  }
};

// "-" means stdout
class OutputFile
{
public:
  explicit OutputFile(const std::string & path)
  {
    if (path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) {
        throw Error("cannot open " + path + " for writing");
      }
    }
  }
  std::ostream & stream() { return (file_.is_open() ? static_cast<std::ostream &>(file_) : std::cout); }
  void close()
  {
    stream().flush();
    if (!stream()) {
      throw Error("write failed");
    }
  }

private:
  std::ofstream file_;
};

std::vector<uint8_t> read_file(const std::string & path)
{
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw Error("cannot open " + path);
  }
  return (std::vector<uint8_t>(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()));
}

std::vector<uint64_t> read_times(const std::string & path)
{
  std::ifstream f(path);
  if (!f) {
    throw Error("cannot open " + path);
  }
  std::vector<uint64_t> t;
  std::string line;
  uint64_t n = 0;
  while (std::getline(f, line)) {
    n++;
    if (line.empty() || line[0] == '#') {
      continue;
    }
    try {
      size_t pos = 0;
      t.push_back(std::stoull(line, &pos));
      if (pos != line.size()) {
        throw ParseError("expected one integer time per line", n);
      }
    } catch (const std::logic_error &) {
      throw ParseError("expected one integer time per line", n);
    }
  }
  return (t);
}

std::pair<uint32_t, uint32_t> parse_pixel(const std::string & s)
{
  const auto comma = s.find(',');
  try {
    if (comma != std::string::npos) {
      size_t p1 = 0;
      size_t p2 = 0;
      const std::string a = s.substr(0, comma);
      const std::string b = s.substr(comma + 1);
      const auto x = std::stoul(a, &p1);
      const auto y = std::stoul(b, &p2);
      if (p1 == a.size() && p2 == b.size()) {
        return {static_cast<uint32_t>(x), static_cast<uint32_t>(y)};
      }
    }
  } catch (const std::logic_error &) {
  }
  throw ParamError("pixel must be given as x,y, got '" + s + "'");
}

void write_active_image(const ReconstructionEngine & engine, const std::string & path)
{
  Frame f;
  f.width = engine.geometry().width;
  f.height = engine.geometry().height;
  const auto iap = engine.active_image();
  f.pixels.resize(iap.size());
  for (size_t i = 0; i < iap.size(); i++) {
    f.pixels[i] = static_cast<uint8_t>(std::min<uint16_t>(iap[i], 255));
  }
  write_pgm(f, path);
}

// ---------------- reconstruct

struct ReconstructCmd
{
  std::string input;
  std::string out{"frames"};
  double tcut{40.0};
  std::string fill{"0.5"};
  bool no_spatial{false};
  double fps{40.0};
  std::string readout_times;
  std::optional<uint64_t> end_time;
  std::string scale{"robust"};
  std::string threshold_map;
  std::string diagnostics;
  bool strict{false};
  bool iap{false};
  uint32_t tile_side{2};
  uint32_t regulate_every{1};
  GeometryFlags geom;

  void add(CLI::App & app)
  {
    auto * c = app.add_subcommand("reconstruct", "reconstruct frames from an event file");
    c->add_option("-i,--input", input, "input event file (.evf or .csv)")->required();
    c->add_option("-o,--out", out, "output directory for PGM frames")->capture_default_str();
    c->add_option("--tcut", tcut, "cutoff period in events (> 4)")->capture_default_str();
    c->add_option("--fill-ratio", fill, "target fill ratio, decimal or n/d")->capture_default_str();
    c->add_flag("--no-spatial", no_spatial, "temporal filter only");
    auto * fps_opt = c->add_option("--fps", fps, "read-out rate in Hz")->capture_default_str();
    c->add_option("--readout-times", readout_times, "file with one read-out time (us) per line")
      ->excludes(fps_opt);
    c->add_option("--end-time", end_time, "keep reading out at the frame rate until this time (us)");
    c->add_option("--scale", scale, "robust or fixed:<a>")->capture_default_str();
    c->add_option("--threshold-map", threshold_map, "relative threshold map CSV from 'calib'");
    c->add_option("--diagnostics", diagnostics, "per-frame diagnostics CSV");
    c->add_flag("--strict", strict, "abort on events outside the sensor");
    c->add_flag("--iap", iap, "also write the image of active pixels per frame");
    c->add_option("--tile-side", tile_side, "tile side for the fill ratio")->capture_default_str();
    c->add_option("--regulate-every", regulate_every, "queue regulation cadence in events")
      ->capture_default_str();
    geom.add_to(c);
    c->callback([this]() { run(); });
  }

  void run()
  {
    auto source = open_event_file(input, geom.get());
    const SensorGeometry g = source->geometry();
    FilterParams params = compute_params(tcut, parse_rational(fill.c_str()), g, tile_side);
    params.spatial_enabled = !no_spatial;
    params.regulate_every = regulate_every;
    ReconstructionEngine engine(g, params, strict);
    if (!threshold_map.empty()) {
      std::ifstream f(threshold_map);
      if (!f) {
        throw Error("cannot open " + threshold_map);
      }
      const ThresholdMap m = read_threshold_map(f);
      if (!(m.geometry == g)) {
        throw ParamError("threshold map geometry does not match the input");
      }
      engine.set_threshold_map(m.relative_thresholds());
    }
    RunOptions opt;
    opt.scale = parse_scale_mode(scale);
    opt.end_time = end_time;
    ReadoutClock clock =
      readout_times.empty() ? ReadoutClock::from_fps(fps) : ReadoutClock::from_times(read_times(readout_times));
    fs::create_directories(out);
    std::unique_ptr<OutputFile> diag;
    if (!diagnostics.empty()) {
      diag = std::make_unique<OutputFile>(diagnostics);
      write_diagnostics_header(diag->stream());
    }
    spdlog::info(
      "{}x{} t_cut={} alpha={:.6f} beta={:.6f} spatial={} scale={}", g.width, g.height, tcut,
      params.alpha, params.beta, params.spatial_enabled ? "on" : "off", opt.scale.to_string());
    const RunStats stats =
      fibar::run(*source, engine, std::move(clock), opt, [&](const Frame & f, const FrameDiagnostics & d) {
        write_pgm(f, (fs::path(out) / frame_file_name(d.frame_index)).string());
        if (iap) {
          char name[32];
          std::snprintf(name, sizeof(name), "iap_%06llu.pgm", static_cast<unsigned long long>(d.frame_index));
          write_active_image(engine, (fs::path(out) / name).string());
        }
        if (diag) {
          write_diagnostics_row(diag->stream(), d);
        }
        spdlog::debug("frame {} t={} events={} q={}", d.frame_index, d.readout_time, d.events, d.q_target);
      });
    if (diag) {
      diag->close();
    }
    if (engine.spatial_enabled() && engine.spatial().invariant_violations() > 0) {
      throw InvariantError("active event counter underflow detected");
    }
    spdlog::info(
      "{} events, {} rejected, {} frames written to {}", stats.events, stats.rejected, stats.frames, out);
  }
};

// ---------------- synth

struct SynthCmd
{
  std::string scene_name{"triangle"};
  SceneSignal scene;
  uint32_t width{64};
  uint32_t height{64};
  double c_on{0.1};
  std::optional<double> c_off;
  double sigma{0.0};
  double imbalance{0.0};
  uint64_t seed{0};
  uint64_t refractory_us{0};
  std::string out;
  std::string truth;

  void add(CLI::App & app)
  {
    auto * c = app.add_subcommand("synth", "generate events from an ideal sensor");
    c->add_option("--scene", scene_name, "triangle, edge or sinusoid")->capture_default_str();
    c->add_option("--width", width, "sensor width")->capture_default_str();
    c->add_option("--height", height, "sensor height")->capture_default_str();
    c->add_option("--amplitude", scene.amplitude, "peak to peak log brightness")->capture_default_str();
    c->add_option("--period", scene.period, "triangle period in seconds")->capture_default_str();
    c->add_option("--speed", scene.speed, "pattern speed in pixels/s")->capture_default_str();
    c->add_option("--wavelength", scene.wavelength, "spatial period in pixels")->capture_default_str();
    c->add_option("--ramp-width", scene.ramp_width, "edge ramp width in pixels")->capture_default_str();
    c->add_option("--angle", scene.angle, "direction of motion in radians")->capture_default_str();
    c->add_option("--duration", scene.duration, "seconds")->capture_default_str();
    c->add_option("--sample-rate", scene.sample_rate, "Hz")->capture_default_str();
    c->add_option("--c-on", c_on, "mean ON threshold")->capture_default_str();
    c->add_option("--c-off", c_off, "mean OFF threshold (default: same as ON)");
    c->add_option("--sigma", sigma, "log-normal spread of the per-pixel thresholds")->capture_default_str();
    c->add_option("--imbalance", imbalance, "anti-correlated per-pixel ON/OFF spread")->capture_default_str();
    c->add_option("--seed", seed, "random seed for the threshold map")->capture_default_str();
    c->add_option("--refractory-us", refractory_us, "per-pixel dead time")->capture_default_str();
    c->add_option("-o,--out", out, "output event file (.evf or .csv)")->required();
    c->add_option("--truth", truth, "write the true per-pixel thresholds to this CSV");
    c->callback([this]() { run(); });
  }

  void run()
  {
    scene.kind = parse_scene_kind(scene_name);
    const SensorGeometry g{width, height};
    g.validate();
    const double off = c_off.value_or(c_on);
    if (!(c_on > 0) || !(off > 0)) {
      throw ParamError("thresholds must be positive");
    }
    IdealSensorConfig sensor = sigma == 0 && imbalance == 0
                                 ? make_uniform_sensor(g, c_on, off)
                                 : make_lognormal_sensor(g, c_on, sigma, seed, imbalance, off / c_on);
    sensor.refractory_us = refractory_us;
    sensor.seed = seed;
    OutputFile file(out);
    uint64_t n = 0;
    if (format_from_path(out) == EventFormat::Csv) {
      CsvWriter w(file.stream());
      n = generate(scene, sensor, [&w](const Event & e) { w.write(e); });
    } else {
      EvfWriter w(file.stream(), g);
      n = generate(scene, sensor, [&w](const Event & e) { w.write(e); });
      w.flush();
    }
    file.close();
    if (!truth.empty()) {
      OutputFile t(truth);
      auto & os = t.stream();
      os << "x,y,c_on,c_off,c_harmonic\n";
      os.precision(17);
      for (uint32_t i = 0; i < g.num_pixels(); i++) {
        os << i % g.width << "," << i / g.width << "," << sensor.c_on[i] << "," << sensor.c_off[i] << ","
           << harmonic_threshold(sensor.c_on[i], sensor.c_off[i]) << "\n";
      }
      t.close();
    }
    spdlog::info("{} scene, {}x{}, {} events written to {}", scene_name, width, height, n, out);
  }
};

// ---------------- calib

struct CalibCmd
{
  std::string input;
  std::string out;
  std::string hist_out;
  double quantile{0.01};
  uint32_t bins{50};
  std::string kind{"c_prime"};
  std::vector<double> range;
  GeometryFlags geom;

  void add(CLI::App & app)
  {
    auto * c = app.add_subcommand("calib", "estimate relative contrast thresholds from event counts");
    c->add_option("-i,--input", input, "event file recorded under uniform periodic stimulus")->required();
    c->add_option("-o,--out", out, "threshold map CSV")->required();
    c->add_option("--exclude-quantile", quantile, "fraction of extreme count pixels dropped at each end")
      ->capture_default_str();
    c->add_option("--histogram", hist_out, "histogram CSV");
    c->add_option("--bins", bins, "histogram bins")->capture_default_str();
    c->add_option("--kind", kind, "c_prime, c_on_prime or c_off_prime")->capture_default_str();
    c->add_option("--range", range, "histogram range lo hi")->expected(2)->delimiter(',');
    geom.add_to(c);
    c->callback([this]() { run(); });
  }

  void run()
  {
    auto source = open_event_file(input, geom.get());
    const EventCounts counts = count_events(*source);
    const ThresholdMap map = estimate_thresholds(counts, quantile);
    OutputFile f(out);
    write_threshold_map(map, f.stream());
    f.close();
    if (!hist_out.empty()) {
      std::optional<std::pair<double, double>> r;
      if (range.size() == 2) {
        r = std::make_pair(range[0], range[1]);
      }
      OutputFile h(hist_out);
      write_histogram(histogram(map, parse_threshold_kind(kind), bins, r), h.stream());
      h.close();
    }
    spdlog::info(
      "{} ON / {} OFF events, {} of {} pixels included, mean count {:.3f}", counts.total_on,
      counts.total_off, map.n_included, counts.geometry.num_pixels(), map.nbar_tot());
  }
};

// ---------------- bench

struct BenchCmd
{
  std::string input;
  std::vector<std::string> stages{"all"};
  BenchOptions opt;
  std::string fill{"0.5"};
  std::string csv;
  double synth_duration{1.5};

  void add(CLI::App & app)
  {
    auto * c = app.add_subcommand("bench", "single threaded throughput of the reconstruction stages");
    c->add_option("-i,--input", input, "EVF1 file (default: synthetic VGA moving edge)");
    c->add_option("--stage", stages, "decode, temporal, tracking, blur, full or all")
      ->capture_default_str();
    c->add_option("--repeat", opt.repeat, "runs per path, the median is reported")->capture_default_str();
    c->add_option("--tcut", opt.t_cut, "cutoff period in events")->capture_default_str();
    c->add_option("--fill-ratio", fill, "target fill ratio")->capture_default_str();
    c->add_option("--csv", csv, "also write the report as CSV");
    c->add_option("--synth-duration", synth_duration, "seconds of synthetic input when no file is given")
      ->capture_default_str();
    c->callback([this]() { run(); });
  }

  void run()
  {
    std::vector<BenchStage> sel;
    for (const auto & s : stages) {
      if (s == "all") {
        sel = {BenchStage::Decode, BenchStage::Temporal, BenchStage::Tracking, BenchStage::Blur,
               BenchStage::Full};
      } else {
        sel.push_back(parse_bench_stage(s));
      }
    }
    opt.fill_ratio = parse_rational(fill.c_str());
    std::vector<uint8_t> evf;
    if (input.empty()) {
      evf = synthetic_input();
    } else {
      evf = read_file(input);
    }
    const std::string warn = pin_to_current_cpu();
    if (!warn.empty()) {
      spdlog::warn("{}", warn);
    }
    const auto reports = run_bench(evf, sel, opt);
    write_bench_text(reports, std::cout);
    if (!csv.empty()) {
      OutputFile f(csv);
      write_bench_csv(reports, f.stream());
      f.close();
    }
  }

  std::vector<uint8_t> synthetic_input() const
  {
    const SensorGeometry g{640, 480};
    SceneSignal s;
    s.kind = SceneKind::MovingEdge;
    s.amplitude = 1.0;
    s.angle = 0.5;
    s.speed = 100;
    s.duration = synth_duration;
    s.sample_rate = 1250;
    std::ostringstream bytes;
    EvfWriter w(bytes, g);
    const uint64_t n = generate(s, make_uniform_sensor(g, 0.1, 0.1), [&w](const Event & e) { w.write(e); });
    w.flush();
    spdlog::info("synthetic input: {} events", n);
    const std::string str = bytes.str();
    return (std::vector<uint8_t>(str.begin(), str.end()));
  }
};

// ---------------- bode

struct BodeCmd
{
  double tcut{40.0};
  uint32_t points{200};
  std::string out{"-"};

  void add(CLI::App & app)
  {
    auto * c = app.add_subcommand("bode", "magnitude response of the temporal filter");
    c->add_option("--tcut", tcut, "cutoff period in events (> 4)")->capture_default_str();
    c->add_option("--points", points, "log spaced frequencies in [1e-4 pi, pi]")->capture_default_str();
    c->add_option("-o,--out", out, "output CSV, - for stdout")->capture_default_str();
    c->callback([this]() { run(); });
  }

  void run()
  {
    if (points < 2) {
      throw ParamError("need at least 2 points");
    }
    const SensorGeometry g{2, 2};
    const FilterParams p = compute_params(tcut, Rational{1, 2}, g);
    OutputFile f(out);
    auto & os = f.stream();
    os << "omega,gain_alpha,gain_beta,gain_total\n";
    os.precision(12);
    const double lo = std::log(1e-4 * std::numbers::pi);
    const double hi = std::log(std::numbers::pi);
    for (uint32_t k = 0; k < points; k++) {
      const double w = k + 1 == points ? std::numbers::pi : std::exp(lo + (hi - lo) * k / (points - 1));
      const BodeGain b = bode_gain(w, p);
      os << w << "," << b.alpha << "," << b.beta << "," << b.total << "\n";
    }
    f.close();
  }
};

// ---------------- trace

struct TraceCmd
{
  std::string input;
  std::string pixel;
  double tcut{40.0};
  std::optional<double> c_on;
  std::optional<double> c_off;
  std::string out{"-"};
  GeometryFlags geom;

  void add(CLI::App & app)
  {
    auto * c = app.add_subcommand("trace", "per event filter trajectory of one pixel");
    c->add_option("-i,--input", input, "event file")->required();
    c->add_option("--pixel", pixel, "x,y")->required();
    c->add_option("--tcut", tcut, "cutoff period in events (> 4)")->capture_default_str();
    auto * on = c->add_option("--c-on", c_on, "true ON threshold, adds l_calib");
    auto * off = c->add_option("--c-off", c_off, "true OFF threshold, adds l_calib");
    on->needs(off);
    off->needs(on);
    c->add_option("-o,--out", out, "output CSV, - for stdout")->capture_default_str();
    geom.add_to(c);
    c->callback([this]() { run(); });
  }

  void run()
  {
    const auto [x, y] = parse_pixel(pixel);
    auto source = open_event_file(input, geom.get());
    const SensorGeometry g = source->geometry();
    if (!g.contains(x, y)) {
      throw ParamError("pixel outside the sensor");
    }
    const FilterParams p = compute_params(tcut, Rational{1, 2}, g);
    // temporal filter only, exactly as the engine stores it
    const TemporalCoeffs<float> coeffs(p);
    PixelState s;
    double l_simple = 0;
    double l_calib = 0;
    OutputFile f(out);
    auto & os = f.stream();
    os << "k,t,p,p_bar,delta,l,l_simple" << (c_on ? ",l_calib" : "") << "\n";
    os.precision(9);
    uint64_t k = 0;
    Event e;
    while (source->next(e)) {
      if (e.x != x || e.y != y) {
        continue;
      }
      k++;
      const float delta = update_pixel(s, e.polarity, coeffs);
      l_simple += e.polarity;
      os << k << "," << e.t << "," << int(e.polarity) << "," << s.p_bar << "," << delta << "," << s.l
         << "," << l_simple;
      if (c_on) {
        l_calib += e.polarity > 0 ? *c_on : -*c_off;
        os << "," << l_calib;
      }
      os << "\n";
    }
    f.close();
  }
};

int exit_code_of(const std::exception & e)
{
  if (dynamic_cast<const ParamError *>(&e)) {
    return (kExitParam);
  }
  if (dynamic_cast<const FormatError *>(&e)) {
    return (kExitFormat);
  }
  if (dynamic_cast<const InvariantError *>(&e)) {
    return (kExitInvariant);
  }
  return (kExitIo);
}
}  // namespace

int main(int argc, char ** argv)
{
  setup_logging();
  CLI::App app{"fibar: event camera image reconstruction toolkit"};
  app.require_subcommand(1);
  // options of any subcommand, keys in a [subcommand] section
  app.set_config("--config", "", "INI/TOML file with option values, e.g. [synth] width=64");
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::error);
  ReconstructCmd reconstruct;
  SynthCmd synth;
  CalibCmd calib;
  BenchCmd bench;
  BodeCmd bode;
  TraceCmd trace;
  reconstruct.add(app);
  synth.add(app);
  calib.add(app);
  bench.add(app);
  bode.add(app);
  trace.add(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    return (app.exit(e));
  } catch (const CLI::CallForAllHelp & e) {
    return (app.exit(e));
  } catch (const CLI::ParseError & e) {
    app.exit(e);
    return (kExitParam);
  } catch (const std::exception & e) {
    spdlog::error("{}", e.what());
    return (exit_code_of(e));
  }
  return (kExitOk);
}
