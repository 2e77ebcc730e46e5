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
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "fibar/calib.hpp"
#include "fibar/event_io.hpp"
#include "fibar/pipeline.hpp"
#include "fibar/synth.hpp"

namespace fs = std::filesystem;
using namespace fibar;

namespace
{
class Cli : public ::testing::Test
{
protected:
  void SetUp() override
  {
    const auto * info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("fibar_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string & name) const { return ((dir_ / name).string()); }

  int fibar(const std::string & args, const std::string & stdout_to = "") const
  {
    std::string cmd = std::string(FIBAR_CLI_PATH) + " " + args;
    cmd += stdout_to.empty() ? " > /dev/null" : " > " + stdout_to;
    cmd += " 2> " + path("stderr.txt");
    const int rc = std::system(cmd.c_str());
    return (WIFEXITED(rc) ? WEXITSTATUS(rc) : -1);
  }

  static std::string slurp(const std::string & p)
  {
    std::ifstream f(p, std::ios::binary);
    return (std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()));
  }

  static std::vector<std::string> lines(const std::string & p)
  {
    std::ifstream f(p);
    std::vector<std::string> out;
    std::string l;
    while (std::getline(f, l)) {
      out.push_back(l);
    }
    return (out);
  }

  std::string triangle_evf(const std::string & extra = "") const
  {
    const std::string out = path("tri.evf");
    EXPECT_EQ(
      fibar(
        "synth --scene triangle --width 8 --height 6 --amplitude 2 --duration 2 --sample-rate 1000 "
        "--out " + out + " " + extra),
      0);
    return (out);
  }

  fs::path dir_;
};
}  // namespace

TEST_F(Cli, HelpAndUsageErrors)
{
  EXPECT_EQ(fibar("--help"), 0);
  EXPECT_EQ(fibar("reconstruct --help", path("help.txt")), 0);
  const std::string help = slurp(path("help.txt"));
  for (const char * flag : {"--input", "--out", "--tcut", "--fill-ratio", "--no-spatial", "--fps",
                            "--scale", "--threshold-map", "--diagnostics", "--strict"}) {
    EXPECT_NE(help.find(flag), std::string::npos) << flag;
  }
  EXPECT_EQ(fibar(""), 2);
  EXPECT_EQ(fibar("frobnicate"), 2);
  EXPECT_EQ(fibar("bode --no-such-flag"), 2);
  EXPECT_EQ(fibar("reconstruct"), 2);
}

TEST_F(Cli, SynthIsDeterministic)
{
  const std::string a = path("a.evf");
  const std::string b = path("b.evf");
  const std::string args =
    "synth --scene edge --width 32 --height 24 --amplitude 1 --duration 0.2 --sample-rate 2000 "
    "--sigma 0.1 --seed 5 --out ";
  ASSERT_EQ(fibar(args + a), 0);
  ASSERT_EQ(fibar(args + b), 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_GT(slurp(a).size(), kEvfHeaderSize);

  ASSERT_EQ(fibar(args + path("c.csv")), 0);
  std::ifstream csv(path("c.csv"));
  std::ifstream evf(a, std::ios::binary);
  EXPECT_EQ(read_csv(csv), read_stream(evf).events);
}

TEST_F(Cli, SynthRejectsBadScene)
{
  EXPECT_EQ(fibar("synth --scene square --out " + path("x.evf")), 2);
  EXPECT_EQ(fibar("synth --amplitude 2 --sample-rate 10 --out " + path("x.evf")), 2);
  EXPECT_EQ(fibar("synth --width 1 --out " + path("x.evf")), 2);
}

TEST_F(Cli, SynthConfigFile)
{
  {
    std::ofstream cfg(path("scene.ini"));
    cfg << "[synth]\nscene=triangle\nwidth=4\nheight=4\namplitude=2\nduration=1\nsample-rate=1000\n";
  }
  {
    std::ofstream cfg(path("typo.ini"));
    cfg << "[synth]\nwidht=4\n";
  }
  EXPECT_EQ(fibar("synth --config " + path("typo.ini") + " --out " + path("cfg.evf")), 2);
  ASSERT_EQ(fibar("synth --config " + path("scene.ini") + " --out " + path("cfg.evf")), 0);
  std::ifstream in(path("cfg.evf"), std::ios::binary);
  const auto s = read_stream(in);
  EXPECT_EQ(s.geometry, (SensorGeometry{4, 4}));
  // 16 pixels, about 20 ON and 20 OFF each
  EXPECT_NEAR(static_cast<double>(s.events.size()), 16 * 40, 40);
}

TEST_F(Cli, ReconstructWritesFramesAtDefaultRate)
{
  const std::string evf = triangle_evf();
  const std::string out = path("frames");
  ASSERT_EQ(fibar("reconstruct --input " + evf + " --out " + out + " --diagnostics " + path("d.csv")), 0);
  size_t n = 0;
  for (const auto & e : fs::directory_iterator(out)) {
    EXPECT_EQ(e.path().extension(), ".pgm");
    n++;
  }
  // 2 s at 40 fps, the last read-out at or after the last event
  EXPECT_GE(n, 79u);
  EXPECT_LE(n, 80u);
  EXPECT_TRUE(fs::exists(fs::path(out) / "frame_000000.pgm"));
  const auto d = lines(path("d.csv"));
  ASSERT_EQ(d.size(), n + 1);
  EXPECT_EQ(d[0].rfind("frame", 0), 0u);
}

TEST_F(Cli, NoSpatialMatchesTemporalOracle)
{
  const std::string evf = triangle_evf("--sigma 0.2 --seed 3");
  ASSERT_EQ(fibar("reconstruct --no-spatial --fps 10 --input " + evf + " --out " + path("f")), 0);

  std::ifstream in(evf, std::ios::binary);
  const auto s = read_stream(in);
  const FilterParams p = compute_params(40, Rational{1, 2}, s.geometry);
  const TemporalCoeffs<float> c(p);
  std::vector<PixelState> grid(s.geometry.num_pixels());
  size_t k = 0;
  uint64_t frame = 0;
  auto check = [&](uint64_t t) {
    std::ostringstream pgm;
    write_pgm(render_state(grid, s.geometry, ScaleMode::robust(), t), pgm);
    EXPECT_EQ(slurp((fs::path(path("f")) / frame_file_name(frame)).string()), pgm.str()) << frame;
    frame++;
  };
  for (uint64_t t = 100000;; t += 100000) {
    while (k < s.events.size() && s.events[k].t < t) {
      const Event & e = s.events[k++];
      update_pixel(grid[s.geometry.index(e.x, e.y)], e.polarity, c);
    }
    check(t);
    if (t >= s.events.back().t) {
      break;
    }
  }
  EXPECT_FALSE(fs::exists(fs::path(path("f")) / frame_file_name(frame)));
}

TEST_F(Cli, ReconstructOptions)
{
  const std::string evf = triangle_evf();
  {
    std::ofstream t(path("times.txt"));
    t << "# read-out times\n500000\n1500000\n";
  }
  ASSERT_EQ(
    fibar(
      "reconstruct --input " + evf + " --out " + path("r") + " --readout-times " + path("times.txt") +
      " --scale fixed:2 --fill-ratio 1/2 --iap"),
    0);
  EXPECT_TRUE(fs::exists(path("r") + "/frame_000001.pgm"));
  EXPECT_FALSE(fs::exists(path("r") + "/frame_000002.pgm"));
  EXPECT_TRUE(fs::exists(path("r") + "/iap_000001.pgm"));

  EXPECT_EQ(fibar("reconstruct --input " + evf + " --out " + path("r") + " --tcut 4"), 2);
  EXPECT_EQ(fibar("reconstruct --input " + evf + " --out " + path("r") + " --scale weird"), 2);
  EXPECT_EQ(fibar("reconstruct --input " + evf + " --out " + path("r") + " --fill-ratio 2"), 2);
  EXPECT_EQ(fibar("reconstruct --input " + evf + " --out " + path("r") + " --fps 0"), 2);
}

TEST_F(Cli, ReconstructFormatErrors)
{
  const std::string evf = triangle_evf();
  std::string bytes = slurp(evf);
  {
    std::ofstream t(path("trunc.evf"), std::ios::binary);
    t << bytes.substr(0, bytes.size() - 5);
  }
  EXPECT_EQ(fibar("reconstruct --input " + path("trunc.evf") + " --out " + path("r")), 3);
  {
    std::ofstream t(path("junk.evf"), std::ios::binary);
    t << "not an event file";
  }
  EXPECT_EQ(fibar("reconstruct --input " + path("junk.evf") + " --out " + path("r")), 3);
  EXPECT_EQ(fibar("reconstruct --input " + path("missing.evf") + " --out " + path("r")), 1);
  {
    std::ofstream t(path("e.csv"));
    t << "t_us,x,y,p\n1,1,1,1\n2,9,1,1\n";
  }
  // CSV input needs a geometry
  EXPECT_EQ(fibar("reconstruct --input " + path("e.csv") + " --out " + path("r")), 2);
  EXPECT_EQ(
    fibar("reconstruct --width 4 --height 4 --input " + path("e.csv") + " --out " + path("r")), 3);
}

TEST_F(Cli, CalibAndThresholdMap)
{
  const std::string evf = path("cal.evf");
  ASSERT_EQ(
    fibar(
      "synth --scene triangle --width 16 --height 8 --amplitude 8 --duration 20 --sample-rate 1000 "
      "--sigma 0.1 --seed 7 --out " + evf + " --truth " + path("truth.csv")),
    0);
  ASSERT_EQ(
    fibar(
      "calib --input " + evf + " --out " + path("map.csv") + " --histogram " + path("h.csv") +
      " --bins 10 --range 0.5,1.5"),
    0);
  std::ifstream m(path("map.csv"));
  const ThresholdMap map = read_threshold_map(m);
  EXPECT_EQ(map.geometry, (SensorGeometry{16, 8}));
  const auto truth = lines(path("truth.csv"));
  ASSERT_EQ(truth.size(), 129u);
  EXPECT_EQ(truth[0], "x,y,c_on,c_off,c_harmonic");
  const auto h = lines(path("h.csv"));
  EXPECT_EQ(h.size(), 11u);

  ASSERT_EQ(
    fibar(
      "reconstruct --input " + evf + " --out " + path("r") + " --threshold-map " + path("map.csv")),
    0);
  {
    std::ofstream bad(path("bad_map.csv"));
    bad << "this is not a map\n";
  }
  EXPECT_EQ(
    fibar(
      "reconstruct --input " + evf + " --out " + path("r") + " --threshold-map " + path("bad_map.csv")),
    3);
}

TEST_F(Cli, CalibRejectsEmptyInput)
{
  {
    std::ofstream out(path("empty.evf"), std::ios::binary);
    write_stream(SensorGeometry{8, 8}, {}, out);
  }
  EXPECT_EQ(fibar("calib --input " + path("empty.evf") + " --out " + path("m.csv")), 3);
  EXPECT_EQ(fibar("calib --input " + path("empty.evf") + " --out " + path("m.csv") + " --exclude-quantile 0.6"), 2);
}

TEST_F(Cli, Bode)
{
  ASSERT_EQ(fibar("bode --tcut 40 --points 50", path("b.csv")), 0);
  const auto l = lines(path("b.csv"));
  ASSERT_EQ(l.size(), 51u);
  EXPECT_EQ(l[0], "omega,gain_alpha,gain_beta,gain_total");
  double w = 0;
  double ga = 0;
  double gb = 0;
  double gt = 0;
  char sep = 0;
  std::istringstream first(l[1]);
  first >> w >> sep >> ga >> sep >> gb >> sep >> gt;
  EXPECT_NEAR(w, 1e-4 * 3.14159265358979, 1e-12);
  // the high pass stage shuts the low end
  EXPECT_LT(ga, 3e-3);
  EXPECT_NEAR(gt, ga * gb, 1e-9);
  std::istringstream last(l.back());
  last >> w >> sep >> ga >> sep >> gb >> sep >> gt;
  EXPECT_NEAR(w, 3.14159265358979, 1e-9);
  EXPECT_NEAR(gt, ga * gb, 1e-9);
  EXPECT_EQ(fibar("bode --tcut 3"), 2);
  EXPECT_EQ(fibar("bode --points 1"), 2);
}

TEST_F(Cli, Trace)
{
  const std::string evf = path("imb.evf");
  ASSERT_EQ(
    fibar(
      "synth --scene triangle --width 4 --height 4 --amplitude 2 --duration 10 --sample-rate 1000 "
      "--c-on 0.1 --c-off 0.12 --out " + evf),
    0);
  ASSERT_EQ(fibar("trace --input " + evf + " --pixel 1,2 --tcut 100", path("t1.csv")), 0);
  ASSERT_EQ(fibar("trace --input " + evf + " --pixel 1,2 --tcut 100", path("t2.csv")), 0);
  EXPECT_EQ(slurp(path("t1.csv")), slurp(path("t2.csv")));
  const auto t = lines(path("t1.csv"));
  EXPECT_EQ(t[0], "k,t,p,p_bar,delta,l,l_simple");
  // more ON than OFF events: the plain sum climbs, the filtered value stays centred
  std::vector<double> l, l_simple;
  for (size_t i = 1; i < t.size(); i++) {
    std::istringstream row(t[i]);
    std::vector<double> f;
    std::string cell;
    while (std::getline(row, cell, ',')) {
      f.push_back(std::stod(cell));
    }
    ASSERT_EQ(f.size(), 7u);
    l.push_back(f[5]);
    l_simple.push_back(f[6]);
  }
  auto mean = [](const std::vector<double> & v, size_t a, size_t b) {
    double s = 0;
    for (size_t i = a; i < b; i++) {
      s += v[i];
    }
    return (s / static_cast<double>(b - a));
  };
  const size_t n = l.size();
  ASSERT_GT(n, 200u);
  EXPECT_GT(mean(l_simple, 3 * n / 4, n) - mean(l_simple, 0, n / 4), 15.0);
  EXPECT_LT(std::abs(mean(l, 3 * n / 4, n) - mean(l, 0, n / 4)), 1.0);

  ASSERT_EQ(
    fibar("trace --input " + evf + " --pixel 0,0 --c-on 0.1 --c-off 0.12", path("t3.csv")), 0);
  EXPECT_EQ(lines(path("t3.csv"))[0], "k,t,p,p_bar,delta,l,l_simple,l_calib");

  EXPECT_EQ(fibar("trace --input " + evf + " --pixel 4,0"), 2);
  EXPECT_EQ(fibar("trace --input " + evf + " --pixel zero"), 2);
  EXPECT_EQ(fibar("trace --input " + evf + " --pixel 0,0 --c-on 0.1"), 2);

  {
    std::ofstream out(path("empty.evf"), std::ios::binary);
    write_stream(SensorGeometry{4, 4}, {}, out);
  }
  ASSERT_EQ(fibar("trace --input " + path("empty.evf") + " --pixel 0,0", path("t4.csv")), 0);
  EXPECT_EQ(lines(path("t4.csv")).size(), 1u);
}

TEST_F(Cli, Bench)
{
  const std::string evf = triangle_evf();
  ASSERT_EQ(
    fibar("bench --input " + evf + " --repeat 1 --stage decode --stage full --csv " + path("b.csv"), path("b.txt")),
    0);
  const auto csv = lines(path("b.csv"));
  ASSERT_EQ(csv.size(), 3u);
  EXPECT_EQ(csv[1].rfind("decode,", 0), 0u);
  EXPECT_EQ(csv[2].rfind("full,", 0), 0u);
  EXPECT_NE(slurp(path("b.txt")).find("ns/ev"), std::string::npos);
  EXPECT_EQ(fibar("bench --input " + evf + " --stage gpu"), 2);
}
