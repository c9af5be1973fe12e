// tests/features-test.cc

// Copyright 2026  The BTNN Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

#include "btnn/binary-io.h"
#include "btnn/error.h"
#include "btnn/features.h"
#include "btnn/wave-io.h"
#include "doctest.h"
#include "test-util.h"

using namespace btnn;

namespace {

AudioBuffer Tone(double hz, double seconds, double amplitude = 8000.0, int sr = 16000) {
  AudioBuffer a;
  a.sample_rate_hz = sr;
  const int n = static_cast<int>(seconds * sr);
  for (int i = 0; i < n; ++i)
    a.samples.push_back(static_cast<int16_t>(
        std::lround(amplitude * std::sin(2 * std::numbers::pi * hz * i / sr))));
  return a;
}

AudioBuffer Noise(int n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(-20000, 20000);
  AudioBuffer a;
  for (int i = 0; i < n; ++i) a.samples.push_back(static_cast<int16_t>(u(rng)));
  return a;
}

}  // namespace

TEST_CASE("one second of silence gives 98 frames at the log floor") {
  FeatureConfig c;
  AudioBuffer a;
  a.samples.assign(16000, 0);
  auto frames = MelFilterbank(a, c);
  REQUIRE(frames.size() == 98);
  const float floor_value = static_cast<float>(std::log(c.log_floor));
  for (const auto &f : frames) {
    REQUIRE(f.values.size() == 40);
    for (float v : f.values) CHECK(v == doctest::Approx(floor_value).epsilon(1e-6));
  }
  CHECK(frames[5].index == 5);
}

TEST_CASE("frames have num_bins values") {
  FeatureConfig c;
  CHECK(c.num_bins == 40);
  CHECK(c.frame_hop_ms == 10.0);
  auto frames = MelFilterbank(Tone(440, 0.2), c);
  for (const auto &f : frames) CHECK(f.values.size() == 40);
  c.num_bins = 23;
  for (const auto &f : MelFilterbank(Tone(440, 0.2), c)) CHECK(f.values.size() == 23);
}

TEST_CASE("1 kHz tone peaks in the mel bin nearest 1 kHz") {
  FeatureConfig c;
  const AudioBuffer a = Tone(1000, 0.5);

  // Independent DFT of one Hamming-windowed frame locates the spectral peak.
  const int len = c.FrameLengthSamples();
  std::vector<double> power(c.fft_size / 2 + 1, 0.0);
  for (int k = 0; k <= c.fft_size / 2; ++k) {
    std::complex<double> acc = 0;
    for (int i = 0; i < len; ++i) {
      const double w = 0.54 - 0.46 * std::cos(2 * std::numbers::pi * i / (len - 1));
      acc += w * a.samples[i] * std::polar(1.0, -2 * std::numbers::pi * k * i / c.fft_size);
    }
    power[k] = std::norm(acc);
  }
  const int peak_fft_bin =
      static_cast<int>(std::max_element(power.begin(), power.end()) - power.begin());
  CHECK(peak_fft_bin == 32);  // 1000 Hz / (16000 / 512)

  // Mel bin whose centre, on an evenly spaced mel axis, is closest to 1 kHz.
  auto mel = [](double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); };
  const double lo = mel(c.mel_low_hz), hi = mel(c.mel_high_hz);
  const double delta = (hi - lo) / (c.num_bins + 1);
  int expected = 0;
  double best = 1e300;
  for (int b = 0; b < c.num_bins; ++b) {
    const double d = std::fabs(lo + (b + 1) * delta - mel(1000.0));
    if (d < best) best = d, expected = b;
  }

  for (const auto &f : MelFilterbank(a, c)) {
    const int argmax =
        static_cast<int>(std::max_element(f.values.begin(), f.values.end()) - f.values.begin());
    CHECK(argmax == expected);
  }
}

TEST_CASE("frame count formula") {
  CHECK(NumFrames(16000, 400, 160) == 98);
  CHECK(NumFrames(399, 400, 160) == 0);
  CHECK(NumFrames(400, 400, 160) == 1);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int frame = std::uniform_int_distribution<int>(1, 600)(rng);
    const int hop = std::uniform_int_distribution<int>(1, frame)(rng);
    const int64_t len = std::uniform_int_distribution<int64_t>(frame, 20000)(rng);
    int64_t count = 0;
    for (int64_t start = 0; start + frame <= len; start += hop) ++count;
    CHECK(NumFrames(len, frame, hop) == count);
  }
}

TEST_CASE("audio shorter than one frame yields no frames") {
  FeatureConfig c;
  AudioBuffer a;
  a.samples.assign(399, 100);
  CHECK(MelFilterbank(a, c).empty());
  a.samples.clear();
  CHECK(MelFilterbank(a, c).empty());
}

TEST_CASE("values never fall below the log floor") {
  FeatureConfig c;
  const float floor_value = static_cast<float>(std::log(c.log_floor));
  for (const auto &f : MelFilterbank(Noise(8000, 5), c))
    for (float v : f.values) CHECK(v >= floor_value);
}

TEST_CASE("sign flip of the waveform leaves features unchanged") {
  FeatureConfig c;
  AudioBuffer a = Noise(6000, 9), b = a;
  for (auto &s : b.samples) s = static_cast<int16_t>(-s);
  CHECK(MelFilterbank(a, c) == MelFilterbank(b, c));
}

TEST_CASE("chunked streaming equals one-shot extraction") {
  for (bool norm : {false, true}) {
    FeatureConfig c;
    c.running_mean_norm = norm;
    const AudioBuffer a = Noise(12345, 17);
    const auto oneshot = MelFilterbank(a, c);
    std::mt19937_64 rng(norm ? 1 : 2);
    for (int trial = 0; trial < 5; ++trial) {
      OnlineFbank fb(c);
      FrameSequence streamed;
      size_t pos = 0;
      while (pos < a.samples.size()) {
        size_t n = std::uniform_int_distribution<size_t>(0, 700)(rng);
        n = std::min(n, a.samples.size() - pos);
        fb.AcceptWaveform(std::span<const int16_t>(a.samples).subspan(pos, n));
        pos += n;
        auto got = fb.TakeFrames();
        streamed.insert(streamed.end(), got.begin(), got.end());
      }
      CHECK(streamed == oneshot);
      CHECK(fb.NumFramesEmitted() == static_cast<int64_t>(oneshot.size()));
    }
  }
}

TEST_CASE("invalid configurations are rejected") {
  auto bad = [](auto mutate) {
    FeatureConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.Validate(), ConfigError);
  };
  bad([](FeatureConfig &c) { c.num_bins = 0; });
  bad([](FeatureConfig &c) { c.frame_hop_ms = 30; });
  bad([](FeatureConfig &c) { c.mel_high_hz = 9000; });
  bad([](FeatureConfig &c) { c.mel_low_hz = 8000; });
  bad([](FeatureConfig &c) { c.fft_size = 256; });
  bad([](FeatureConfig &c) { c.fft_size = 500; });
  bad([](FeatureConfig &c) { c.sample_rate_hz = 0; });
  bad([](FeatureConfig &c) { c.log_floor = 0; });
  FeatureConfig ok;
  CHECK_NOTHROW(ok.Validate());
  AudioBuffer a;
  a.samples.assign(1000, 0);
  FeatureConfig c;
  c.num_bins = 0;
  CHECK_THROWS_AS(MelFilterbank(a, c), ConfigError);
}

TEST_CASE("feature file round trip is bit exact") {
  test::TempDir dir("feats");
  std::mt19937_64 rng(21);
  auto frames = test::RandomFrames(3, 40, rng);
  frames[1].values[7] = -0.0f;
  frames[2].values[3] = std::numeric_limits<float>::denorm_min();
  WriteFrames(dir.File("a.btfe"), frames, 40);
  const auto back = ReadFrames(dir.File("a.btfe"), 40);
  REQUIRE(back.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(back[i].index == static_cast<int64_t>(i));
    CHECK(std::memcmp(back[i].values.data(), frames[i].values.data(), 40 * sizeof(float)) == 0);
  }
  CHECK(ReadFrameDim(dir.File("a.btfe")) == 40);
}

TEST_CASE("empty feature file reads as an empty sequence") {
  test::TempDir dir("feats");
  WriteFrames(dir.File("e.btfe"), {}, 40);
  CHECK(ReadFrames(dir.File("e.btfe"), 40).empty());
}

TEST_CASE("feature file errors") {
  test::TempDir dir("feats");
  std::mt19937_64 rng(4);
  const auto frames = test::RandomFrames(2, 40, rng);
  const std::string path = dir.File("f.btfe");

  SUBCASE("short row names the row") {
    {
      std::ofstream os(path, std::ios::binary);
      os.write("BTFE", 4);
      WriteU32(os, 1);
      WriteU32(os, 40);
      WriteU64(os, 2);
      WriteF32s(os, frames[0].values);
      WriteF32s(os, std::span<const float>(frames[1].values).first(39));
    }
    try {
      ReadFrames(path, 40);
      FAIL("expected a format error");
    } catch (const FormatError &e) {
      CHECK(std::string(e.what()).find("frame 1") != std::string::npos);
    }
  }
  SUBCASE("dimension mismatch") {
    WriteFrames(path, frames, 40);
    CHECK_THROWS_AS(ReadFrames(path, 39), FormatError);
  }
  SUBCASE("missing rows are an I/O error") {
    {
      std::ofstream os(path, std::ios::binary);
      os.write("BTFE", 4);
      WriteU32(os, 1);
      WriteU32(os, 40);
      WriteU64(os, 5);
      WriteF32s(os, frames[0].values);
    }
    CHECK_THROWS_AS(ReadFrames(path, 40), IoError);
  }
  SUBCASE("truncated header") {
    std::ofstream(path, std::ios::binary).write("BTFE", 4);
    CHECK_THROWS_AS(ReadFrames(path, 40), IoError);
  }
  SUBCASE("bad magic and version") {
    {
      std::ofstream os(path, std::ios::binary);
      os.write("XXXX", 4);
      WriteU32(os, 1);
      WriteU32(os, 40);
      WriteU64(os, 0);
    }
    CHECK_THROWS_AS(ReadFrames(path, 40), FormatError);
    {
      std::ofstream os(path, std::ios::binary);
      os.write("BTFE", 4);
      WriteU32(os, 2);
      WriteU32(os, 40);
      WriteU64(os, 0);
    }
    CHECK_THROWS_AS(ReadFrames(path, 40), FormatError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(ReadFrames(dir.File("nope"), 40), IoError); }
}

TEST_CASE("wave round trip") {
  test::TempDir dir("wave");
  AudioBuffer a = Noise(1234, 8);
  a.sample_rate_hz = 8000;
  WriteWave(dir.File("a.wav"), a);
  const AudioBuffer b = ReadWave(dir.File("a.wav"));
  CHECK(b.sample_rate_hz == 8000);
  CHECK(b.samples == a.samples);
  std::ofstream(dir.File("bad.wav")) << "not a wave file at all, just text";
  CHECK_THROWS_AS(ReadWave(dir.File("bad.wav")), FormatError);
}

TEST_CASE("mel scale round trip") {
  for (double hz : {0.0, 20.0, 700.0, 1000.0, 8000.0})
    CHECK(MelBanks::InverseMelScale(MelBanks::MelScale(hz)) == doctest::Approx(hz));
  CHECK(MelBanks::MelScale(700.0) == doctest::Approx(1127.0 * std::log(2.0)));
}
