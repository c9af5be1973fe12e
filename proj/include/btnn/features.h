// btnn/features.h

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

#ifndef BTNN_FEATURES_H_
#define BTNN_FEATURES_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace btnn {

struct AudioBuffer {
  std::vector<int16_t> samples;
  int sample_rate_hz = 16000;
};

struct FeatureConfig {
  int sample_rate_hz = 16000;
  int num_bins = 40;
  double frame_length_ms = 25.0;
  double frame_hop_ms = 10.0;
  int fft_size = 512;
  double mel_low_hz = 20.0;
  double mel_high_hz = 8000.0;
  double log_floor = 1e-10;
  // Subtract the running mean of frames 0..t from frame t. Off by default.
  bool running_mean_norm = false;

  int FrameLengthSamples() const;
  int FrameHopSamples() const;
  /// Throws ConfigError on the first violated constraint.
  void Validate() const;

  bool operator==(const FeatureConfig &) const = default;
};

struct FeatureFrame {
  std::vector<float> values;
  int64_t index = 0;

  bool operator==(const FeatureFrame &) const = default;
};

using FrameSequence = std::vector<FeatureFrame>;

/// floor((num_samples - frame_length) / hop) + 1, or 0 when the input is
/// shorter than one frame.
int64_t NumFrames(int64_t num_samples, int frame_length, int hop);

/// Triangular mel filters over the non-negative FFT bins.
class MelBanks {
 public:
  explicit MelBanks(const FeatureConfig &config);

  int NumBins() const { return static_cast<int>(offsets_.size()); }
  /// First FFT bin covered by filter `bin` and its weights from there on.
  int Offset(int bin) const { return offsets_[bin]; }
  const std::vector<float> &Weights(int bin) const { return weights_[bin]; }
  double CenterHz(int bin) const { return centers_hz_[bin]; }

  /// Power spectrum (fft_size / 2 + 1 values) to mel energies.
  void Apply(std::span<const float> power, std::span<float> energies) const;

  static double MelScale(double hz);
  static double InverseMelScale(double mel);

 private:
  std::vector<int> offsets_;
  std::vector<std::vector<float>> weights_;
  std::vector<double> centers_hz_;
};

/// Streaming log-mel filterbank. Audio may be fed in chunks of any size; the
/// emitted frames are identical to a one-shot call over the concatenation.
class OnlineFbank {
 public:
  explicit OnlineFbank(const FeatureConfig &config);
  ~OnlineFbank();
  OnlineFbank(const OnlineFbank &) = delete;
  OnlineFbank &operator=(const OnlineFbank &) = delete;

  void AcceptWaveform(std::span<const int16_t> samples);
  /// Frames completed since the previous call.
  FrameSequence TakeFrames();
  int64_t NumFramesEmitted() const { return next_index_; }

  const FeatureConfig &Config() const { return config_; }

 private:
  void ComputeFrame(std::span<const float> samples, std::vector<float> *out);

  FeatureConfig config_;
  int frame_length_;
  int hop_;
  std::vector<float> window_;
  MelBanks banks_;
  struct FftState;
  std::unique_ptr<FftState> fft_;
  std::vector<float> pending_;  // samples not yet consumed by a full hop
  FrameSequence ready_;
  int64_t next_index_ = 0;
  std::vector<double> running_sum_;
};

/// One-shot filterbank. Returns an empty sequence when the audio is shorter
/// than one frame; throws ConfigError on an invalid config.
FrameSequence MelFilterbank(const AudioBuffer &audio, const FeatureConfig &config);

// Feature file: "BTFE", u32 version (1), u32 dim, u64 frame count, then
// frame-count rows of dim little-endian f32.
inline constexpr uint32_t kFeatureFileVersion = 1;

void WriteFrames(const std::string &path, const FrameSequence &frames, int dim);
FrameSequence ReadFrames(const std::string &path, int expected_dim);
/// Dimension declared in a feature file header.
int ReadFrameDim(const std::string &path);

}  // namespace btnn

#endif  // BTNN_FEATURES_H_
