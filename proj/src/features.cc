// features.cc

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

#include "btnn/features.h"

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>

#include "btnn/binary-io.h"
#include "btnn/error.h"
#include "btnn/kernels.h"

namespace btnn {

int FeatureConfig::FrameLengthSamples() const {
  return static_cast<int>(std::lround(sample_rate_hz * frame_length_ms / 1000.0));
}

int FeatureConfig::FrameHopSamples() const {
  return static_cast<int>(std::lround(sample_rate_hz * frame_hop_ms / 1000.0));
}

void FeatureConfig::Validate() const {
  std::ostringstream err;
  if (sample_rate_hz <= 0) err << "sample_rate_hz must be positive";
  else if (num_bins < 1) err << "num_bins must be >= 1";
  else if (!(frame_length_ms > 0) || !(frame_hop_ms > 0))
    err << "frame length and hop must be positive";
  else if (frame_hop_ms > frame_length_ms) err << "frame_hop_ms > frame_length_ms";
  else if (FrameHopSamples() < 1) err << "hop shorter than one sample";
  else if (fft_size < FrameLengthSamples() || (fft_size & (fft_size - 1)) != 0)
    err << "fft_size " << fft_size << " must be a power of two >= "
        << FrameLengthSamples();
  else if (!(mel_low_hz >= 0) || !(mel_low_hz < mel_high_hz) ||
           mel_high_hz > sample_rate_hz / 2.0)
    err << "need 0 <= mel_low_hz < mel_high_hz <= sample_rate/2";
  else if (!(log_floor > 0)) err << "log_floor must be positive";
  if (!err.str().empty()) throw ConfigError(err.str());
}

int64_t NumFrames(int64_t num_samples, int frame_length, int hop) {
  if (num_samples < frame_length) return 0;
  return (num_samples - frame_length) / hop + 1;
}

double MelBanks::MelScale(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }

double MelBanks::InverseMelScale(double mel) {
  return 700.0 * (std::exp(mel / 1127.0) - 1.0);
}

MelBanks::MelBanks(const FeatureConfig &config) {
  const int num_fft_bins = config.fft_size / 2 + 1;
  const double fft_bin_hz = static_cast<double>(config.sample_rate_hz) / config.fft_size;
  const double mel_low = MelScale(config.mel_low_hz);
  const double mel_high = MelScale(config.mel_high_hz);
  const double mel_delta = (mel_high - mel_low) / (config.num_bins + 1);

  for (int bin = 0; bin < config.num_bins; ++bin) {
    double left = mel_low + bin * mel_delta;
    double center = left + mel_delta;
    double right = center + mel_delta;
    centers_hz_.push_back(InverseMelScale(center));

    int first = -1;
    std::vector<float> weights;
    for (int k = 0; k < num_fft_bins; ++k) {
      double mel = MelScale(fft_bin_hz * k);
      if (mel <= left || mel >= right) {
        if (first >= 0) break;
        continue;
      }
      double w = mel <= center ? (mel - left) / (center - left)
                               : (right - mel) / (right - center);
      if (first < 0) first = k;
      weights.push_back(static_cast<float>(w));
    }
    // Very narrow low filters may fall between FFT bins; they stay empty and
    // produce log_floor.
    offsets_.push_back(std::max(first, 0));
    weights_.push_back(std::move(weights));
  }
}

void MelBanks::Apply(std::span<const float> power, std::span<float> energies) const {
  const simd::KernelTable &k = simd::Kernels();
  for (int bin = 0; bin < NumBins(); ++bin) {
    const std::vector<float> &w = weights_[bin];
    energies[bin] = w.empty() ? 0.0f : k.dot(w.data(), power.data() + offsets_[bin], w.size());
  }
}

namespace {
// FFTW planning is not thread safe; execution with the new-array interface is.
std::mutex fftw_plan_mutex;
}  // namespace

struct OnlineFbank::FftState {
  explicit FftState(int n) : size(n) {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex);
    float *in = fftwf_alloc_real(n);
    fftwf_complex *out = fftwf_alloc_complex(n / 2 + 1);
    plan = fftwf_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftwf_free(in);
    fftwf_free(out);
  }
  ~FftState() {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex);
    fftwf_destroy_plan(plan);
  }

  int size;
  fftwf_plan plan;
  std::vector<float> input;
  std::vector<std::complex<float>> spectrum;
  std::vector<float> power;
};

OnlineFbank::OnlineFbank(const FeatureConfig &config)
    : config_(config),
      frame_length_((config.Validate(), config.FrameLengthSamples())),
      hop_(config.FrameHopSamples()),
      banks_(config),
      fft_(std::make_unique<FftState>(config.fft_size)) {
  window_.resize(frame_length_);
  const double denom = frame_length_ > 1 ? frame_length_ - 1 : 1;
  for (int n = 0; n < frame_length_; ++n)
    window_[n] = static_cast<float>(0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / denom));
  fft_->input.assign(config.fft_size, 0.0f);
  fft_->spectrum.resize(config.fft_size / 2 + 1);
  fft_->power.resize(config.fft_size / 2 + 1);
  if (config.running_mean_norm) running_sum_.assign(config.num_bins, 0.0);
}

OnlineFbank::~OnlineFbank() = default;

void OnlineFbank::ComputeFrame(std::span<const float> samples, std::vector<float> *out) {
  FftState &fft = *fft_;
  std::fill(fft.input.begin(), fft.input.end(), 0.0f);
  for (int n = 0; n < frame_length_; ++n) fft.input[n] = samples[n] * window_[n];
  fftwf_execute_dft_r2c(fft.plan, fft.input.data(), reinterpret_cast<fftwf_complex *>(fft.spectrum.data()));
  for (size_t k = 0; k < fft.spectrum.size(); ++k) {
    float re = fft.spectrum[k].real(), im = fft.spectrum[k].imag();
    fft.power[k] = re * re + im * im;
  }
  out->resize(config_.num_bins);
  banks_.Apply(fft.power, *out);
  const float floor = static_cast<float>(config_.log_floor);
  for (float &v : *out) v = std::log(std::max(v, floor));
}

void OnlineFbank::AcceptWaveform(std::span<const int16_t> samples) {
  for (int16_t s : samples) pending_.push_back(static_cast<float>(s));
  size_t start = 0;
  while (pending_.size() - start >= static_cast<size_t>(frame_length_)) {
    FeatureFrame frame;
    frame.index = next_index_++;
    ComputeFrame(std::span<const float>(pending_).subspan(start, frame_length_),
                 &frame.values);
    if (config_.running_mean_norm) {
      const double count = static_cast<double>(frame.index + 1);
      for (size_t i = 0; i < frame.values.size(); ++i) {
        running_sum_[i] += frame.values[i];
        frame.values[i] -= static_cast<float>(running_sum_[i] / count);
      }
    }
    ready_.push_back(std::move(frame));
    start += hop_;
  }
  pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(start));
}

FrameSequence OnlineFbank::TakeFrames() {
  FrameSequence out;
  out.swap(ready_);
  return out;
}

FrameSequence MelFilterbank(const AudioBuffer &audio, const FeatureConfig &config) {
  if (audio.sample_rate_hz != config.sample_rate_hz)
    throw ConfigError("audio sample rate " + std::to_string(audio.sample_rate_hz) +
                      " differs from feature config " +
                      std::to_string(config.sample_rate_hz));
  OnlineFbank fbank(config);
  fbank.AcceptWaveform(audio.samples);
  return fbank.TakeFrames();
}

void WriteFrames(const std::string &path, const FrameSequence &frames, int dim) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write("BTFE", 4);
  WriteU32(os, kFeatureFileVersion);
  WriteU32(os, static_cast<uint32_t>(dim));
  WriteU64(os, frames.size());
  for (size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].values.size() != static_cast<size_t>(dim))
      throw ShapeError("frame " + std::to_string(i) + " has " +
                       std::to_string(frames[i].values.size()) + " values, expected " +
                       std::to_string(dim));
    WriteF32s(os, frames[i].values);
  }
  if (!os) throw IoError("write failed for " + path);
}

namespace {

uint32_t ReadFrameHeader(std::istream &is, const std::string &path, uint64_t *count) {
  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4) throw IoError("truncated header in " + path);
  if (std::string(magic, 4) != "BTFE") throw FormatError(path + ": bad magic");
  uint32_t version = ReadU32(is, "version");
  if (version != kFeatureFileVersion)
    throw FormatError(path + ": unsupported version " + std::to_string(version));
  uint32_t dim = ReadU32(is, "dim");
  *count = ReadU64(is, "frame count");
  return dim;
}

}  // namespace

int ReadFrameDim(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  uint64_t count = 0;
  return static_cast<int>(ReadFrameHeader(is, path, &count));
}

FrameSequence ReadFrames(const std::string &path, int expected_dim) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  uint64_t count = 0;
  const uint32_t dim = ReadFrameHeader(is, path, &count);
  if (static_cast<int>(dim) != expected_dim)
    throw FormatError(path + ": frame 0 has dim " + std::to_string(dim) +
                      ", expected " + std::to_string(expected_dim));

  const std::streamoff header_end = is.tellg();
  is.seekg(0, std::ios::end);
  const uint64_t body = static_cast<uint64_t>(is.tellg() - header_end);
  is.seekg(header_end);
  const uint64_t row_bytes = static_cast<uint64_t>(dim) * sizeof(float);
  if (row_bytes > 0 && body % row_bytes != 0) {
    uint64_t row = body / row_bytes;
    throw FormatError(path + ": frame " + std::to_string(row) + " has " +
                      std::to_string((body % row_bytes) / sizeof(float)) +
                      " values, expected " + std::to_string(dim));
  }
  if (row_bytes * count > body)
    throw IoError(path + ": truncated, header declares " + std::to_string(count) +
                  " frames but only " + std::to_string(body / row_bytes) + " present");

  FrameSequence frames(count);
  for (uint64_t i = 0; i < count; ++i) {
    frames[i].index = static_cast<int64_t>(i);
    frames[i].values.resize(dim);
    ReadF32s(is, frames[i].values, "frame " + std::to_string(i));
  }
  return frames;
}

}  // namespace btnn
