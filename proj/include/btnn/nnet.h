// btnn/nnet.h

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

#ifndef BTNN_NNET_H_
#define BTNN_NNET_H_

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "btnn/features.h"

namespace btnn {

enum class Activation { kRelu, kSigmoid, kIdentity };

std::string ActivationName(Activation a);
Activation ParseActivation(const std::string &name);

struct DenseLayer {
  int in_dim = 0;
  int out_dim = 0;
  std::vector<float> weights;  // out_dim x in_dim, row-major
  std::vector<float> bias;     // out_dim
  Activation activation = Activation::kIdentity;

  uint64_t Macs() const { return static_cast<uint64_t>(in_dim) * out_dim; }
  void Forward(std::span<const float> in, std::span<float> out) const;
  /// Throws ShapeError naming `where` when sizes or finiteness are off.
  void Validate(const std::string &where) const;

  bool operator==(const DenseLayer &) const = default;
};

/// Causal elementwise memory: y_t = sum_{i<taps} c_i * x_{t-i}, x_{t<0} = 0.
struct MemoryLayer {
  int dim = 0;
  int taps = 1;
  std::vector<std::vector<float>> coefficients;  // taps vectors of dim

  uint64_t Macs() const { return static_cast<uint64_t>(taps) * dim; }
  void Validate(const std::string &where) const;

  bool operator==(const MemoryLayer &) const = default;
};

using EmbeddingLayer = std::variant<DenseLayer, MemoryLayer>;

int LayerInputDim(const EmbeddingLayer &layer);
int LayerOutputDim(const EmbeddingLayer &layer);

struct EmbeddingNet {
  int input_dim = 0;
  std::vector<EmbeddingLayer> layers;

  int OutputDim() const;
  uint64_t MacsPerFrame() const;
  void Validate() const;

  bool operator==(const EmbeddingNet &) const = default;
};

struct TailNet {
  int state_id = 0;
  std::vector<DenseLayer> layers;  // last layer: 1 output, sigmoid

  int InputDim() const { return layers.empty() ? 0 : layers.front().in_dim; }
  uint64_t Macs() const;
  void Validate() const;

  bool operator==(const TailNet &) const = default;
};

struct ModelBundle {
  EmbeddingNet embedding;
  std::vector<TailNet> tails;  // tails[s].state_id == s
  int num_states = 0;
  FeatureConfig feature_config;

  const TailNet &Tail(int state) const;
  uint64_t FullTailMacsPerFrame() const;
  void Validate() const;

  bool operator==(const ModelBundle &) const = default;
};

struct MacReport {
  uint64_t frames = 0;
  uint64_t embedding_macs = 0;
  uint64_t tail_macs_full = 0;
  uint64_t tail_macs_lazy = 0;

  /// tail_macs_lazy / tail_macs_full, or 0 with no frames.
  double LazyRatio() const;
  MacReport &operator+=(const MacReport &other);
};

using StateSet = std::set<int>;
using StateScores = std::map<int, float>;

/// Per-stream embedding evaluator. Holds the memory-layer history, so one
/// instance belongs to exactly one stream.
class EmbeddingStream {
 public:
  explicit EmbeddingStream(const EmbeddingNet &net);

  /// Embedding of the next frame of the stream.
  std::vector<float> Forward(std::span<const float> frame);
  void Reset();

 private:
  const EmbeddingNet &net_;
  // history_[layer][i] is the layer input i frames ago (ring buffer).
  std::vector<std::vector<std::vector<float>>> history_;
  std::vector<int> head_;
  std::vector<float> buf_a_, buf_b_;
};

std::vector<std::vector<float>> EmbedForward(const FrameSequence &frames,
                                             const EmbeddingNet &net);

/// Tail output in (0, 1).
float TailForward(std::span<const float> embedding, const TailNet &tail);

/// Evaluates only the tails in `active`. Adds the tail MACs spent to
/// `macs->tail_macs_lazy` when given.
StateScores TailForwardSparse(std::span<const float> embedding, const ModelBundle &bundle,
                              const StateSet &active, MacReport *macs = nullptr);

MacReport CountMacs(const ModelBundle &bundle, const std::vector<StateSet> &active_history);

/// Layer sizes for freshly initialized bundles.
struct ModelTopology {
  int input_dim = 40;
  int embed_dim = 64;
  int memory_taps = 4;
  std::vector<int> tail_hidden = {32, 16};

  /// 128-dim embedding with 128x64x32x1 tails.
  static ModelTopology PaperScale();
};

ModelBundle InitModel(int num_states, const ModelTopology &topology,
                      const FeatureConfig &feature_config, uint64_t seed);

// Model file: a text header terminated by "end_header\n", then the f32
// parameters of every layer (embedding first, then tails by state id) as
// little-endian blobs in header order. See docs/file-formats.md.
inline constexpr int kModelFormatVersion = 1;

void SaveModel(const ModelBundle &bundle, const std::string &path);
ModelBundle LoadModel(const std::string &path);

}  // namespace btnn

#endif  // BTNN_NNET_H_
