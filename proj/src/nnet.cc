// nnet.cc

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

#include "btnn/nnet.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "btnn/error.h"
#include "btnn/kernels.h"

namespace btnn {

std::string ActivationName(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kIdentity: return "identity";
  }
  return "?";
}

Activation ParseActivation(const std::string &name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "identity") return Activation::kIdentity;
  throw FormatError("unknown activation '" + name + "'");
}

namespace {

// Float sigmoid kept inside the open interval: 1 + exp(-x) rounds to 1 for
// x > ~17, which would otherwise return exactly 1.
inline float Sigmoid(float x) {
  constexpr float kLo = std::numeric_limits<float>::min();
  constexpr float kHi = 1.0f - std::numeric_limits<float>::epsilon() / 2;
  return std::clamp(1.0f / (1.0f + std::exp(-x)), kLo, kHi);
}

void ApplyActivation(Activation a, std::span<float> v) {
  switch (a) {
    case Activation::kRelu:
      for (float &x : v) x = x < 0.0f ? 0.0f : x;  // NaN passes through
      break;
    case Activation::kSigmoid:
      for (float &x : v) x = Sigmoid(x);
      break;
    case Activation::kIdentity:
      break;
  }
}

bool AllFinite(const std::vector<float> &v) {
  return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
}

}  // namespace

void DenseLayer::Forward(std::span<const float> in, std::span<float> out) const {
  simd::Kernels().matvec(weights.data(), out_dim, in_dim, in.data(), bias.data(),
                         out.data());
  ApplyActivation(activation, out.first(out_dim));
}

void DenseLayer::Validate(const std::string &where) const {
  if (in_dim < 1 || out_dim < 1)
    throw ShapeError(where + ": dense dims must be positive");
  if (weights.size() != static_cast<size_t>(in_dim) * out_dim)
    throw ShapeError(where + ": weight matrix size does not match " +
                     std::to_string(out_dim) + "x" + std::to_string(in_dim));
  if (bias.size() != static_cast<size_t>(out_dim))
    throw ShapeError(where + ": bias length " + std::to_string(bias.size()) +
                     " != out_dim " + std::to_string(out_dim));
  if (!AllFinite(weights) || !AllFinite(bias))
    throw ShapeError(where + ": non-finite parameter");
}

void MemoryLayer::Validate(const std::string &where) const {
  if (taps < 1) throw ShapeError(where + ": memory taps must be >= 1");
  if (dim < 1) throw ShapeError(where + ": memory dim must be positive");
  if (coefficients.size() != static_cast<size_t>(taps))
    throw ShapeError(where + ": expected " + std::to_string(taps) +
                     " coefficient vectors, got " + std::to_string(coefficients.size()));
  for (const auto &c : coefficients) {
    if (c.size() != static_cast<size_t>(dim))
      throw ShapeError(where + ": coefficient vector length differs from dim " +
                       std::to_string(dim));
    if (!AllFinite(c)) throw ShapeError(where + ": non-finite parameter");
  }
}

int LayerInputDim(const EmbeddingLayer &layer) {
  if (const auto *d = std::get_if<DenseLayer>(&layer)) return d->in_dim;
  return std::get<MemoryLayer>(layer).dim;
}

int LayerOutputDim(const EmbeddingLayer &layer) {
  if (const auto *d = std::get_if<DenseLayer>(&layer)) return d->out_dim;
  return std::get<MemoryLayer>(layer).dim;
}

int EmbeddingNet::OutputDim() const {
  return layers.empty() ? input_dim : LayerOutputDim(layers.back());
}

uint64_t EmbeddingNet::MacsPerFrame() const {
  uint64_t total = 0;
  for (const auto &layer : layers)
    total += std::visit([](const auto &l) { return l.Macs(); }, layer);
  return total;
}

void EmbeddingNet::Validate() const {
  if (input_dim < 1) throw ShapeError("embedding input_dim must be positive");
  int dim = input_dim;
  for (size_t i = 0; i < layers.size(); ++i) {
    const std::string where = "embedding layer " + std::to_string(i);
    if (LayerInputDim(layers[i]) != dim)
      throw ShapeError(where + ": input dim " + std::to_string(LayerInputDim(layers[i])) +
                       " != previous output dim " + std::to_string(dim));
    std::visit([&](const auto &l) { l.Validate(where); }, layers[i]);
    dim = LayerOutputDim(layers[i]);
  }
}

uint64_t TailNet::Macs() const {
  uint64_t total = 0;
  for (const auto &l : layers) total += l.Macs();
  return total;
}

void TailNet::Validate() const {
  const std::string name = "tail " + std::to_string(state_id);
  if (layers.empty()) throw ShapeError(name + ": no layers");
  for (size_t i = 0; i < layers.size(); ++i) {
    layers[i].Validate(name + " layer " + std::to_string(i));
    if (i > 0 && layers[i].in_dim != layers[i - 1].out_dim)
      throw ShapeError(name + " layer " + std::to_string(i) + ": input dim mismatch");
  }
  if (layers.back().out_dim != 1 || layers.back().activation != Activation::kSigmoid)
    throw ShapeError(name + ": final layer must be 1-output sigmoid");
}

const TailNet &ModelBundle::Tail(int state) const {
  if (state < 0 || state >= num_states || static_cast<size_t>(state) >= tails.size())
    throw LookupError("unknown state id " + std::to_string(state));
  return tails[state];
}

uint64_t ModelBundle::FullTailMacsPerFrame() const {
  uint64_t total = 0;
  for (const auto &t : tails) total += t.Macs();
  return total;
}

void ModelBundle::Validate() const {
  embedding.Validate();
  if (num_states < 1) throw ShapeError("model must have at least one state");
  if (tails.size() != static_cast<size_t>(num_states))
    throw ShapeError("model declares " + std::to_string(num_states) + " states but has " +
                     std::to_string(tails.size()) + " tails");
  if (embedding.input_dim != feature_config.num_bins)
    throw ShapeError("embedding input dim " + std::to_string(embedding.input_dim) +
                     " != feature dim " + std::to_string(feature_config.num_bins));
  const int dim = embedding.OutputDim();
  for (int s = 0; s < num_states; ++s) {
    if (tails[s].state_id != s)
      throw ShapeError("tail slot " + std::to_string(s) + " holds state " +
                       std::to_string(tails[s].state_id));
    tails[s].Validate();
    if (tails[s].InputDim() != dim)
      throw ShapeError("tail " + std::to_string(s) + " input dim " +
                       std::to_string(tails[s].InputDim()) + " != embedding dim " +
                       std::to_string(dim));
  }
}

double MacReport::LazyRatio() const {
  return tail_macs_full == 0 ? 0.0
                             : static_cast<double>(tail_macs_lazy) / tail_macs_full;
}

MacReport &MacReport::operator+=(const MacReport &other) {
  frames += other.frames;
  embedding_macs += other.embedding_macs;
  tail_macs_full += other.tail_macs_full;
  tail_macs_lazy += other.tail_macs_lazy;
  return *this;
}

EmbeddingStream::EmbeddingStream(const EmbeddingNet &net) : net_(net) {
  history_.resize(net.layers.size());
  head_.assign(net.layers.size(), 0);
  Reset();
}

void EmbeddingStream::Reset() {
  for (size_t i = 0; i < net_.layers.size(); ++i) {
    if (const auto *m = std::get_if<MemoryLayer>(&net_.layers[i])) {
      history_[i].assign(m->taps, std::vector<float>(m->dim, 0.0f));
      head_[i] = 0;
    }
  }
}

std::vector<float> EmbeddingStream::Forward(std::span<const float> frame) {
  if (frame.size() != static_cast<size_t>(net_.input_dim))
    throw ShapeError("frame dim " + std::to_string(frame.size()) +
                     " != embedding layer 0 input dim " + std::to_string(net_.input_dim));
  const simd::KernelTable &k = simd::Kernels();
  buf_a_.assign(frame.begin(), frame.end());
  for (size_t i = 0; i < net_.layers.size(); ++i) {
    const EmbeddingLayer &layer = net_.layers[i];
    buf_b_.assign(LayerOutputDim(layer), 0.0f);
    if (const auto *d = std::get_if<DenseLayer>(&layer)) {
      d->Forward(buf_a_, buf_b_);
    } else {
      const auto &m = std::get<MemoryLayer>(layer);
      // Newest input goes to head; tap t reads t frames back.
      head_[i] = (head_[i] + m.taps - 1) % m.taps;
      history_[i][head_[i]] = buf_a_;
      for (int t = 0; t < m.taps; ++t) {
        const auto &past = history_[i][(head_[i] + t) % m.taps];
        k.mul_acc(m.coefficients[t].data(), past.data(), m.dim, buf_b_.data());
      }
    }
    std::swap(buf_a_, buf_b_);
  }
  return buf_a_;
}

std::vector<std::vector<float>> EmbedForward(const FrameSequence &frames,
                                             const EmbeddingNet &net) {
  EmbeddingStream stream(net);
  std::vector<std::vector<float>> out;
  out.reserve(frames.size());
  for (const auto &f : frames) out.push_back(stream.Forward(f.values));
  return out;
}

float TailForward(std::span<const float> embedding, const TailNet &tail) {
  if (embedding.size() != static_cast<size_t>(tail.InputDim()))
    throw ShapeError("embedding dim " + std::to_string(embedding.size()) +
                     " != tail " + std::to_string(tail.state_id) + " input dim " +
                     std::to_string(tail.InputDim()));
  thread_local std::vector<float> a, b;
  a.assign(embedding.begin(), embedding.end());
  for (const auto &layer : tail.layers) {
    b.resize(layer.out_dim);
    layer.Forward(a, b);
    std::swap(a, b);
  }
  return a[0];
}

StateScores TailForwardSparse(std::span<const float> embedding, const ModelBundle &bundle,
                              const StateSet &active, MacReport *macs) {
  StateScores scores;
  for (int s : active) {
    const TailNet &tail = bundle.Tail(s);
    scores.emplace(s, TailForward(embedding, tail));
    if (macs != nullptr) macs->tail_macs_lazy += tail.Macs();
  }
  return scores;
}

MacReport CountMacs(const ModelBundle &bundle, const std::vector<StateSet> &active_history) {
  MacReport report;
  report.frames = active_history.size();
  report.embedding_macs = report.frames * bundle.embedding.MacsPerFrame();
  report.tail_macs_full = report.frames * bundle.FullTailMacsPerFrame();
  for (const auto &active : active_history)
    for (int s : active) report.tail_macs_lazy += bundle.Tail(s).Macs();
  return report;
}

ModelTopology ModelTopology::PaperScale() {
  ModelTopology t;
  t.embed_dim = 128;
  t.tail_hidden = {64, 32};
  return t;
}

namespace {

DenseLayer RandomDense(int in, int out, Activation act, std::mt19937_64 &rng) {
  DenseLayer l;
  l.in_dim = in;
  l.out_dim = out;
  l.activation = act;
  // Glorot-uniform.
  const float limit = std::sqrt(6.0f / static_cast<float>(in + out));
  std::uniform_real_distribution<float> dist(-limit, limit);
  l.weights.resize(static_cast<size_t>(in) * out);
  for (float &w : l.weights) w = dist(rng);
  l.bias.assign(out, 0.0f);
  return l;
}

}  // namespace

ModelBundle InitModel(int num_states, const ModelTopology &topology,
                      const FeatureConfig &feature_config, uint64_t seed) {
  if (num_states < 1) throw ConfigError("num_states must be >= 1");
  if (topology.input_dim != feature_config.num_bins)
    throw ConfigError("topology input dim differs from feature num_bins");
  std::mt19937_64 rng(seed);
  ModelBundle bundle;
  bundle.num_states = num_states;
  bundle.feature_config = feature_config;
  bundle.embedding.input_dim = topology.input_dim;
  bundle.embedding.layers.push_back(
      RandomDense(topology.input_dim, topology.embed_dim, Activation::kRelu, rng));
  MemoryLayer mem;
  mem.dim = topology.embed_dim;
  mem.taps = topology.memory_taps;
  for (int t = 0; t < mem.taps; ++t)
    mem.coefficients.emplace_back(mem.dim, std::pow(0.5f, static_cast<float>(t)));
  bundle.embedding.layers.push_back(std::move(mem));
  bundle.embedding.layers.push_back(
      RandomDense(topology.embed_dim, topology.embed_dim, Activation::kRelu, rng));

  for (int s = 0; s < num_states; ++s) {
    TailNet tail;
    tail.state_id = s;
    int in = topology.embed_dim;
    for (int h : topology.tail_hidden) {
      tail.layers.push_back(RandomDense(in, h, Activation::kRelu, rng));
      in = h;
    }
    tail.layers.push_back(RandomDense(in, 1, Activation::kSigmoid, rng));
    bundle.tails.push_back(std::move(tail));
  }
  bundle.Validate();
  return bundle;
}

}  // namespace btnn
