// model-io.cc

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

#include <fstream>
#include <sstream>

#include "btnn/binary-io.h"
#include "btnn/error.h"
#include "btnn/nnet.h"

namespace btnn {

namespace {

void WriteDenseHeader(std::ostream &os, const DenseLayer &l) {
  os << "dense " << l.in_dim << ' ' << l.out_dim << ' ' << ActivationName(l.activation)
     << '\n';
}

// Header lines are whitespace-separated tokens; the reader walks them with a
// line-aware cursor so errors can cite the line.
class HeaderReader {
 public:
  HeaderReader(std::istream &is, std::string path) : is_(is), path_(std::move(path)) {}

  std::istringstream Next(const std::string &expect) {
    std::string line;
    if (!std::getline(is_, line))
      throw FormatError(path_ + ": header ended while expecting '" + expect + "'");
    ++line_no_;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key != expect)
      throw FormatError(path_ + ":" + std::to_string(line_no_) + ": expected '" + expect +
                        "', found '" + key + "'");
    return ls;
  }

  std::string PeekKey() {
    std::streampos pos = is_.tellg();
    std::string line;
    std::getline(is_, line);
    is_.seekg(pos);
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    return key;
  }

  template <typename T>
  T Field(std::istringstream &ls, const std::string &name) {
    T v{};
    if (!(ls >> v))
      throw FormatError(path_ + ":" + std::to_string(line_no_) + ": bad or missing " + name);
    return v;
  }

  void ExpectKeyword(std::istringstream &ls, const std::string &kw) {
    std::string s;
    ls >> s;
    if (s != kw)
      throw FormatError(path_ + ":" + std::to_string(line_no_) + ": expected '" + kw +
                        "', found '" + s + "'");
  }

  DenseLayer Dense() {
    auto ls = Next("dense");
    DenseLayer l;
    l.in_dim = Field<int>(ls, "in_dim");
    l.out_dim = Field<int>(ls, "out_dim");
    l.activation = ParseActivation(Field<std::string>(ls, "activation"));
    if (l.in_dim < 1 || l.out_dim < 1)
      throw FormatError(path_ + ":" + std::to_string(line_no_) + ": non-positive dims");
    return l;
  }

  const std::string &Path() const { return path_; }

 private:
  std::istream &is_;
  std::string path_;
  int line_no_ = 0;
};

void ReadDenseParams(std::istream &is, DenseLayer *l, const std::string &what) {
  l->weights.resize(static_cast<size_t>(l->in_dim) * l->out_dim);
  l->bias.resize(l->out_dim);
  ReadF32s(is, l->weights, what + " weights");
  ReadF32s(is, l->bias, what + " bias");
}

}  // namespace

void SaveModel(const ModelBundle &bundle, const std::string &path) {
  bundle.Validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  const FeatureConfig &fc = bundle.feature_config;
  os << "btnn-model " << kModelFormatVersion << '\n';
  os << "feature_config sample_rate_hz " << fc.sample_rate_hz << " num_bins " << fc.num_bins
     << " frame_length_ms " << FormatDouble(fc.frame_length_ms) << " frame_hop_ms "
     << FormatDouble(fc.frame_hop_ms) << " fft_size " << fc.fft_size << " mel_low_hz "
     << FormatDouble(fc.mel_low_hz) << " mel_high_hz " << FormatDouble(fc.mel_high_hz)
     << " log_floor " << FormatDouble(fc.log_floor) << " running_mean_norm "
     << (fc.running_mean_norm ? 1 : 0) << '\n';
  os << "embedding input_dim " << bundle.embedding.input_dim << " num_layers "
     << bundle.embedding.layers.size() << '\n';
  for (const auto &layer : bundle.embedding.layers) {
    if (const auto *d = std::get_if<DenseLayer>(&layer)) {
      WriteDenseHeader(os, *d);
    } else {
      const auto &m = std::get<MemoryLayer>(layer);
      os << "memory " << m.dim << ' ' << m.taps << '\n';
    }
  }
  os << "num_states " << bundle.num_states << '\n';
  for (const auto &tail : bundle.tails) {
    os << "tail " << tail.state_id << " num_layers " << tail.layers.size() << '\n';
    for (const auto &l : tail.layers) WriteDenseHeader(os, l);
  }
  os << "end_header\n";

  for (const auto &layer : bundle.embedding.layers) {
    if (const auto *d = std::get_if<DenseLayer>(&layer)) {
      WriteF32s(os, d->weights);
      WriteF32s(os, d->bias);
    } else {
      for (const auto &c : std::get<MemoryLayer>(layer).coefficients) WriteF32s(os, c);
    }
  }
  for (const auto &tail : bundle.tails)
    for (const auto &l : tail.layers) {
      WriteF32s(os, l.weights);
      WriteF32s(os, l.bias);
    }
  if (!os) throw IoError("write failed for " + path);
}

ModelBundle LoadModel(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  HeaderReader hr(is, path);
  ModelBundle bundle;

  auto ls = hr.Next("btnn-model");
  int version = hr.Field<int>(ls, "version");
  if (version != kModelFormatVersion)
    throw FormatError(path + ": model format version " + std::to_string(version) +
                      " unsupported (expected " + std::to_string(kModelFormatVersion) + ")");

  ls = hr.Next("feature_config");
  FeatureConfig &fc = bundle.feature_config;
  hr.ExpectKeyword(ls, "sample_rate_hz");
  fc.sample_rate_hz = hr.Field<int>(ls, "sample_rate_hz");
  hr.ExpectKeyword(ls, "num_bins");
  fc.num_bins = hr.Field<int>(ls, "num_bins");
  hr.ExpectKeyword(ls, "frame_length_ms");
  fc.frame_length_ms = hr.Field<double>(ls, "frame_length_ms");
  hr.ExpectKeyword(ls, "frame_hop_ms");
  fc.frame_hop_ms = hr.Field<double>(ls, "frame_hop_ms");
  hr.ExpectKeyword(ls, "fft_size");
  fc.fft_size = hr.Field<int>(ls, "fft_size");
  hr.ExpectKeyword(ls, "mel_low_hz");
  fc.mel_low_hz = hr.Field<double>(ls, "mel_low_hz");
  hr.ExpectKeyword(ls, "mel_high_hz");
  fc.mel_high_hz = hr.Field<double>(ls, "mel_high_hz");
  hr.ExpectKeyword(ls, "log_floor");
  fc.log_floor = hr.Field<double>(ls, "log_floor");
  hr.ExpectKeyword(ls, "running_mean_norm");
  fc.running_mean_norm = hr.Field<int>(ls, "running_mean_norm") != 0;

  ls = hr.Next("embedding");
  hr.ExpectKeyword(ls, "input_dim");
  bundle.embedding.input_dim = hr.Field<int>(ls, "input_dim");
  hr.ExpectKeyword(ls, "num_layers");
  int num_layers = hr.Field<int>(ls, "num_layers");
  for (int i = 0; i < num_layers; ++i) {
    if (hr.PeekKey() == "memory") {
      auto ml = hr.Next("memory");
      MemoryLayer m;
      m.dim = hr.Field<int>(ml, "dim");
      m.taps = hr.Field<int>(ml, "taps");
      if (m.dim < 1 || m.taps < 1) throw FormatError(path + ": bad memory layer dims");
      bundle.embedding.layers.push_back(std::move(m));
    } else {
      bundle.embedding.layers.push_back(hr.Dense());
    }
  }

  ls = hr.Next("num_states");
  bundle.num_states = hr.Field<int>(ls, "num_states");
  if (bundle.num_states < 1) throw FormatError(path + ": num_states must be >= 1");
  bundle.tails.resize(bundle.num_states);
  std::vector<bool> seen(bundle.num_states, false);
  while (hr.PeekKey() == "tail") {
    auto tl = hr.Next("tail");
    int state = hr.Field<int>(tl, "state id");
    if (state < 0 || state >= bundle.num_states)
      throw FormatError(path + ": tail for state " + std::to_string(state) +
                        " outside 0.." + std::to_string(bundle.num_states - 1));
    if (seen[state]) throw FormatError(path + ": duplicate tail for state " + std::to_string(state));
    seen[state] = true;
    hr.ExpectKeyword(tl, "num_layers");
    int n = hr.Field<int>(tl, "num_layers");
    TailNet &tail = bundle.tails[state];
    tail.state_id = state;
    for (int i = 0; i < n; ++i) tail.layers.push_back(hr.Dense());
  }
  for (int s = 0; s < bundle.num_states; ++s)
    if (!seen[s])
      throw FormatError(path + ": missing tail for state " + std::to_string(s) + " of " +
                        std::to_string(bundle.num_states));
  hr.Next("end_header");

  // Shapes come from the header alone, so check them before sizing blobs.
  int dim = bundle.embedding.input_dim;
  for (size_t i = 0; i < bundle.embedding.layers.size(); ++i) {
    const auto &layer = bundle.embedding.layers[i];
    if (LayerInputDim(layer) != dim)
      throw FormatError(path + ": embedding layer " + std::to_string(i) + " expects input dim " +
                        std::to_string(LayerInputDim(layer)) + ", previous layer gives " +
                        std::to_string(dim));
    dim = LayerOutputDim(layer);
  }
  for (const auto &tail : bundle.tails) {
    int d = dim;
    for (size_t i = 0; i < tail.layers.size(); ++i) {
      if (tail.layers[i].in_dim != d)
        throw FormatError(path + ": tail " + std::to_string(tail.state_id) + " layer " +
                          std::to_string(i) + " expects input dim " +
                          std::to_string(tail.layers[i].in_dim) + ", got " + std::to_string(d));
      d = tail.layers[i].out_dim;
    }
  }

  for (size_t i = 0; i < bundle.embedding.layers.size(); ++i) {
    const std::string what = "embedding layer " + std::to_string(i);
    auto &layer = bundle.embedding.layers[i];
    if (auto *d = std::get_if<DenseLayer>(&layer)) {
      ReadDenseParams(is, d, what);
    } else {
      auto &m = std::get<MemoryLayer>(layer);
      m.coefficients.assign(m.taps, std::vector<float>(m.dim));
      for (auto &c : m.coefficients) ReadF32s(is, c, what + " coefficients");
    }
  }
  for (auto &tail : bundle.tails)
    for (size_t i = 0; i < tail.layers.size(); ++i)
      ReadDenseParams(is, &tail.layers[i],
                      "tail " + std::to_string(tail.state_id) + " layer " + std::to_string(i));
  if (is.peek() != std::char_traits<char>::eof())
    throw FormatError(path + ": trailing bytes after last parameter blob");

  try {
    bundle.Validate();
  } catch (const ShapeError &e) {
    throw FormatError(path + ": " + e.what());
  }
  return bundle;
}

}  // namespace btnn
