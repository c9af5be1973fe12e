// tests/nnet-test.cc

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
#include <fstream>
#include <random>
#include <sstream>

#include "btnn/error.h"
#include "btnn/nnet.h"
#include "doctest.h"
#include "test-util.h"

using namespace btnn;

namespace {

DenseLayer Dense(int in, int out, Activation act, std::vector<float> w, std::vector<float> b) {
  DenseLayer l;
  l.in_dim = in;
  l.out_dim = out;
  l.weights = std::move(w);
  l.bias = std::move(b);
  l.activation = act;
  return l;
}

MemoryLayer Memory(int dim, std::vector<std::vector<float>> coeffs) {
  MemoryLayer m;
  m.dim = dim;
  m.taps = static_cast<int>(coeffs.size());
  m.coefficients = std::move(coeffs);
  return m;
}

FrameSequence Frames(std::vector<std::vector<float>> rows) {
  FrameSequence f;
  for (size_t i = 0; i < rows.size(); ++i) f.push_back({rows[i], static_cast<int64_t>(i)});
  return f;
}

uint64_t DenseMacsOracle(const TailNet &t) {
  uint64_t m = 0;
  for (const auto &l : t.layers) m += static_cast<uint64_t>(l.in_dim) * l.out_dim;
  return m;
}

std::string Slurp(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void Dump(const std::string &path, const std::string &data) {
  std::ofstream(path, std::ios::binary) << data;
}

}  // namespace

TEST_CASE("identity dense layer passes frames through") {
  EmbeddingNet net;
  net.input_dim = 3;
  net.layers.push_back(Dense(3, 3, Activation::kIdentity, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}));
  auto frames = Frames({{1, -2, 3}, {0.5f, 0.25f, -7}});
  auto out = EmbedForward(frames, net);
  REQUIRE(out.size() == 2);
  CHECK(out[0] == frames[0].values);
  CHECK(out[1] == frames[1].values);
}

TEST_CASE("single-tap memory with unit coefficients is the identity") {
  EmbeddingNet net;
  net.input_dim = 2;
  net.layers.push_back(Memory(2, {{1, 1}}));
  auto frames = Frames({{3, 4}, {5, -6}, {7, 8}});
  auto out = EmbedForward(frames, net);
  for (size_t i = 0; i < frames.size(); ++i) CHECK(out[i] == frames[i].values);
}

TEST_CASE("two-tap memory sums the current and previous frame") {
  EmbeddingNet net;
  net.input_dim = 1;
  net.layers.push_back(Memory(1, {{1}, {1}}));
  auto out = EmbedForward(Frames({{3}, {5}}), net);
  CHECK(out[0] == std::vector<float>{3});
  CHECK(out[1] == std::vector<float>{8});
}

TEST_CASE("memory taps weight past frames elementwise") {
  EmbeddingNet net;
  net.input_dim = 2;
  net.layers.push_back(Memory(2, {{1, 2}, {0.5f, 0}, {0, 1}}));
  auto out = EmbedForward(Frames({{1, 1}, {2, 3}, {4, 5}, {0, 0}}), net);
  CHECK(out[0] == std::vector<float>{1, 2});
  CHECK(out[1] == std::vector<float>{2 + 0.5f, 6});
  CHECK(out[2] == std::vector<float>{4 + 1, 10 + 1});
  CHECK(out[3] == std::vector<float>{0 + 2, 0 + 3});
}

TEST_CASE("embedding input dimension mismatch names the layer") {
  ModelBundle b = test::SmallBundle(2, 5, 1);
  try {
    EmbedForward(Frames({{1, 2, 3}}), b.embedding);
    FAIL("expected a shape error");
  } catch (const ShapeError &e) {
    CHECK(std::string(e.what()).find("layer 0") != std::string::npos);
  }
}

TEST_CASE("zero tail gives exactly one half") {
  TailNet t;
  t.layers.push_back(Dense(4, 3, Activation::kRelu, std::vector<float>(12, 0), {0, 0, 0}));
  t.layers.push_back(Dense(3, 1, Activation::kSigmoid, {0, 0, 0}, {0}));
  CHECK(TailForward(std::vector<float>{1, 2, 3, 4}, t) == 0.5f);
}

TEST_CASE("single-layer tail evaluates a sigmoid") {
  TailNet t;
  t.layers.push_back(Dense(3, 1, Activation::kSigmoid, {1, 0, 0}, {0}));
  const double expected = 1.0 / (1.0 + std::exp(-2.0));
  CHECK(TailForward(std::vector<float>{2, 9, -9}, t) == doctest::Approx(0.880797).epsilon(1e-6));
  CHECK(TailForward(std::vector<float>{2, 9, -9}, t) == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("tail dimension mismatch is a shape error") {
  TailNet t;
  t.layers.push_back(Dense(3, 1, Activation::kSigmoid, {1, 0, 0}, {0}));
  CHECK_THROWS_AS(TailForward(std::vector<float>{1, 2}, t), ShapeError);
}

TEST_CASE("pyramid tails on a 128-dim embedding") {
  ModelTopology topo = ModelTopology::PaperScale();
  FeatureConfig fc;
  ModelBundle b = InitModel(3, topo, fc, 5);
  CHECK(b.embedding.OutputDim() == 128);
  const TailNet &t = b.Tail(0);
  REQUIRE(t.layers.size() == 3);
  CHECK(t.layers[0].in_dim == 128);
  CHECK(t.layers[0].out_dim == 64);
  CHECK(t.layers[1].out_dim == 32);
  CHECK(t.layers[2].out_dim == 1);
  CHECK_NOTHROW(b.Validate());
  std::vector<float> e(128, 0.1f);
  const float o = TailForward(e, t);
  CHECK(o > 0.0f);
  CHECK(o < 1.0f);
}

TEST_CASE("tail output stays strictly inside (0, 1)") {
  TailNet t;
  t.layers.push_back(Dense(1, 1, Activation::kSigmoid, {1000}, {0}));
  for (float x : {-1e6f, -100.0f, -1.0f, 0.0f, 1.0f, 100.0f, 1e6f}) {
    const float o = TailForward(std::vector<float>{x}, t);
    CHECK(o > 0.0f);
    CHECK(o < 1.0f);
  }
  std::mt19937_64 rng(9);
  ModelBundle b = test::SmallBundle(3, 4, 2);
  for (const auto &f : test::RandomFrames(50, 8, rng, 100.0f))
    for (int s = 0; s < 3; ++s) {
      const float o = TailForward(f.values, b.Tail(s));
      CHECK(o > 0.0f);
      CHECK(o < 1.0f);
    }
}

TEST_CASE("sparse tail evaluation") {
  ModelBundle b = test::SmallBundle(10, 6, 3);
  std::mt19937_64 rng(1);
  const auto emb = test::RandomFrames(1, b.embedding.OutputDim(), rng)[0].values;

  SUBCASE("empty active set") {
    MacReport m;
    CHECK(TailForwardSparse(emb, b, {}, &m).empty());
    CHECK(m.tail_macs_lazy == 0);
  }
  SUBCASE("all states match individual evaluation") {
    StateSet all;
    for (int s = 0; s < 10; ++s) all.insert(s);
    const auto scores = TailForwardSparse(emb, b, all);
    REQUIRE(scores.size() == 10);
    for (int s = 0; s < 10; ++s) CHECK(scores.at(s) == TailForward(emb, b.Tail(s)));
  }
  SUBCASE("two active states cost two tails") {
    MacReport m;
    const auto scores = TailForwardSparse(emb, b, {3, 7}, &m);
    CHECK(scores.size() == 2);
    CHECK(scores.count(3) == 1);
    CHECK(scores.count(7) == 1);
    CHECK(m.tail_macs_lazy == 2 * DenseMacsOracle(b.Tail(0)));
  }
  SUBCASE("unknown state") {
    CHECK_THROWS_AS(TailForwardSparse(emb, b, {10}, nullptr), LookupError);
    CHECK_THROWS_AS(TailForwardSparse(emb, b, {-1}, nullptr), LookupError);
  }
}

TEST_CASE("sparse evaluation is bit-identical to per-tail evaluation") {
  ModelBundle b = test::SmallBundle(7, 5, 11, 12, 2, {9, 4});
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const auto emb = test::RandomFrames(1, b.embedding.OutputDim(), rng, 3.0f)[0].values;
    StateSet active;
    for (int s = 0; s < 7; ++s)
      if (rng() % 2) active.insert(s);
    const auto scores = TailForwardSparse(emb, b, active);
    REQUIRE(scores.size() == active.size());
    for (int s : active) CHECK(scores.at(s) == TailForward(emb, b.Tail(s)));
  }
}

TEST_CASE("embedding is causal") {
  ModelBundle b = test::SmallBundle(2, 4, 8, 8, 4);
  std::mt19937_64 rng(5);
  const auto frames = test::RandomFrames(30, 4, rng);
  const auto full = EmbedForward(frames, b.embedding);
  for (size_t t : {1u, 2u, 5u, 17u, 29u}) {
    const FrameSequence prefix(frames.begin(), frames.begin() + t);
    const auto part = EmbedForward(prefix, b.embedding);
    REQUIRE(part.size() == t);
    for (size_t i = 0; i < t; ++i) CHECK(part[i] == full[i]);
  }
}

TEST_CASE("streaming embedding matches batch embedding and resets") {
  ModelBundle b = test::SmallBundle(2, 4, 8, 8, 4);
  std::mt19937_64 rng(6);
  const auto frames = test::RandomFrames(12, 4, rng);
  const auto batch = EmbedForward(frames, b.embedding);
  EmbeddingStream stream(b.embedding);
  for (int pass = 0; pass < 2; ++pass) {
    for (size_t i = 0; i < frames.size(); ++i) CHECK(stream.Forward(frames[i].values) == batch[i]);
    stream.Reset();
  }
}

TEST_CASE("MAC accounting") {
  ModelBundle b = test::SmallBundle(10, 6, 3, 8, 3, {5});
  const uint64_t per_tail = DenseMacsOracle(b.Tail(0));
  uint64_t embed = 0;
  for (const auto &l : b.embedding.layers) {
    if (auto *d = std::get_if<DenseLayer>(&l)) embed += static_cast<uint64_t>(d->in_dim) * d->out_dim;
    if (auto *m = std::get_if<MemoryLayer>(&l)) embed += static_cast<uint64_t>(m->taps) * m->dim;
  }
  CHECK(b.embedding.MacsPerFrame() == embed);
  CHECK(b.FullTailMacsPerFrame() == 10 * per_tail);

  SUBCASE("empty history") {
    const MacReport m = CountMacs(b, {});
    CHECK(m.frames == 0);
    CHECK(m.tail_macs_full == 0);
    CHECK(m.tail_macs_lazy == 0);
    CHECK(m.LazyRatio() == 0.0);
  }
  SUBCASE("full activation") {
    StateSet all;
    for (int s = 0; s < 10; ++s) all.insert(s);
    const MacReport m = CountMacs(b, {all});
    CHECK(m.tail_macs_lazy == m.tail_macs_full);
    CHECK(m.embedding_macs == embed);
  }
  SUBCASE("two of ten states active on average") {
    std::vector<StateSet> hist;
    for (int t = 0; t < 100; ++t) {
      if (t % 2 == 0) hist.push_back({1, 2, 3});
      else hist.push_back({4});
    }
    const MacReport m = CountMacs(b, hist);
    CHECK(m.frames == 100);
    CHECK(m.tail_macs_full == 100 * 10 * per_tail);
    CHECK(m.tail_macs_lazy == 200 * per_tail);
    CHECK(m.LazyRatio() == doctest::Approx(0.2));
  }
  SUBCASE("lazy cost grows with the active sets") {
    std::mt19937_64 rng(2);
    std::vector<StateSet> small, large;
    for (int t = 0; t < 40; ++t) {
      StateSet s;
      for (int k = 0; k < 10; ++k)
        if (rng() % 3 == 0) s.insert(k);
      StateSet l = s;
      l.insert(static_cast<int>(rng() % 10));
      small.push_back(s);
      large.push_back(l);
    }
    const MacReport ms = CountMacs(b, small), ml = CountMacs(b, large);
    CHECK(ms.tail_macs_lazy <= ml.tail_macs_lazy);
    CHECK(ml.tail_macs_lazy <= ml.tail_macs_full);
  }
}

TEST_CASE("model file round trip") {
  test::TempDir dir("model");
  ModelBundle b = test::SmallBundle(4, 6, 77, 10, 3, {7, 3});
  b.feature_config.running_mean_norm = true;
  b.feature_config.log_floor = 1e-7;
  SaveModel(b, dir.File("m.btnn"));
  const ModelBundle back = LoadModel(dir.File("m.btnn"));
  CHECK(back == b);
  CHECK(back.num_states == 4);
  CHECK(back.embedding.input_dim == 6);
  CHECK(back.embedding.OutputDim() == 10);

  ModelBundle d = InitModel(3, ModelTopology{}, FeatureConfig{}, 1);
  SaveModel(d, dir.File("d.btnn"));
  const ModelBundle dback = LoadModel(dir.File("d.btnn"));
  CHECK(dback.num_states == 3);
  CHECK(dback.embedding.input_dim == 40);
  CHECK(dback.embedding.OutputDim() == 64);
  CHECK(dback == d);
}

TEST_CASE("model file errors") {
  test::TempDir dir("model");
  const std::string path = dir.File("m.btnn");
  SaveModel(test::SmallBundle(3, 4, 1), path);
  const std::string good = Slurp(path);

  SUBCASE("missing tail names the state") {
    std::string bad = good;
    bad.replace(bad.find("num_states 3"), 12, "num_states 4");
    bad.replace(bad.find("tail 2 "), 7, "tail 3 ");
    Dump(path, bad);
    try {
      LoadModel(path);
      FAIL("expected a format error");
    } catch (const FormatError &e) {
      CHECK(std::string(e.what()).find("state 2 of 4") != std::string::npos);
    }
  }
  SUBCASE("version mismatch") {
    std::string bad = good;
    bad.replace(bad.find("btnn-model 1"), 12, "btnn-model 9");
    Dump(path, bad);
    CHECK_THROWS_AS(LoadModel(path), FormatError);
  }
  SUBCASE("truncated weights") {
    Dump(path, good.substr(0, good.size() - 5));
    CHECK_THROWS_AS(LoadModel(path), Error);
  }
  SUBCASE("trailing bytes") {
    Dump(path, good + "xx");
    CHECK_THROWS_AS(LoadModel(path), FormatError);
  }
  SUBCASE("inconsistent dims") {
    std::string bad = good;
    const size_t at = bad.find("dense 4 ");
    REQUIRE(at != std::string::npos);
    bad.replace(at, 8, "dense 5 ");
    Dump(path, bad);
    CHECK_THROWS_AS(LoadModel(path), FormatError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(LoadModel(dir.File("none")), IoError); }
}

TEST_CASE("bundle validation") {
  ModelBundle b = test::SmallBundle(3, 4, 1);
  CHECK_NOTHROW(b.Validate());
  SUBCASE("tail must end in one sigmoid output") {
    b.tails[1].layers.back().activation = Activation::kRelu;
    CHECK_THROWS_AS(b.Validate(), ShapeError);
  }
  SUBCASE("tail ids follow their index") {
    b.tails[2].state_id = 0;
    CHECK_THROWS_AS(b.Validate(), ShapeError);
  }
  SUBCASE("non-finite weight") {
    b.tails[0].layers[0].weights[0] = std::nanf("");
    CHECK_THROWS_AS(b.Validate(), ShapeError);
  }
  SUBCASE("memory taps") {
    EmbeddingNet net;
    net.input_dim = 2;
    net.layers.push_back(Memory(2, {}));
    CHECK_THROWS_AS(net.Validate(), ShapeError);
  }
}
