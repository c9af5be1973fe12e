// tests/acceptance/acceptance.cc

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

// Acceptance run: one PASS/FAIL line per criterion with its measurement and
// wall time. Exit status is non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "btnn/binary-io.h"
#include "btnn/calibration.h"
#include "btnn/decoder.h"
#include "btnn/eval.h"
#include "btnn/features.h"
#include "btnn/keyword-graph.h"
#include "btnn/nnet.h"
#include "btnn/synth.h"
#include "btnn/training.h"
#include "decode-oracle.h"

using namespace btnn;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void Run(const std::string &name, double time_limit_s, const std::function<Outcome()> &body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception &e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::string detail = o.detail;
  if (time_limit_s > 0 && secs >= time_limit_s) {
    o.pass = false;
    detail += "; over time limit " + std::to_string(time_limit_s) + " s";
  }
  if (!o.pass) ++failures;
  std::printf("%s %s (%s) [%.3f s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), detail.c_str(),
              secs);
  std::fflush(stdout);
}

std::string Fmt(const char *format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

// ---- calibration ----

Outcome CalibrationFidelity() {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> a(-1.0, 0.5), b(1.5, 0.8);
  std::bernoulli_distribution pick(0.3);
  std::vector<double> s(10000);
  for (double &x : s) x = pick(rng) ? a(rng) : b(rng);
  const BoundaryTable t = EstimateTable(s, 100);

  // Sup over the sample points (both sides of each ECDF jump) and a grid.
  std::vector<double> sorted = s;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double sup = 0;
  for (size_t i = 0; i < sorted.size(); ++i) {
    const double p = PositiveProb(sorted[i], t);
    sup = std::max({sup, std::fabs(p - i / n), std::fabs(p - (i + 1) / n)});
  }
  for (double x = sorted.front() - 1; x <= sorted.back() + 1; x += 1e-3) {
    const double ecdf =
        static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin()) / n;
    sup = std::max(sup, std::fabs(PositiveProb(x, t) - ecdf));
  }
  return {sup <= 0.02, "sup-norm " + Fmt("%.5f", sup) + " <= 0.02"};
}

Outcome RecursionOracle() {
  std::mt19937_64 rng(7);
  double worst = 0;
  for (int v = 0; v < 50; ++v) {
    const int len = 1 + static_cast<int>(rng() % 200);
    std::vector<int64_t> c(len);
    for (auto &x : c) x = static_cast<int64_t>(rng() % 10000);
    c[rng() % len] += 1;
    const double total = static_cast<double>(std::accumulate(c.begin(), c.end(), int64_t{0}));
    std::vector<double> want{0.0};
    int64_t run = 0;
    for (int i = 0; i + 1 < len; ++i) want.push_back(static_cast<double>(run += c[i]) / total);
    want.push_back(1.0);
    const auto got = ProbsFromCounts(c);
    if (got.size() != want.size()) return {false, "length mismatch"};
    for (size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::fabs(got[i] - want[i]));
  }
  return {worst <= 1e-12, "max diff " + Fmt("%.3g", worst) + " <= 1e-12 over 50 vectors"};
}

Outcome FusionSuite() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1), sc(0.01, 16), kk(0.05, 20);
  int violations = 0;
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const double p = u(rng), q = u(rng), sp = sc(rng), sn = sc(rng), k = kk(rng);
    const double f = Fuse(p, q, sp, sn);
    if (!(f >= 0 && f <= 1)) ++violations;
    if (Fuse(1.0, 0.0, sp, sn) != 1.0) ++violations;
    if (Fuse(0.0, q, sp, sn) != 0.0) ++violations;
    if (Fuse(p, q, sp, 0.0) != p) ++violations;
    worst = std::max(worst, std::fabs(Fuse(p, q, sp, sp) - std::sqrt(p * (1 - q))));
    worst = std::max(worst, std::fabs(Fuse(p, q, k * sp, k * sn) - f));
    const double dp = u(rng) * (1 - p), dq = u(rng) * (1 - q);
    if (Fuse(p + dp, q, sp, sn) < f) ++violations;
    if (Fuse(p, q + dq, sp, sn) > f) ++violations;
  }
  const bool ok = violations == 0 && worst <= 1e-12;
  return {ok, std::to_string(violations) + " violations, closed-form max diff " +
                  Fmt("%.3g", worst) + " over 10000 tuples"};
}

// ---- training ----

Outcome GradientCorrectness() {
  double worst = 0;
  for (int net = 0; net < 10; ++net) {
    std::mt19937_64 rng(500 + net);
    const int states = 2 + net % 4, dim = 3 + net % 5;
    ModelBundle b = test::SmallBundle(states, dim, 900 + net, 4 + net % 5, 1 + net % 3,
                                      net % 2 ? std::vector<int>{5} : std::vector<int>{6, 3});
    // Fresh init has zero biases, which parks dead-input ReLUs exactly on the kink.
    std::normal_distribution<float> bias(0.0f, 0.3f);
    for (auto &layer : b.embedding.layers)
      if (auto *d = std::get_if<DenseLayer>(&layer))
        for (float &x : d->bias) x = bias(rng);
    for (auto &tail : b.tails)
      for (auto &l : tail.layers)
        for (float &x : l.bias) x = bias(rng);
    AlignedUtterance utt;
    utt.id = "g";
    utt.frames = test::RandomFrames(6, dim, rng);
    for (int t = 0; t < 6; ++t) utt.states.push_back(static_cast<int>(rng() % states));
    for (int probe = 0; probe < 3; ++probe) {
      const int64_t frame = static_cast<int64_t>(rng() % 6);
      const int state = static_cast<int>(rng() % states);
      worst = std::max(worst, GradientCheck(b, utt, frame, state, 1e-4));
    }
  }
  return {worst <= 1e-4, "max relative error " + Fmt("%.3g", worst) + " <= 1e-4 over 10 networks"};
}

// ---- decoder ----

Outcome LazyFullEquivalence() {
  int mismatches = 0;
  uint64_t lazy = 0, full = 0;
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    const test::DecodeTriple t = test::RandomTriple(seed);
    const auto a = test::TraceSession(t, false), b = test::TraceSession(t, true);
    if (a.events != b.events || a.tokens != b.tokens) ++mismatches;
    lazy += a.macs.tail_macs_lazy;
    full += b.macs.tail_macs_lazy;
  }
  return {mismatches == 0, std::to_string(mismatches) + " of 100 triples differ; lazy/full tail MACs " +
                               Fmt("%.3f", static_cast<double>(lazy) / static_cast<double>(full))};
}

Outcome BruteForceOracle() {
  std::mt19937_64 rng(3);
  int cases = 0, mismatches = 0;
  double worst = 0;
  for (int m = 1; m <= 5; ++m)
    for (int frames = 1; frames <= 8; ++frames)
      for (int skip = 0; skip <= 2; ++skip)
        for (int rep = 0; rep < 4; ++rep) {
          std::vector<int> states(m);
          for (int &s : states) s = static_cast<int>(rng() % 4);
          const KeywordGraph g = BuildGraph(states, {skip, 0.25 * (rng() % 12)});
          const auto conf = test::RandomConfidences(frames, 4, rng);
          const auto oracle = test::EnumerateAllPaths(conf, g);
          const auto run = test::RunOnConfidences(conf, g, DecodeConfig::Unpruned());
          ++cases;
          for (int t = 0; t < frames; ++t) {
            const double got = run.tokens[t].finals.empty() ? test::kNegInf
                                                            : run.tokens[t].finals.front().log_score;
            const double want = oracle.final_best[t];
            if (std::isinf(got) || std::isinf(want)) {
              if (got != want) ++mismatches;
            } else {
              worst = std::max(worst, std::fabs(got - want));
              if (std::fabs(got - want) > 1e-9) ++mismatches;
            }
          }
        }
  return {mismatches == 0, std::to_string(cases) + " instances, " + std::to_string(mismatches) +
                               " mismatches, max diff " + Fmt("%.3g", worst)};
}

Outcome PunishmentMonotonicity() {
  std::mt19937_64 rng(4);
  int violations = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const int m = 2 + static_cast<int>(rng() % 4), frames = 3 + static_cast<int>(rng() % 6);
    std::vector<int> states(m);
    for (int &s : states) s = static_cast<int>(rng() % 5);
    const auto conf = test::RandomConfidences(frames, 5, rng);
    const int skip = 1 + static_cast<int>(rng() % 2);
    double prev = std::numeric_limits<double>::infinity();
    for (double p : {0.0, 1.0, 2.0, 4.0, 8.0}) {
      const KeywordGraph g = BuildGraph(states, {skip, p});
      double best = test::kNegInf;
      for (const auto &ts : test::RunOnConfidences(conf, g, DecodeConfig::Unpruned()).tokens)
        for (const Token &tok : ts.finals) best = std::max(best, tok.log_score);
      if (best > prev) ++violations;
      prev = best;
    }
  }
  return {violations == 0, std::to_string(violations) + " violations over 50 instances"};
}

Outcome StreamingDeterminism() {
  int mismatches = 0;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed * 31);
    FeatureConfig fc;
    ModelTopology topo;
    topo.input_dim = fc.num_bins;
    topo.embed_dim = 16;
    topo.tail_hidden = {8};
    const int states = 6;
    const ModelBundle bundle = InitModel(states, topo, fc, seed);
    const CalibrationSet calib = test::RandomCalibration(states, rng);
    std::vector<KeywordGraph> graphs;
    for (int k = 0; k < 2; ++k) {
      std::vector<int> seq(2 + rng() % 3);
      for (int &s : seq) s = static_cast<int>(rng() % states);
      graphs.push_back(BuildGraph(seq, {1, 2.0}, "k" + std::to_string(k)));
    }
    DecodeConfig config;
    config.threshold = -2.5;
    config.min_frames = 3;
    config.refractory_frames = 5;

    AudioBuffer audio;
    std::normal_distribution<double> noise(0, 3000);
    const size_t len = 8000 + rng() % 16000;
    for (size_t i = 0; i < len; ++i)
      audio.samples.push_back(static_cast<int16_t>(std::clamp(noise(rng), -32768.0, 32767.0)));

    auto render = [](const std::vector<DetectionEvent> &ev, const MacReport &m) {
      std::ostringstream os;
      for (const auto &e : ev)
        os << e.keyword << ' ' << e.start_frame << ' ' << e.end_frame << ' ' << FormatDouble(e.confidence)
           << '\n';
      os << m.frames << ' ' << m.embedding_macs << ' ' << m.tail_macs_full << ' ' << m.tail_macs_lazy
         << '\n';
      return os.str();
    };

    const DecodeResult whole =
        DecodeStream(MelFilterbank(audio, fc), bundle, calib, graphs, config);
    const std::string one_shot = render(whole.events, whole.macs);

    OnlineFbank fbank(fc);
    DecodeSession session(bundle, calib, graphs, config);
    std::vector<DetectionEvent> events;
    size_t pos = 0;
    while (pos < audio.samples.size()) {
      const size_t n = std::min<size_t>(1 + rng() % 2000, audio.samples.size() - pos);
      fbank.AcceptWaveform(std::span<const int16_t>(audio.samples).subspan(pos, n));
      pos += n;
      auto ev = session.AcceptFrames(fbank.TakeFrames());
      events.insert(events.end(), ev.begin(), ev.end());
    }
    if (render(events, session.Macs()) != one_shot) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + " of 20 streams differ"};
}

// ---- end to end ----

struct CorpusDecode {
  CandidateFile candidates;
  MacReport macs;
};

CorpusDecode DecodeCorpus(const SynthCorpus &corpus, const ModelBundle &bundle,
                          const CalibrationSet &calib, const std::vector<KeywordGraph> &graphs,
                          const DecodeConfig &config) {
  CorpusDecode out;
  out.candidates.refractory_frames = config.refractory_frames;
  for (const auto &utt : corpus.data.utterances) {
    DecodeSession session(bundle, calib, graphs, config);
    auto &cands = out.candidates.utterances[utt.id];
    session.SetCandidateHook([&](int64_t frame, const std::string &kw, const Token &tok) {
      cands.push_back({kw, frame, tok.start_frame, tok.AverageScore()});
    });
    session.AcceptFrames(utt.frames);
    out.macs += session.Macs();
  }
  return out;
}

struct Pipeline {
  ModelBundle bundle;
  CalibrationSet constant;  // (4, 1) everywhere
  CalibrationSet adapted;
  std::vector<LabeledScores> dev_scores;
  std::vector<KeywordGraph> graphs;
  SynthCorpus dev, test;
};

Pipeline BuildPipeline(const SynthSpec &base, int train_n, int dev_n, int test_n) {
  SynthSpec spec = base;
  Pipeline p;
  spec.num_utterances = train_n;
  const SynthCorpus train = SynthesizeCorpus(spec, "train");
  spec.num_utterances = dev_n;
  p.dev = SynthesizeCorpus(spec, "dev");
  spec.num_utterances = test_n;
  p.test = SynthesizeCorpus(spec, "test");

  FeatureConfig fc;
  fc.num_bins = spec.feature_dim;
  ModelTopology topo;
  topo.input_dim = spec.feature_dim;
  TrainConfig tc;
  tc.epochs = 50;
  p.bundle = Train(train.data, InitModel(spec.num_states, topo, fc, 1), tc).bundle;

  p.dev_scores = CollectStateScores(p.bundle, p.dev.data);
  p.constant = EstimateCalibration(p.dev_scores, 100, 4.0, 1.0);
  p.adapted = p.constant;
  const auto grid = ScaleGrid(std::vector<double>{0.5, 1, 2, 4, 8});
  for (int s = 0; s < spec.num_states; ++s) {
    auto [sp, sn] = AdaptScales(p.dev_scores[s], grid, p.adapted.per_state[s]);
    p.adapted.per_state[s].scale_pos = sp;
    p.adapted.per_state[s].scale_neg = sn;
  }

  const Lexicon lex = SynthLexicon(spec);
  for (size_t k = 0; k < spec.keyword_state_seqs.size(); ++k)
    p.graphs.push_back(
        BuildGraph(KeywordToStates(spec.KeywordName(k), lex), JumpConfig{}, spec.KeywordName(k)));
  return p;
}

struct Score {
  double threshold = 0, wakeup = 0, fa_per_24h = 0;
  bool found = false;
  MacReport test_macs;
};

// Threshold chosen on dev for zero false alarms, then applied to test.
Score DevTunedScore(const Pipeline &p, const CalibrationSet &calib) {
  const DecodeConfig config;
  const CorpusDecode dev = DecodeCorpus(p.dev, p.bundle, calib, p.graphs, config);
  const CorpusDecode test = DecodeCorpus(p.test, p.bundle, calib, p.graphs, config);
  Score s;
  s.test_macs = test.macs;
  const auto ts = CandidateThresholds(dev.candidates);
  const SweepResult sweep = SweepCandidates(ts, dev.candidates, p.dev.refs, 0.0);
  if (!sweep.best) return s;
  s.found = true;
  s.threshold = sweep.best->threshold;
  const ResultsMap r = ReplayDetections(test.candidates, s.threshold);
  s.wakeup = WakeupRate(r, p.test.refs);
  s.fa_per_24h = FalseAlarmRate(CountFalseAlarms(r, p.test.refs), p.test.refs.negative_hours);
  return s;
}

Score e2e_score;
bool e2e_ran = false;

Outcome EndToEnd() {
  SynthSpec spec;  // 8 states, dim 20, 2 keywords, noise 0.3
  const Pipeline p = BuildPipeline(spec, 500, 200, 200);
  e2e_score = DevTunedScore(p, p.adapted);
  e2e_ran = true;
  if (!e2e_score.found) return {false, "no dev threshold reaches zero false alarms"};
  const bool ok = e2e_score.wakeup >= 0.95 && e2e_score.fa_per_24h == 0.0;
  return {ok, "test wakeup " + Fmt("%.4f", e2e_score.wakeup) + " at " +
                  Fmt("%.2f", e2e_score.fa_per_24h) + " FA/24h, dev-tuned threshold " +
                  Fmt("%.4f", e2e_score.threshold) + "; need wakeup >= 0.95 at 0 FA"};
}

Outcome ComputationSaving() {
  if (!e2e_ran) return {false, "end-to-end run did not complete"};
  const MacReport &m = e2e_score.test_macs;
  const double ratio = m.LazyRatio();
  return {ratio <= 0.5, "tail_lazy " + std::to_string(m.tail_macs_lazy) + " / tail_full " +
                            std::to_string(m.tail_macs_full) + " = " + Fmt("%.4f", ratio) +
                            " <= 0.5"};
}

Outcome AdaptiveVsConstant() {
  SynthSpec spec;
  spec.rng_seed = 5;
  spec.state_weights = {6, 1, 1, 3, 1, 6, 1, 0.5};
  const Pipeline p = BuildPipeline(spec, 500, 200, 200);
  int worse = 0;
  for (int s = 0; s < spec.num_states; ++s) {
    const double a = WeightedLogLikelihood(p.dev_scores[s], p.adapted.per_state[s]);
    const double c = WeightedLogLikelihood(p.dev_scores[s], p.constant.per_state[s]);
    if (a < c) ++worse;
  }
  const Score adapted = DevTunedScore(p, p.adapted), constant = DevTunedScore(p, p.constant);
  const bool wake_ok = adapted.found && constant.found && adapted.wakeup >= constant.wakeup - 0.01;
  return {worse == 0 && wake_ok,
          std::to_string(worse) + " states with lower dev log-likelihood; test wakeup adaptive " +
              Fmt("%.4f", adapted.wakeup) + " vs constant " + Fmt("%.4f", constant.wakeup)};
}

}  // namespace

int main() {
  Run("calibration fidelity", 1.0, CalibrationFidelity);
  Run("boundary recursion equals cumulative sum", 0, RecursionOracle);
  Run("fusion algebra", 0, FusionSuite);
  Run("gradient correctness", 5.0, GradientCorrectness);
  Run("lazy/full decode equivalence", 30.0, LazyFullEquivalence);
  Run("brute-force decode oracle", 0, BruteForceOracle);
  Run("punishment monotonicity", 0, PunishmentMonotonicity);
  Run("end-to-end synthetic spotting", 300.0, EndToEnd);
  Run("computation saving", 0, ComputationSaving);
  Run("adaptive vs constant scales", 0, AdaptiveVsConstant);
  Run("streaming determinism", 0, StreamingDeterminism);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
