// tools/btnn.cc

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

// Command-line front end: btnn <subcommand> [options]

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "CLI11.hpp"
#include "btnn/binary-io.h"
#include "btnn/calibration.h"
#include "btnn/dataset.h"
#include "btnn/decoder.h"
#include "btnn/error.h"
#include "btnn/eval.h"
#include "btnn/features.h"
#include "btnn/keyword-graph.h"
#include "btnn/nnet.h"
#include "btnn/synth.h"
#include "btnn/training.h"
#include "btnn/wave-io.h"

namespace {

using namespace btnn;

// Fills options not given on the command line from a TOML/INI-style file.
void ApplyConfigFile(CLI::App *sub, const std::string &path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path);
  CLI::ConfigTOML reader;
  for (const auto &item : reader.from_config(is)) {
    if (item.name == "++" || item.name == "--") continue;
    CLI::Option *opt = sub->get_option_no_throw("--" + item.name);
    if (opt == nullptr) throw ConfigError(path + ": unknown key '" + item.name + "'");
    if (opt->count() > 0) continue;
    opt->add_result(item.inputs);
    opt->run_callback();
  }
}

std::vector<double> ParseDoubles(const std::string &csv, const std::string &what) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception &) {
      throw ConfigError(what + ": '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw ConfigError(what + " is empty");
  return out;
}

std::string MacSummary(const MacReport &m) {
  char ratio[32];
  std::snprintf(ratio, sizeof(ratio), "%.4f", m.LazyRatio());
  return "macs frames=" + std::to_string(m.frames) + " embedding=" +
         std::to_string(m.embedding_macs) + " tail_full=" + std::to_string(m.tail_macs_full) +
         " tail_lazy=" + std::to_string(m.tail_macs_lazy) + " lazy_ratio=" + ratio;
}

AlignedDataset LoadDataset(const std::string &manifest, int num_states) {
  auto entries = ReadManifest(manifest);
  if (entries.empty()) throw FormatError(manifest + ": no utterances");
  return LoadAlignedDataset(manifest, ReadFrameDim(entries.front().features), num_states);
}

// ---- train ----
struct TrainArgs {
  std::string manifest, out, config, optimizer = "adam";
  int num_states = 0;
  ModelTopology topo;
  TrainConfig train;
  uint64_t init_seed = 1;
};

void RunTrain(TrainArgs &a) {
  AlignedDataset data = LoadDataset(a.manifest, a.num_states);
  if (a.optimizer == "adam") a.train.optimizer = Optimizer::kAdam;
  else if (a.optimizer == "sgd") a.train.optimizer = Optimizer::kSgd;
  else throw ConfigError("unknown optimizer '" + a.optimizer + "' (expected adam or sgd)");
  FeatureConfig fc;
  fc.num_bins = a.topo.input_dim =
      static_cast<int>(data.utterances.front().frames.front().values.size());
  ModelBundle init = InitModel(a.num_states, a.topo, fc, a.init_seed);
  TrainResult r = Train(data, init, a.train);
  SaveModel(r.bundle, a.out);
  for (size_t s = 0; s < r.loss_trace.size(); ++s)
    if (!r.loss_trace[s].empty())
      std::cout << "state " << s << " final_loss " << FormatDouble(r.loss_trace[s].back()) << '\n';
}

// ---- calibrate ----
struct CalibArgs {
  std::string manifest, model, out, config, fusion = "complement";
  int segments = 100;
  double scale_pos = 4.0, scale_neg = 1.0;
};

void RunCalibrate(const CalibArgs &a) {
  ModelBundle bundle = LoadModel(a.model);
  AlignedDataset data = LoadDataset(a.manifest, bundle.num_states);
  CalibrationSet calib =
      EstimateCalibration(CollectStateScores(bundle, data), a.segments, a.scale_pos, a.scale_neg);
  calib.fusion = ParseFusionMode(a.fusion);
  SaveCalibration(calib, a.out);
}

// ---- adapt-scales ----
struct AdaptArgs {
  std::string dev, calib, model, out, config, grid = "0.5,1,2,4,8";
};

void RunAdapt(const AdaptArgs &a) {
  ModelBundle bundle = LoadModel(a.model);
  CalibrationSet calib = LoadCalibration(a.calib);
  if (calib.num_states != bundle.num_states)
    throw ConfigError("model has " + std::to_string(bundle.num_states) +
                      " states but calibration has " + std::to_string(calib.num_states));
  AlignedDataset dev = LoadDataset(a.dev, bundle.num_states);
  const auto grid = ScaleGrid(ParseDoubles(a.grid, "--grid"));
  const auto scores = CollectStateScores(bundle, dev);
  for (int s = 0; s < calib.num_states; ++s) {
    StateCalibration &sc = calib.per_state[s];
    auto [sp, sn] = AdaptScales(scores[s], grid, sc, calib.fusion);
    sc.scale_pos = sp;
    sc.scale_neg = sn;
    std::cout << "state " << s << " scales " << FormatDouble(sp) << ' ' << FormatDouble(sn)
              << " loglik " << FormatDouble(WeightedLogLikelihood(scores[s], sc, calib.fusion))
              << '\n';
  }
  SaveCalibration(calib, a.out.empty() ? a.calib : a.out);
}

// ---- enroll ----
struct EnrollArgs {
  std::string keyword, lexicon, out, config, graphemes;
  int num_states = 0;
  JumpConfig jump;
};

void RunEnroll(const EnrollArgs &a) {
  Lexicon lex;
  if (!a.graphemes.empty()) {
    lex = GraphemeLexicon(a.graphemes);
  } else {
    if (a.lexicon.empty()) throw ConfigError("enroll needs --lexicon or --graphemes");
    lex = ReadLexicon(a.lexicon,
                      a.num_states > 0 ? a.num_states : std::numeric_limits<int>::max());
  }
  KeywordGraph g = BuildGraph(KeywordToStates(a.keyword, lex), a.jump, a.keyword);
  SaveGraph(g, a.out);
  std::cout << "keyword '" << a.keyword << "' nodes " << g.num_nodes << " arcs " << g.arcs.size()
            << '\n';
}

// ---- spot ----
struct SpotArgs {
  std::string model, calib, audio, features, manifest, out, frame_scores, candidates, config;
  std::vector<std::string> graphs;
  DecodeConfig decode;
  bool exhaustive = false;
};

void RunSpot(const SpotArgs &a) {
  const int sources = !a.audio.empty() + !a.features.empty() + !a.manifest.empty();
  if (sources != 1) throw ConfigError("give exactly one of --audio, --features, --manifest");
  ModelBundle bundle = LoadModel(a.model);
  CalibrationSet calib = LoadCalibration(a.calib);
  std::vector<KeywordGraph> graphs;
  for (const auto &p : a.graphs) graphs.push_back(LoadGraph(p));

  std::ofstream scores_out;
  if (!a.frame_scores.empty()) {
    scores_out.open(a.frame_scores);
    if (!scores_out) throw IoError("cannot open " + a.frame_scores + " for writing");
  }
  MacReport total;
  CandidateFile cands;
  cands.refractory_frames = a.decode.refractory_frames;
  auto decode = [&](const std::string &utt, const FrameSequence &frames) {
    DecodeSession session(bundle, calib, graphs, a.decode, a.exhaustive);
    auto &utt_cands = cands.utterances[utt.empty() ? std::string("-") : utt];
    session.SetCandidateHook([&](int64_t frame, const std::string &kw, const Token &tok) {
      utt_cands.push_back({kw, frame, tok.start_frame, tok.AverageScore()});
    });
    if (scores_out.is_open())
      session.SetFrameScoreHook([&](int64_t frame, const StateConfidences &conf) {
        if (!utt.empty()) scores_out << utt << ' ';
        scores_out << frame;
        for (const auto &[s, c] : conf) scores_out << ' ' << s << ':' << FormatDouble(c);
        scores_out << '\n';
      });
    auto events = session.AcceptFrames(frames);
    total += session.Macs();
    return events;
  };

  if (a.manifest.empty()) {
    FrameSequence frames = !a.audio.empty()
                               ? MelFilterbank(ReadWave(a.audio), bundle.feature_config)
                               : ReadFrames(a.features, bundle.embedding.input_dim);
    for (const auto &e : decode("", frames))
      std::cout << e.keyword << ' ' << e.start_frame << ' ' << e.end_frame << ' '
                << FormatDouble(e.confidence) << '\n';
  } else {
    ResultsMap results;
    for (const auto &entry : ReadManifest(a.manifest)) {
      const std::string utt = std::filesystem::path(entry.features).stem().string();
      results[utt] = decode(utt, ReadFrames(entry.features, bundle.embedding.input_dim));
    }
    if (a.out.empty()) throw ConfigError("--manifest needs --out for the results file");
    WriteResults(a.out, results);
  }
  if (!a.candidates.empty()) WriteCandidates(a.candidates, cands);
  std::cout << MacSummary(total) << '\n';
}

// ---- eval ----
struct EvalArgs {
  std::string results, candidates, refs, thresholds, format = "table", config;
  double fa_target = 1.0;
};

void RunEval(const EvalArgs &a) {
  if (a.results.empty() == a.candidates.empty())
    throw ConfigError("give exactly one of --results, --candidates");
  const ReferenceSet refs = ReadReferences(a.refs);
  std::vector<double> thresholds;
  if (!a.thresholds.empty()) thresholds = ParseDoubles(a.thresholds, "--thresholds");
  SweepResult sweep;
  if (!a.results.empty()) {
    const ResultsMap results = ReadResults(a.results);
    if (thresholds.empty()) thresholds = CandidateThresholds(results);
    std::sort(thresholds.begin(), thresholds.end());
    if (thresholds.empty()) thresholds.push_back(std::numeric_limits<double>::infinity());
    sweep = Sweep(thresholds, results, refs, a.fa_target);
  } else {
    const CandidateFile cands = ReadCandidates(a.candidates);
    if (thresholds.empty()) thresholds = CandidateThresholds(cands);
    std::sort(thresholds.begin(), thresholds.end());
    if (thresholds.empty()) thresholds.push_back(std::numeric_limits<double>::infinity());
    sweep = SweepCandidates(thresholds, cands, refs, a.fa_target);
  }

  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };
  if (a.format == "tsv") {
    std::cout << "threshold\twakeup_rate\tfa_per_24h\tbest\n";
    for (const auto &p : sweep.points)
      std::cout << fmt(p.threshold) << '\t' << fmt(p.wakeup_rate) << '\t'
                << fmt(p.false_alarms_per_24h) << '\t' << (sweep.best == p ? 1 : 0) << '\n';
    return;
  }
  if (a.format != "table") throw ConfigError("unknown --output-format '" + a.format + "'");
  char line[128];
  std::snprintf(line, sizeof(line), "%14s %12s %12s\n", "threshold", "wakeup_rate", "fa_per_24h");
  std::cout << line;
  for (const auto &p : sweep.points) {
    std::snprintf(line, sizeof(line), "%14.6f %12.6f %12.6f\n", p.threshold, p.wakeup_rate,
                  p.false_alarms_per_24h);
    std::cout << line;
  }
  if (sweep.best) {
    std::snprintf(line, sizeof(line), "best threshold %.6f wakeup_rate %.6f fa_per_24h %.6f\n",
                  sweep.best->threshold, sweep.best->wakeup_rate, sweep.best->false_alarms_per_24h);
    std::cout << line;
  } else {
    std::cout << "best none (no threshold meets fa target " << fmt(a.fa_target) << ")\n";
  }
}

// ---- synth-data ----
struct SynthArgs {
  std::string out, keywords = "0,1,2,3;4,5,6,7", weights, config;
  SynthSpec spec;
  int train = 500, dev = 200, test = 200;
};

void RunSynth(SynthArgs &a) {
  a.spec.keyword_state_seqs.clear();
  std::stringstream ks(a.keywords);
  std::string kw;
  while (std::getline(ks, kw, ';')) {
    std::vector<int> states;
    for (double v : ParseDoubles(kw, "--keywords")) states.push_back(static_cast<int>(v));
    a.spec.keyword_state_seqs.push_back(states);
  }
  if (!a.weights.empty()) a.spec.state_weights = ParseDoubles(a.weights, "--state-weights");
  std::filesystem::create_directories(a.out);
  WriteLexicon((std::filesystem::path(a.out) / "lexicon.txt").string(), SynthLexicon(a.spec));
  for (auto [name, n] : {std::pair{"train", a.train}, {"dev", a.dev}, {"test", a.test}}) {
    if (n == 0) continue;
    SynthSpec s = a.spec;
    s.num_utterances = n;
    SynthPaths p = WriteSyntheticSplit(s, a.out, name);
    std::cout << name << ' ' << p.manifest << ' ' << p.refs << '\n';
  }
}

// ---- inspect ----
void RunInspect(const std::string &model) {
  ModelBundle b = LoadModel(model);
  StateSet all;
  for (int s = 0; s < b.num_states; ++s) all.insert(s);
  const MacReport m = CountMacs(b, {all});
  std::cout << "input_dim " << b.embedding.input_dim << '\n'
            << "embedding_dim " << b.embedding.OutputDim() << '\n'
            << "embedding_layers " << b.embedding.layers.size() << '\n'
            << "num_states " << b.num_states << '\n'
            << "embedding_macs_per_frame " << m.embedding_macs << '\n'
            << "tail_macs_per_frame " << m.tail_macs_full << '\n'
            << "total_macs_per_frame " << m.embedding_macs + m.tail_macs_full << '\n';
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"BTNN keyword spotter"};
  app.require_subcommand(1);

  auto config_opt = [](CLI::App *sub, std::string *path) {
    sub->add_option("--config", *path, "key = value file; command-line flags take precedence");
  };

  TrainArgs train;
  auto *t = app.add_subcommand("train", "train per-state tails on aligned features");
  t->add_option("--manifest", train.manifest, "dataset manifest")->required();
  t->add_option("--num-states", train.num_states, "number of acoustic states")->required();
  t->add_option("--out", train.out, "output model file")->required();
  config_opt(t, &train.config);
  t->add_option("--epochs", train.train.epochs);
  t->add_option("--learning-rate", train.train.learning_rate);
  t->add_option("--batch-size", train.train.batch_size);
  t->add_option("--optimizer", train.optimizer, "adam or sgd");
  t->add_option("--seed", train.train.rng_seed, "sampling seed");
  t->add_option("--init-seed", train.init_seed, "weight initialization seed");
  t->add_option("--scale-pos", train.train.default_scale_pos, "positive loss weight S");
  t->add_option("--neg-pos-ratio", train.train.default_neg_pos_ratio);
  t->add_option("--state-scale-pos", train.train.scale_pos, "per-state S, comma separated")
      ->delimiter(',');
  t->add_option("--state-neg-pos-ratio", train.train.neg_pos_ratio, "per-state ratio")
      ->delimiter(',');
  t->add_flag("--joint", train.train.joint, "also train the shared embedding");
  t->add_option("--embed-dim", train.topo.embed_dim);
  t->add_option("--memory-taps", train.topo.memory_taps);
  t->add_option("--tail-hidden", train.topo.tail_hidden, "tail hidden sizes")->delimiter(',');

  CalibArgs calib;
  auto *c = app.add_subcommand("calibrate", "estimate per-state boundary tables");
  c->add_option("--manifest", calib.manifest)->required();
  c->add_option("--model", calib.model)->required();
  c->add_option("--out", calib.out)->required();
  config_opt(c, &calib.config);
  c->add_option("--segments", calib.segments, "segments per table");
  c->add_option("--scale-pos", calib.scale_pos);
  c->add_option("--scale-neg", calib.scale_neg);
  c->add_option("--fusion", calib.fusion, "complement or literal");

  AdaptArgs adapt;
  auto *ad = app.add_subcommand("adapt-scales", "pick per-state fusion scales on dev data");
  ad->add_option("--dev", adapt.dev, "dev manifest")->required();
  ad->add_option("--calib", adapt.calib)->required();
  ad->add_option("--model", adapt.model)->required();
  ad->add_option("--out", adapt.out, "defaults to overwriting --calib");
  ad->add_option("--grid", adapt.grid, "candidate scale values");
  config_opt(ad, &adapt.config);

  EnrollArgs enroll;
  auto *e = app.add_subcommand("enroll", "compile a keyword graph");
  e->add_option("--keyword", enroll.keyword)->required();
  e->add_option("--lexicon", enroll.lexicon);
  e->add_option("--graphemes", enroll.graphemes, "alphabet for a one-state-per-character lexicon");
  e->add_option("--num-states", enroll.num_states, "reject lexicon states beyond this count");
  e->add_option("--jump-skip", enroll.jump.max_skip);
  e->add_option("--jump-punishment", enroll.jump.punishment);
  e->add_option("--out", enroll.out)->required();
  config_opt(e, &enroll.config);

  SpotArgs spot;
  auto *sp = app.add_subcommand("spot", "decode features or audio");
  sp->add_option("--model", spot.model)->required();
  sp->add_option("--calib", spot.calib)->required();
  sp->add_option("--graph", spot.graphs, "keyword graph (repeatable)")->required();
  sp->add_option("--audio", spot.audio, "16-bit PCM WAV");
  sp->add_option("--features", spot.features, "BTFE feature file");
  sp->add_option("--manifest", spot.manifest, "decode every utterance of a manifest");
  sp->add_option("--out", spot.out, "results file (with --manifest)");
  sp->add_option("--threshold", spot.decode.threshold);
  sp->add_option("--beam", spot.decode.beam);
  sp->add_option("--min-frames", spot.decode.min_frames);
  sp->add_option("--refractory", spot.decode.refractory_frames);
  sp->add_option("--prune", spot.decode.prune_avg_log_conf, "drop tokens below this average");
  sp->add_option("--emit-frame-scores", spot.frame_scores);
  sp->add_option("--candidates", spot.candidates,
                 "per-frame best final tokens, for exact threshold sweeps in eval");
  sp->add_flag("--exhaustive", spot.exhaustive, "evaluate every tail each frame");
  config_opt(sp, &spot.config);

  EvalArgs ev;
  auto *v = app.add_subcommand("eval", "wakeup rate and false alarms");
  v->add_option("--results", ev.results, "events decoded at one threshold (approximate sweep)");
  v->add_option("--candidates", ev.candidates, "candidates from spot (exact sweep)");
  v->add_option("--refs", ev.refs)->required();
  v->add_option("--fa-target", ev.fa_target, "false alarms per 24 h");
  v->add_option("--thresholds", ev.thresholds, "comma separated; default: every event score");
  v->add_option("--output-format", ev.format, "table or tsv");
  config_opt(v, &ev.config);

  SynthArgs synth;
  auto *sy = app.add_subcommand("synth-data", "write a synthetic aligned corpus");
  sy->add_option("--out", synth.out)->required();
  sy->add_option("--num-states", synth.spec.num_states);
  sy->add_option("--dim", synth.spec.feature_dim);
  sy->add_option("--frames-per-state", synth.spec.frames_per_state);
  sy->add_option("--keywords", synth.keywords, "state lists, e.g. 0,1,2,3;4,5,6,7");
  sy->add_option("--noise-std", synth.spec.noise_std);
  sy->add_option("--seed", synth.spec.rng_seed);
  sy->add_option("--positive-fraction", synth.spec.positive_fraction);
  sy->add_option("--state-weights", synth.weights, "filler sampling weight per state");
  sy->add_option("--train", synth.train);
  sy->add_option("--dev", synth.dev);
  sy->add_option("--test", synth.test);
  config_opt(sy, &synth.config);

  std::string inspect_model;
  auto *in = app.add_subcommand("inspect", "print model dimensions and MAC estimate");
  in->add_option("--model", inspect_model)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &err) {
    int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    for (auto [sub, path] : {std::pair{t, &train.config}, {c, &calib.config}, {ad, &adapt.config},
                             {e, &enroll.config}, {sp, &spot.config}, {v, &ev.config},
                             {sy, &synth.config}})
      if (sub->parsed() && !path->empty()) ApplyConfigFile(sub, *path);

    if (t->parsed()) RunTrain(train);
    else if (c->parsed()) RunCalibrate(calib);
    else if (ad->parsed()) RunAdapt(adapt);
    else if (e->parsed()) RunEnroll(enroll);
    else if (sp->parsed()) RunSpot(spot);
    else if (v->parsed()) RunEval(ev);
    else if (sy->parsed()) RunSynth(synth);
    else if (in->parsed()) RunInspect(inspect_model);
  } catch (const CLI::ParseError &err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const btnn::Error &err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  } catch (const std::exception &err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
