// decoder.cc

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

#include "btnn/decoder.h"

#include <algorithm>
#include <cmath>

#include "btnn/error.h"

namespace btnn {

void DecodeConfig::Validate() const {
  if (beam < 1) throw ConfigError("beam must be >= 1");
  if (min_frames < 1) throw ConfigError("min_frames must be >= 1");
  if (refractory_frames < 0) throw ConfigError("refractory_frames must be >= 0");
  if (!(confidence_floor > 0 && confidence_floor <= 1))
    throw ConfigError("confidence_floor must be in (0, 1]");
}

DecodeConfig DecodeConfig::Unpruned() {
  DecodeConfig c;
  c.beam = kUnlimitedBeam;
  c.prune_avg_log_conf = -std::numeric_limits<double>::infinity();
  return c;
}

StateSet ActiveStates(std::span<const Token> tokens, const KeywordGraph &graph) {
  StateSet active{graph.StateOf(graph.StartNode())};
  for (const Token &tok : tokens) {
    if (tok.node >= graph.FinalNode()) continue;
    for (const Arc &a : graph.arcs)
      if (a.src == tok.node && a.state != kNoState) active.insert(a.state);
  }
  return active;
}

namespace {

// Higher score wins; ties go to the earlier start, then the lower node.
bool Better(const Token &a, const Token &b) {
  if (a.log_score != b.log_score) return a.log_score > b.log_score;
  if (a.start_frame != b.start_frame) return a.start_frame < b.start_frame;
  return a.node < b.node;
}

}  // namespace

TokenSet Step(std::span<const Token> tokens, const StateConfidences &confidences,
              const KeywordGraph &graph, const DecodeConfig &config, int64_t frame) {
  const int final_node = graph.FinalNode();
  auto log_conf = [&](int state) {
    auto it = confidences.find(state);
    if (it == confidences.end())
      throw ContractError("no confidence for state " + std::to_string(state) + " at frame " +
                          std::to_string(frame) + " (keyword '" + graph.keyword + "')");
    return std::log(std::max(it->second, config.confidence_floor));
  };

  std::vector<std::optional<Token>> best(final_node);
  auto relax = [&](const Token &cand) {
    auto &slot = best[cand.node];
    if (!slot || Better(cand, *slot)) slot = cand;
  };

  for (const Token &tok : tokens) {
    if (tok.node >= final_node) continue;
    for (const Arc &a : graph.arcs) {
      if (a.src != tok.node || a.dst == final_node) continue;
      relax({a.dst, tok.log_score + log_conf(a.state) + a.weight, tok.start_frame,
             tok.frames_consumed + 1});
    }
  }
  relax({graph.StartNode(), log_conf(graph.StateOf(graph.StartNode())), frame, 1});

  TokenSet out;
  for (auto &slot : best)
    if (slot && slot->AverageScore() >= config.prune_avg_log_conf) out.active.push_back(*slot);
  if (out.active.size() > static_cast<size_t>(config.beam)) {
    std::sort(out.active.begin(), out.active.end(), Better);
    out.active.resize(config.beam);
    std::sort(out.active.begin(), out.active.end(),
              [](const Token &a, const Token &b) { return a.node < b.node; });
  }

  for (const Token &tok : out.active)
    for (const Arc &a : graph.arcs)
      if (a.src == tok.node && a.dst == final_node)
        out.finals.push_back({final_node, tok.log_score + a.weight, tok.start_frame,
                              tok.frames_consumed});
  std::sort(out.finals.begin(), out.finals.end(), Better);
  return out;
}

std::optional<Token> BestCandidate(std::span<const Token> finals, int min_frames) {
  const Token *best = nullptr;
  for (const Token &tok : finals) {
    if (tok.frames_consumed < min_frames) continue;
    if (best == nullptr || tok.AverageScore() > best->AverageScore() ||
        (tok.AverageScore() == best->AverageScore() && tok.start_frame < best->start_frame))
      best = &tok;
  }
  if (best == nullptr) return std::nullopt;
  return *best;
}

std::optional<DetectionEvent> Detect(std::span<const Token> finals, int64_t frame,
                                     const DecodeConfig &config, const std::string &keyword,
                                     DetectState *state) {
  if (state != nullptr && frame <= state->suppressed_through) return std::nullopt;
  auto best = BestCandidate(finals, config.min_frames);
  if (!best || best->AverageScore() < config.threshold) return std::nullopt;
  if (state != nullptr) state->suppressed_through = frame + config.refractory_frames;
  return DetectionEvent{keyword, best->start_frame, frame + 1, best->AverageScore()};
}

DecodeSession::DecodeSession(const ModelBundle &bundle, const CalibrationSet &calib,
                             const std::vector<KeywordGraph> &graphs,
                             const DecodeConfig &config, bool exhaustive)
    : bundle_(bundle),
      calib_(calib),
      graphs_(graphs),
      config_(config),
      exhaustive_(exhaustive),
      embed_(bundle.embedding),
      tokens_(graphs.size()),
      detect_(graphs.size()) {
  config_.Validate();
  if (bundle.num_states != calib.num_states)
    throw ConfigError("model has " + std::to_string(bundle.num_states) +
                      " states but calibration has " + std::to_string(calib.num_states));
  for (const auto &g : graphs)
    for (int s : g.state_of_node)
      if (s < 0 || s >= bundle.num_states)
        throw ConfigError("keyword '" + g.keyword + "' uses state " + std::to_string(s) +
                          " but the model has " + std::to_string(bundle.num_states) + " states");
  for (int s = 0; s < bundle.num_states; ++s) all_states_.insert(s);
}

std::vector<DetectionEvent> DecodeSession::AcceptFrame(std::span<const float> features) {
  const std::vector<float> embedding = embed_.Forward(features);

  StateSet active;
  for (size_t g = 0; g < graphs_.size(); ++g) {
    StateSet a = ActiveStates(tokens_[g].active, graphs_[g]);
    active.insert(a.begin(), a.end());
  }
  MacReport frame_macs;
  frame_macs.frames = 1;
  frame_macs.embedding_macs = bundle_.embedding.MacsPerFrame();
  frame_macs.tail_macs_full = bundle_.FullTailMacsPerFrame();
  const StateScores raw =
      TailForwardSparse(embedding, bundle_, exhaustive_ ? all_states_ : active, &frame_macs);
  macs_ += frame_macs;
  const StateConfidences conf = CalibrateFrame(raw, calib_);
  if (hook_) hook_(frame_, conf);

  std::vector<DetectionEvent> events;
  for (size_t g = 0; g < graphs_.size(); ++g) {
    tokens_[g] = Step(tokens_[g].active, conf, graphs_[g], config_, frame_);
    if (candidate_hook_)
      if (auto c = BestCandidate(tokens_[g].finals, config_.min_frames))
        candidate_hook_(frame_, graphs_[g].keyword, *c);
    if (auto ev = Detect(tokens_[g].finals, frame_, config_, graphs_[g].keyword, &detect_[g]))
      events.push_back(std::move(*ev));
  }
  ++frame_;
  return events;
}

std::vector<DetectionEvent> DecodeSession::AcceptFrames(const FrameSequence &frames) {
  std::vector<DetectionEvent> events;
  for (const auto &f : frames) {
    auto ev = AcceptFrame(f.values);
    events.insert(events.end(), ev.begin(), ev.end());
  }
  return events;
}

DecodeResult DecodeStream(const FrameSequence &frames, const ModelBundle &bundle,
                          const CalibrationSet &calib, const std::vector<KeywordGraph> &graphs,
                          const DecodeConfig &config, bool exhaustive) {
  DecodeSession session(bundle, calib, graphs, config, exhaustive);
  DecodeResult result;
  result.events = session.AcceptFrames(frames);
  result.macs = session.Macs();
  return result;
}

}  // namespace btnn
