// btnn/decoder.h

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

#ifndef BTNN_DECODER_H_
#define BTNN_DECODER_H_

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "btnn/calibration.h"
#include "btnn/keyword-graph.h"
#include "btnn/nnet.h"

namespace btnn {

struct Token {
  int node = 0;
  double log_score = 0.0;     // sum of log confidences plus arc weights
  int64_t start_frame = 0;    // frame at which the hypothesis entered node 0
  int64_t frames_consumed = 0;

  double AverageScore() const { return log_score / static_cast<double>(frames_consumed); }
  bool operator==(const Token &) const = default;
};

struct DecodeConfig {
  static constexpr int kUnlimitedBeam = std::numeric_limits<int>::max();

  int beam = 32;                  // tokens kept per graph per frame
  double threshold = -1.0;        // on the average per-frame log score
  int min_frames = 20;
  int refractory_frames = 50;
  // Tokens whose average log score falls below this are dropped; -inf keeps
  // every token (exact Viterbi over the chain up to the beam).
  double prune_avg_log_conf = -3.0;
  double confidence_floor = 1e-6;  // confidences are clamped before log

  void Validate() const;
  /// No beam limit and no score pruning.
  static DecodeConfig Unpruned();
};

struct DetectionEvent {
  std::string keyword;
  int64_t start_frame = 0;
  int64_t end_frame = 0;  // one past the last frame
  double confidence = 0.0;

  bool operator==(const DetectionEvent &) const = default;
};

/// Live tokens of one graph after a frame: `active` holds at most one token
/// per emitting node (sorted by node), `finals` the hypotheses that reached
/// the final node on this frame.
struct TokenSet {
  std::vector<Token> active;
  std::vector<Token> finals;

  bool operator==(const TokenSet &) const = default;
};

/// States whose confidences the next step needs: each token's own state,
/// the states entered by its outgoing emission and jump arcs, and the first
/// chain state for the hypothesis born every frame.
StateSet ActiveStates(std::span<const Token> tokens, const KeywordGraph &graph);

/// One frame of max-plus token passing with a fresh token at node 0.
/// Recombination keeps the higher score per node (ties: earlier start).
/// Throws ContractError if a needed confidence is missing.
TokenSet Step(std::span<const Token> tokens, const StateConfidences &confidences,
              const KeywordGraph &graph, const DecodeConfig &config, int64_t frame);

/// Refractory bookkeeping for one keyword.
struct DetectState {
  int64_t suppressed_through = std::numeric_limits<int64_t>::min();
};

/// Best-average final token with at least `min_frames` consumed (ties: the
/// earlier start), whatever its score.
std::optional<Token> BestCandidate(std::span<const Token> finals, int min_frames);

/// Emits the qualifying final token with the best average score, if any,
/// and starts the refractory window.
std::optional<DetectionEvent> Detect(std::span<const Token> finals, int64_t frame,
                                     const DecodeConfig &config, const std::string &keyword,
                                     DetectState *state);

/// Streaming decoder over several keyword graphs sharing one model. Per
/// frame: embed, gather active states, evaluate only those tails, calibrate,
/// step every graph, detect.
class DecodeSession {
 public:
  /// `exhaustive` evaluates every tail each frame (reference mode).
  DecodeSession(const ModelBundle &bundle, const CalibrationSet &calib,
                const std::vector<KeywordGraph> &graphs, const DecodeConfig &config,
                bool exhaustive = false);

  std::vector<DetectionEvent> AcceptFrame(std::span<const float> features);
  std::vector<DetectionEvent> AcceptFrames(const FrameSequence &frames);

  const MacReport &Macs() const { return macs_; }
  const TokenSet &Tokens(size_t graph) const { return tokens_.at(graph); }
  int64_t FramesDecoded() const { return frame_; }

  /// Called per frame and keyword with BestCandidate, before thresholding.
  void SetCandidateHook(
      std::function<void(int64_t, const std::string &, const Token &)> hook) {
    candidate_hook_ = std::move(hook);
  }

  /// Called after calibration with the frame index and computed confidences.
  void SetFrameScoreHook(std::function<void(int64_t, const StateConfidences &)> hook) {
    hook_ = std::move(hook);
  }

 private:
  const ModelBundle &bundle_;
  const CalibrationSet &calib_;
  const std::vector<KeywordGraph> &graphs_;
  DecodeConfig config_;
  bool exhaustive_;
  EmbeddingStream embed_;
  std::vector<TokenSet> tokens_;
  std::vector<DetectState> detect_;
  MacReport macs_;
  int64_t frame_ = 0;
  StateSet all_states_;
  std::function<void(int64_t, const StateConfidences &)> hook_;
  std::function<void(int64_t, const std::string &, const Token &)> candidate_hook_;
};

struct DecodeResult {
  std::vector<DetectionEvent> events;
  MacReport macs;
};

DecodeResult DecodeStream(const FrameSequence &frames, const ModelBundle &bundle,
                          const CalibrationSet &calib, const std::vector<KeywordGraph> &graphs,
                          const DecodeConfig &config, bool exhaustive = false);

}  // namespace btnn

#endif  // BTNN_DECODER_H_
