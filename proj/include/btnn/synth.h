// btnn/synth.h

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

#ifndef BTNN_SYNTH_H_
#define BTNN_SYNTH_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "btnn/dataset.h"
#include "btnn/eval.h"
#include "btnn/keyword-graph.h"

namespace btnn {

// Desk-scale stand-in for a real corpus: each state owns a Gaussian mean
// vector and aligned frames are mean + noise.
struct SynthSpec {
  int num_states = 8;
  int feature_dim = 20;
  int frames_per_state = 8;
  int num_utterances = 200;
  std::vector<std::vector<int>> keyword_state_seqs{{0, 1, 2, 3}, {4, 5, 6, 7}};
  double noise_std = 0.3;
  uint64_t rng_seed = 1;

  double positive_fraction = 0.5;
  int max_filler_segments = 2;  // random segments around a planted keyword
  int min_negative_segments = 3;
  int max_negative_segments = 6;
  // Sampling weight per state for filler and negative segments; empty means
  // uniform. Skewed weights give unbalanced per-state data.
  std::vector<double> state_weights;
  // Filler and negatives avoid any ordering a graph with this many skipped
  // states per jump could match.
  int avoid_skip = 1;
  double frame_rate_hz = 100.0;  // for converting frames to hours

  /// Throws ConfigError on the first violated constraint.
  void Validate() const;
  std::string KeywordName(size_t k) const { return "kw" + std::to_string(k); }
};

/// Per-state mean vectors, a function of num_states, feature_dim and seed
/// only, so every split of one spec shares them.
std::vector<std::vector<float>> StateMeans(const SynthSpec &spec);

struct SynthCorpus {
  AlignedDataset data;
  ReferenceSet refs;
  std::map<std::string, double> negative_hours;  // per negative utterance
};

/// Generates one split. Keyword utterances plant one keyword between filler
/// segments; negative utterances are random segment orderings that contain
/// no keyword, even after jumps over up to
/// `avoid_skip` consecutive non-initial states. `split` seeds the split stream.
SynthCorpus SynthesizeCorpus(const SynthSpec &spec, const std::string &split);

/// Lexicon mapping "kw<k>" to each keyword's state sequence.
Lexicon SynthLexicon(const SynthSpec &spec);
void WriteLexicon(const std::string &path, const Lexicon &lexicon);

struct SynthPaths {
  std::string manifest;
  std::string refs;
};

/// Writes <dir>/<split>/ feature and alignment files plus
/// <dir>/<split>.manifest and <dir>/<split>.refs.
SynthPaths WriteSyntheticSplit(const SynthSpec &spec, const std::string &dir,
                               const std::string &split);

}  // namespace btnn

#endif  // BTNN_SYNTH_H_
