// btnn/keyword-graph.h

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

#ifndef BTNN_KEYWORD_GRAPH_H_
#define BTNN_KEYWORD_GRAPH_H_

#include <map>
#include <string>
#include <vector>

namespace btnn {

struct Lexicon {
  std::map<std::string, std::vector<int>> entries;
  int num_states = 0;
  bool grapheme = false;  // keywords are spelled one character per entry

  void Validate() const;
};

// Lexicon file: one entry per line, "word state_id state_id ...".
Lexicon ReadLexicon(const std::string &path, int num_states);

/// Pseudo-lexicon mapping each distinct character of `alphabet` to its own
/// state (in order of first appearance).
Lexicon GraphemeLexicon(const std::string &alphabet);

/// Whitespace-separated words of `keyword` expanded through the lexicon.
/// A lexicon built by GraphemeLexicon is looked up character by character.
std::vector<int> KeywordToStates(const std::string &keyword, const Lexicon &lexicon);

enum class ArcKind { kSelfLoop, kEmission, kJump };

std::string ArcKindName(ArcKind kind);

inline constexpr int kNoState = -1;

struct Arc {
  int src = 0;
  int dst = 0;
  ArcKind kind = ArcKind::kEmission;
  int state = kNoState;  // consumed on traversal; kNoState for arcs into final
  double weight = 0.0;   // additive log-domain cost, <= 0 for jumps

  bool operator==(const Arc &) const = default;
};

/// Linear keyword chain. Nodes 0..M-1 each emit one state (node 0 is the
/// start, where hypotheses are born); node M is the non-emitting final node.
/// A node's self-loop and every arc entering it consume its state; arcs
/// into the final node consume nothing.
struct KeywordGraph {
  std::string keyword;
  int num_nodes = 0;               // M + 1, final node included
  std::vector<int> state_of_node;  // size M
  std::vector<Arc> arcs;

  int FinalNode() const { return num_nodes - 1; }
  int StartNode() const { return 0; }
  int StateOf(int node) const;
  std::vector<const Arc *> ArcsFrom(int node) const;
  bool operator==(const KeywordGraph &) const = default;
};

struct JumpConfig {
  int max_skip = 1;         // states one jump arc may skip
  double punishment = 4.0;  // log cost per skipped state
};

/// Emission chain over `states` with a self-loop on every emitting node and
/// jump arcs i -> i+1+k (1 <= k <= max_skip, target <= final) of weight
/// -k * punishment.
KeywordGraph BuildGraph(const std::vector<int> &states, const JumpConfig &jump,
                        const std::string &keyword = "");

/// Human-readable descriptions of every violated graph invariant.
std::vector<std::string> ValidateGraph(const KeywordGraph &graph);

inline constexpr int kGraphFormatVersion = 1;

void SaveGraph(const KeywordGraph &graph, const std::string &path);
KeywordGraph LoadGraph(const std::string &path);

}  // namespace btnn

#endif  // BTNN_KEYWORD_GRAPH_H_
