// keyword-graph.cc

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

#include "btnn/keyword-graph.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "btnn/binary-io.h"
#include "btnn/error.h"

namespace btnn {

void Lexicon::Validate() const {
  for (const auto &[word, states] : entries) {
    if (states.empty()) throw FormatError("lexicon entry '" + word + "' has no states");
    for (int s : states)
      if (s < 0 || s >= num_states)
        throw FormatError("lexicon entry '" + word + "' uses state " + std::to_string(s) +
                          " outside 0.." + std::to_string(num_states - 1));
  }
}

Lexicon ReadLexicon(const std::string &path, int num_states) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  Lexicon lex;
  lex.num_states = num_states;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word) || word[0] == '#') continue;
    std::vector<int> states;
    int s;
    while (ls >> s) states.push_back(s);
    if (!ls.eof())
      throw FormatError(path + ":" + std::to_string(line_no) + ": non-integer state id");
    if (lex.entries.count(word))
      throw FormatError(path + ":" + std::to_string(line_no) + ": duplicate entry '" + word + "'");
    lex.entries.emplace(word, std::move(states));
  }
  try {
    lex.Validate();
  } catch (const FormatError &e) {
    throw FormatError(path + ": " + e.what());
  }
  return lex;
}

Lexicon GraphemeLexicon(const std::string &alphabet) {
  Lexicon lex;
  lex.grapheme = true;
  for (char c : alphabet) {
    if (c == ' ') continue;
    std::string key(1, c);
    if (!lex.entries.count(key)) lex.entries.emplace(key, std::vector<int>{lex.num_states++});
  }
  return lex;
}

std::vector<int> KeywordToStates(const std::string &keyword, const Lexicon &lexicon) {
  std::vector<std::string> units;
  if (lexicon.grapheme) {
    for (char c : keyword)
      if (c != ' ') units.emplace_back(1, c);
  } else {
    std::istringstream ks(keyword);
    std::string w;
    while (ks >> w) units.push_back(w);
  }
  if (units.empty()) throw OovError("keyword is empty");
  std::vector<int> states;
  for (const auto &u : units) {
    auto it = lexicon.entries.find(u);
    if (it == lexicon.entries.end()) throw OovError("'" + u + "' is not in the lexicon");
    states.insert(states.end(), it->second.begin(), it->second.end());
  }
  return states;
}

std::string ArcKindName(ArcKind kind) {
  switch (kind) {
    case ArcKind::kSelfLoop: return "self_loop";
    case ArcKind::kEmission: return "emission";
    case ArcKind::kJump: return "jump";
  }
  return "?";
}

namespace {

ArcKind ParseArcKind(const std::string &s) {
  if (s == "self_loop") return ArcKind::kSelfLoop;
  if (s == "emission") return ArcKind::kEmission;
  if (s == "jump") return ArcKind::kJump;
  throw FormatError("unknown arc kind '" + s + "'");
}

}  // namespace

int KeywordGraph::StateOf(int node) const {
  if (node < 0 || node >= FinalNode()) return kNoState;
  return state_of_node[node];
}

std::vector<const Arc *> KeywordGraph::ArcsFrom(int node) const {
  std::vector<const Arc *> out;
  for (const auto &a : arcs)
    if (a.src == node) out.push_back(&a);
  return out;
}

KeywordGraph BuildGraph(const std::vector<int> &states, const JumpConfig &jump,
                        const std::string &keyword) {
  if (states.empty()) throw GraphError("cannot build a graph from an empty state sequence");
  if (jump.max_skip < 0) throw ConfigError("max_skip must be >= 0");
  if (!(jump.punishment >= 0)) throw ConfigError("jump punishment must be >= 0");
  KeywordGraph g;
  g.keyword = keyword;
  const int m = static_cast<int>(states.size());
  g.num_nodes = m + 1;
  g.state_of_node = states;
  auto consumed = [&](int dst) { return dst == m ? kNoState : states[dst]; };
  for (int i = 0; i < m; ++i) {
    g.arcs.push_back({i, i, ArcKind::kSelfLoop, states[i], 0.0});
    g.arcs.push_back({i, i + 1, ArcKind::kEmission, consumed(i + 1), 0.0});
    for (int k = 1; k <= jump.max_skip && i + 1 + k <= m; ++k)
      g.arcs.push_back({i, i + 1 + k, ArcKind::kJump, consumed(i + 1 + k),
                        -static_cast<double>(k) * jump.punishment});
  }
  return g;
}

std::vector<std::string> ValidateGraph(const KeywordGraph &g) {
  std::vector<std::string> v;
  if (g.num_nodes < 2) {
    v.push_back("graph needs at least one emitting node and a final node");
    return v;
  }
  const int final_node = g.FinalNode();
  if (g.state_of_node.size() != static_cast<size_t>(final_node))
    v.push_back("state_of_node has " + std::to_string(g.state_of_node.size()) +
                " entries, expected " + std::to_string(final_node));

  std::vector<bool> has_self(final_node, false), has_out(g.num_nodes, false);
  std::vector<std::vector<int>> succ(g.num_nodes);
  for (size_t i = 0; i < g.arcs.size(); ++i) {
    const Arc &a = g.arcs[i];
    const std::string name = "arc " + std::to_string(i) + " (" + std::to_string(a.src) + "->" +
                             std::to_string(a.dst) + " " + ArcKindName(a.kind) + ")";
    if (a.src < 0 || a.src >= g.num_nodes || a.dst < 0 || a.dst >= g.num_nodes) {
      v.push_back(name + ": node out of range");
      continue;
    }
    if (a.src == final_node) v.push_back(name + ": final node must have no outgoing arcs");
    if (a.kind == ArcKind::kSelfLoop) {
      if (a.src != a.dst) v.push_back(name + ": self-loop must have src == dst");
      else if (a.src < final_node) has_self[a.src] = true;
    } else {
      if (a.dst <= a.src) v.push_back(name + ": arc goes backwards (graph must be acyclic)");
      has_out[a.src] = true;
      succ[a.src].push_back(a.dst);
    }
    if (a.kind == ArcKind::kJump) {
      if (a.dst < a.src + 2) v.push_back(name + ": jump must skip at least one node");
      if (a.weight > 0) v.push_back(name + ": jump weight must be <= 0");
    }
    if (a.kind == ArcKind::kEmission && a.dst != a.src + 1)
      v.push_back(name + ": emission arc must advance by one node");
    const int expect = a.dst == final_node ? kNoState
                       : static_cast<size_t>(a.dst) < g.state_of_node.size()
                           ? g.state_of_node[a.dst]
                           : kNoState;
    if (a.state != expect)
      v.push_back(name + ": consumes state " + std::to_string(a.state) + ", expected " +
                  std::to_string(expect));
  }
  for (int n = 0; n < final_node; ++n) {
    if (!has_self[n]) v.push_back("node " + std::to_string(n) + " lacks self-loop");
    if (!has_out[n])
      v.push_back("node " + std::to_string(n) + " has no outgoing arc (only the final node may)");
  }
  std::vector<bool> reached(g.num_nodes, false);
  std::vector<int> stack{0};
  reached[0] = true;
  while (!stack.empty()) {
    int n = stack.back();
    stack.pop_back();
    for (int d : succ[n])
      if (!reached[d]) {
        reached[d] = true;
        stack.push_back(d);
      }
  }
  for (int n = 0; n < g.num_nodes; ++n)
    if (!reached[n]) v.push_back("node " + std::to_string(n) + " unreachable from start");
  return v;
}

void SaveGraph(const KeywordGraph &g, const std::string &path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << "btnn-graph " << kGraphFormatVersion << '\n';
  os << "keyword " << g.keyword << '\n';
  os << "nodes " << g.num_nodes << '\n';
  os << "node_states";
  for (int s : g.state_of_node) os << ' ' << s;
  os << '\n' << "arcs " << g.arcs.size() << '\n';
  for (const auto &a : g.arcs)
    os << a.src << ' ' << a.dst << ' ' << ArcKindName(a.kind) << ' ' << a.state << ' '
       << FormatDouble(a.weight) << '\n';
  if (!os) throw IoError("write failed for " + path);
}

KeywordGraph LoadGraph(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  KeywordGraph g;
  std::string line, key;
  auto next = [&](const std::string &expect) {
    if (!std::getline(is, line)) throw FormatError(path + ": missing '" + expect + "' line");
    std::istringstream ls(line);
    ls >> key;
    if (key != expect)
      throw FormatError(path + ": expected '" + expect + "', found '" + key + "'");
    return ls;
  };
  auto ls = next("btnn-graph");
  int version = 0;
  ls >> version;
  if (version != kGraphFormatVersion)
    throw FormatError(path + ": unsupported graph version " + std::to_string(version));
  ls = next("keyword");
  std::getline(ls >> std::ws, g.keyword);
  ls = next("nodes");
  if (!(ls >> g.num_nodes) || g.num_nodes < 2) throw FormatError(path + ": bad node count");
  ls = next("node_states");
  int s;
  while (ls >> s) g.state_of_node.push_back(s);
  ls = next("arcs");
  size_t n = 0;
  ls >> n;
  for (size_t i = 0; i < n; ++i) {
    if (!std::getline(is, line)) throw FormatError(path + ": truncated arc list");
    std::istringstream as(line);
    Arc a;
    std::string kind;
    if (!(as >> a.src >> a.dst >> kind >> a.state >> a.weight))
      throw FormatError(path + ": malformed arc line " + std::to_string(i));
    a.kind = ParseArcKind(kind);
    g.arcs.push_back(a);
  }
  auto violations = ValidateGraph(g);
  if (!violations.empty()) throw FormatError(path + ": " + violations.front());
  return g;
}

}  // namespace btnn
