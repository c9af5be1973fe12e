// synth.cc

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

#include "btnn/synth.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "btnn/error.h"

namespace btnn {

void SynthSpec::Validate() const {
  if (num_states < 1) throw ConfigError("num_states must be >= 1");
  if (feature_dim < 1) throw ConfigError("feature_dim must be >= 1");
  if (frames_per_state < 1) throw ConfigError("frames_per_state must be >= 1");
  if (num_utterances < 1) throw ConfigError("num_utterances must be >= 1");
  if (!(noise_std >= 0)) throw ConfigError("noise_std must be >= 0");
  if (keyword_state_seqs.empty()) throw ConfigError("at least one keyword is required");
  for (size_t k = 0; k < keyword_state_seqs.size(); ++k) {
    if (keyword_state_seqs[k].empty())
      throw ConfigError("keyword " + std::to_string(k) + " has no states");
    for (int s : keyword_state_seqs[k])
      if (s < 0 || s >= num_states)
        throw ConfigError("keyword " + std::to_string(k) + " uses state " + std::to_string(s) +
                          " outside 0.." + std::to_string(num_states - 1));
  }
  if (!(positive_fraction >= 0 && positive_fraction <= 1))
    throw ConfigError("positive_fraction must be in [0, 1]");
  if (max_filler_segments < 0) throw ConfigError("max_filler_segments must be >= 0");
  if (min_negative_segments < 1 || max_negative_segments < min_negative_segments)
    throw ConfigError("negative segment range must satisfy 1 <= min <= max");
  if (!state_weights.empty()) {
    if (state_weights.size() != static_cast<size_t>(num_states))
      throw ConfigError("state_weights needs one entry per state");
    double sum = 0;
    for (double w : state_weights) {
      if (!(w >= 0)) throw ConfigError("state_weights must be >= 0");
      sum += w;
    }
    if (!(sum > 0)) throw ConfigError("state_weights must not all be zero");
  }
  if (avoid_skip < 0) throw ConfigError("avoid_skip must be >= 0");
  if (!(frame_rate_hz > 0)) throw ConfigError("frame_rate_hz must be > 0");
}

namespace {

uint64_t Fnv1a(const std::string &s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<int> Collapse(const std::vector<int> &seq) {
  std::vector<int> out;
  for (int s : seq)
    if (out.empty() || out.back() != s) out.push_back(s);
  return out;
}

bool ContainsWindow(const std::vector<int> &seq, const std::vector<int> &pat) {
  if (pat.empty() || pat.size() > seq.size()) return false;
  return std::search(seq.begin(), seq.end(), pat.begin(), pat.end()) != seq.end();
}

// Every state sequence a keyword graph with `max_skip` can consume: the
// first state is kept, and runs of at most `max_skip` later states may be
// jumped over.
void SkipVariants(const std::vector<int> &kw, size_t pos, int max_skip, std::vector<int> *cur,
                  std::vector<std::vector<int>> *out) {
  if (pos == kw.size()) {
    out->push_back(Collapse(*cur));
    return;
  }
  cur->push_back(kw[pos]);
  SkipVariants(kw, pos + 1, max_skip, cur, out);
  cur->pop_back();
  if (pos == 0) return;
  for (int k = 1; k <= max_skip && pos + k <= kw.size(); ++k) {
    if (pos + k == kw.size()) {
      out->push_back(Collapse(*cur));
    } else {
      cur->push_back(kw[pos + k]);
      SkipVariants(kw, pos + k + 1, max_skip, cur, out);
      cur->pop_back();
    }
  }
}

bool NearKeyword(const std::vector<int> &segments,
                 const std::vector<std::vector<std::vector<int>>> &variants) {
  const std::vector<int> seq = Collapse(segments);
  for (const auto &kw : variants)
    for (const auto &v : kw)
      if (ContainsWindow(seq, v)) return true;
  return false;
}

class SegmentSampler {
 public:
  SegmentSampler(const SynthSpec &spec, std::mt19937_64 *rng) : rng_(rng) {
    std::vector<double> w = spec.state_weights;
    if (w.empty()) w.assign(spec.num_states, 1.0);
    dist_ = std::discrete_distribution<int>(w.begin(), w.end());
  }
  std::vector<int> Draw(int n) {
    std::vector<int> out(n);
    for (int &s : out) s = dist_(*rng_);
    return out;
  }

 private:
  std::mt19937_64 *rng_;
  std::discrete_distribution<int> dist_;
};

constexpr int kMaxDraws = 10000;

}  // namespace

std::vector<std::vector<float>> StateMeans(const SynthSpec &spec) {
  spec.Validate();
  std::mt19937_64 rng(spec.rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<float>> means(spec.num_states,
                                        std::vector<float>(spec.feature_dim));
  for (auto &m : means)
    for (float &v : m) v = static_cast<float>(normal(rng));
  return means;
}

Lexicon SynthLexicon(const SynthSpec &spec) {
  spec.Validate();
  Lexicon lex;
  lex.num_states = spec.num_states;
  for (size_t k = 0; k < spec.keyword_state_seqs.size(); ++k)
    lex.entries.emplace(spec.KeywordName(k), spec.keyword_state_seqs[k]);
  return lex;
}

void WriteLexicon(const std::string &path, const Lexicon &lexicon) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  for (const auto &[word, states] : lexicon.entries) {
    os << word;
    for (int s : states) os << ' ' << s;
    os << '\n';
  }
  if (!os) throw IoError("write failed for " + path);
}

SynthCorpus SynthesizeCorpus(const SynthSpec &spec, const std::string &split) {
  const auto means = StateMeans(spec);
  std::mt19937_64 rng(spec.rng_seed ^ Fnv1a(split));
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SegmentSampler sampler(spec, &rng);
  const auto &keywords = spec.keyword_state_seqs;
  std::vector<std::vector<std::vector<int>>> variants(keywords.size());
  for (size_t k = 0; k < keywords.size(); ++k) {
    std::vector<int> cur;
    SkipVariants(keywords[k], 0, spec.avoid_skip, &cur, &variants[k]);
  }

  auto draw_clean = [&](int lo, int hi) {
    std::uniform_int_distribution<int> count(lo, hi);
    for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
      auto seg = sampler.Draw(count(rng));
      if (!NearKeyword(seg, variants)) return seg;
    }
    throw ConfigError("could not draw a keyword-free state ordering; "
                      "the keywords cover too many orderings");
  };

  SynthCorpus corpus;
  corpus.data.num_states = spec.num_states;
  const int width = static_cast<int>(std::to_string(spec.num_utterances - 1).size());
  for (int u = 0; u < spec.num_utterances; ++u) {
    std::string num = std::to_string(u);
    num.insert(0, static_cast<size_t>(std::max(0, width - static_cast<int>(num.size()))), '0');
    const std::string id = split + "_" + num;

    std::vector<int> segments;
    bool positive = unit(rng) < spec.positive_fraction;
    int64_t span_start = 0, span_end = 0;
    size_t kw = 0;
    if (positive) {
      kw = std::uniform_int_distribution<size_t>(0, keywords.size() - 1)(rng);
      auto pre = draw_clean(0, spec.max_filler_segments);
      auto post = draw_clean(0, spec.max_filler_segments);
      span_start = static_cast<int64_t>(pre.size()) * spec.frames_per_state;
      span_end = span_start + static_cast<int64_t>(keywords[kw].size()) * spec.frames_per_state;
      segments = pre;
      segments.insert(segments.end(), keywords[kw].begin(), keywords[kw].end());
      segments.insert(segments.end(), post.begin(), post.end());
    } else {
      segments = draw_clean(spec.min_negative_segments, spec.max_negative_segments);
    }

    AlignedUtterance utt;
    utt.id = id;
    for (int s : segments)
      for (int f = 0; f < spec.frames_per_state; ++f) {
        FeatureFrame frame;
        frame.index = static_cast<int64_t>(utt.frames.size());
        frame.values.resize(spec.feature_dim);
        for (int d = 0; d < spec.feature_dim; ++d) {
          double v = means[s][d];
          if (spec.noise_std > 0) v += spec.noise_std * noise(rng);
          frame.values[d] = static_cast<float>(v);
        }
        utt.frames.push_back(std::move(frame));
        utt.states.push_back(s);
      }

    if (positive) {
      corpus.refs.positives.push_back(
          {id, spec.KeywordName(kw), std::make_pair(span_start, span_end)});
    } else {
      const double hours =
          static_cast<double>(utt.frames.size()) / spec.frame_rate_hz / 3600.0;
      corpus.refs.negatives.push_back(id);
      corpus.refs.negative_hours += hours;
      corpus.negative_hours[id] = hours;
    }
    corpus.data.utterances.push_back(std::move(utt));
  }
  return corpus;
}

SynthPaths WriteSyntheticSplit(const SynthSpec &spec, const std::string &dir,
                               const std::string &split) {
  namespace fs = std::filesystem;
  const SynthCorpus corpus = SynthesizeCorpus(spec, split);
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root / split, ec);
  if (ec) throw IoError("cannot create " + (root / split).string() + ": " + ec.message());

  std::vector<ManifestEntry> entries;
  for (const auto &utt : corpus.data.utterances) {
    const std::string feats = split + "/" + utt.id + ".feats";
    const std::string ali = split + "/" + utt.id + ".ali";
    WriteFrames((root / feats).string(), utt.frames, spec.feature_dim);
    WriteAlignment((root / ali).string(), utt);
    entries.push_back({feats, ali});
  }
  SynthPaths paths{(root / (split + ".manifest")).string(), (root / (split + ".refs")).string()};
  WriteManifest(paths.manifest, entries);
  WriteReferences(paths.refs, corpus.refs, corpus.negative_hours);
  return paths;
}

}  // namespace btnn
