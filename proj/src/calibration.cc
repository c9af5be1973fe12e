// calibration.cc

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

#include "btnn/calibration.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "btnn/binary-io.h"
#include "btnn/error.h"

namespace btnn {

void BoundaryTable::Validate() const {
  const size_t n = counts.size();
  if (n < 1) throw FormatError("boundary table needs at least one segment");
  if (boundaries.size() != n + 1 || probs.size() != n + 1)
    throw FormatError("boundary table with " + std::to_string(n) + " segments needs " +
                      std::to_string(n + 1) + " boundaries and probabilities");
  for (size_t i = 1; i <= n; ++i) {
    if (!(boundaries[i] > boundaries[i - 1]))
      throw FormatError("boundaries must be strictly increasing (index " + std::to_string(i) + ")");
    if (probs[i] < probs[i - 1])
      throw FormatError("probabilities must be non-decreasing (index " + std::to_string(i) + ")");
  }
  if (probs.front() != 0.0 || probs.back() != 1.0)
    throw FormatError("boundary probabilities must start at 0 and end at 1");
  int64_t sum = 0;
  for (int64_t c : counts) {
    if (c < 0) throw FormatError("negative segment count");
    sum += c;
  }
  if (sum != total) throw FormatError("segment counts do not add up to total");
}

std::vector<double> ProbsFromCounts(std::span<const int64_t> counts) {
  const size_t n = counts.size();
  int64_t total = 0;
  for (int64_t c : counts) total += c;
  std::vector<double> probs(n + 1, 0.0);
  probs[n] = 1.0;
  if (total == 0) return probs;
  const double inv = 1.0 / static_cast<double>(total);
  for (size_t i = n - 1; i >= 1; --i)
    probs[i] = std::max(0.0, probs[i + 1] - static_cast<double>(counts[i]) * inv);
  probs[0] = 0.0;
  return probs;
}

BoundaryTable EstimateTable(std::span<const double> scores, int num_segments,
                            bool widen_degenerate) {
  if (scores.empty()) throw EmptyClassError("cannot estimate a table from no scores");
  if (num_segments < 1) throw ConfigError("number of segments must be >= 1");
  auto [mn_it, mx_it] = std::minmax_element(scores.begin(), scores.end());
  double lo = *mn_it, hi = *mx_it;
  if (!(hi > lo)) {
    if (!widen_degenerate)
      throw DegenerateRangeError("all " + std::to_string(scores.size()) +
                                 " scores equal " + FormatDouble(lo));
    lo -= 1e-6;
  }

  BoundaryTable table;
  table.boundaries.resize(num_segments + 1);
  const double width = (hi - lo) / num_segments;
  for (int n = 0; n < num_segments; ++n) table.boundaries[n] = lo + n * width;
  table.boundaries[num_segments] = hi;

  // Segment k (0-based) holds b_k <= x < b_{k+1}; the top segment also holds
  // b_N. Assigning by comparison keeps probs[n] equal to the fraction of
  // scores below boundaries[n].
  table.counts.assign(num_segments, 0);
  const auto interior_begin = table.boundaries.begin() + 1;
  const auto interior_end = table.boundaries.end() - 1;
  for (double x : scores) {
    auto k = std::upper_bound(interior_begin, interior_end, x) - interior_begin;
    ++table.counts[k];
  }
  table.total = static_cast<int64_t>(scores.size());
  table.probs = ProbsFromCounts(table.counts);
  return table;
}

double PositiveProb(double x, const BoundaryTable &table) {
  const auto &b = table.boundaries;
  if (x <= b.front()) return 0.0;
  if (x >= b.back()) return 1.0;
  const size_t n = static_cast<size_t>(std::upper_bound(b.begin(), b.end(), x) - b.begin()) - 1;
  const auto &p = table.probs;
  return p[n] + (x - b[n]) * (p[n + 1] - p[n]) / (b[n + 1] - b[n]);
}

double NegativeProb(double x, const BoundaryTable &table) {
  return 1.0 - PositiveProb(x, table);
}

std::string FusionModeName(FusionMode mode) {
  return mode == FusionMode::kComplement ? "complement" : "literal";
}

FusionMode ParseFusionMode(const std::string &name) {
  if (name == "complement") return FusionMode::kComplement;
  if (name == "literal") return FusionMode::kLiteral;
  throw ConfigError("unknown fusion mode '" + name + "' (complement|literal)");
}

double Fuse(double p_pos, double q_neg, double scale_pos, double scale_neg, FusionMode mode) {
  if (!(scale_pos >= 0) || !(scale_neg >= 0))
    throw ConfigError("fusion scales must be non-negative");
  if (scale_pos == 0 && scale_neg == 0) throw ConfigError("fusion scales are both zero");
  const double neg_term = mode == FusionMode::kComplement ? 1.0 - q_neg : q_neg;
  if (scale_neg == 0) return p_pos;
  if (scale_pos == 0) return neg_term;
  if (p_pos <= 0 || neg_term <= 0) return 0.0;
  // Log form keeps the result invariant under scaling both exponents.
  return std::exp((scale_pos * std::log(p_pos) + scale_neg * std::log(neg_term)) /
                  (scale_pos + scale_neg));
}

double StateCalibration::Confidence(double raw, FusionMode mode) const {
  return Fuse(PositiveProb(raw, pos_table), NegativeProb(raw, neg_table), scale_pos,
              scale_neg, mode);
}

const StateCalibration &CalibrationSet::State(int s) const {
  if (s < 0 || s >= num_states || static_cast<size_t>(s) >= per_state.size())
    throw LookupError("no calibration for state " + std::to_string(s));
  return per_state[s];
}

void CalibrationSet::Validate() const {
  if (num_states < 1) throw FormatError("calibration needs at least one state");
  if (per_state.size() != static_cast<size_t>(num_states))
    throw FormatError("calibration declares " + std::to_string(num_states) + " states but has " +
                      std::to_string(per_state.size()));
  for (int s = 0; s < num_states; ++s) {
    const auto &c = per_state[s];
    c.pos_table.Validate();
    c.neg_table.Validate();
    if (!(c.scale_pos >= 0) || !(c.scale_neg >= 0) || !(c.scale_pos + c.scale_neg > 0))
      throw FormatError("state " + std::to_string(s) + ": invalid scale pair");
  }
}

StateConfidences CalibrateFrame(const StateScores &raw, const CalibrationSet &calib) {
  StateConfidences out;
  for (const auto &[s, x] : raw) out.emplace(s, calib.State(s).Confidence(x, calib.fusion));
  return out;
}

std::vector<LabeledScores> CollectStateScores(const ModelBundle &bundle,
                                              const AlignedDataset &dev) {
  std::vector<LabeledScores> out(bundle.num_states);
  for (const auto &utt : dev.utterances) {
    const auto emb = EmbedForward(utt.frames, bundle.embedding);
    for (size_t t = 0; t < emb.size(); ++t)
      for (int s = 0; s < bundle.num_states; ++s)
        out[s].emplace_back(TailForward(emb[t], bundle.tails[s]), utt.states[t] == s ? 1 : 0);
  }
  return out;
}

CalibrationSet EstimateCalibration(const std::vector<LabeledScores> &scores, int num_segments,
                                   double scale_pos, double scale_neg) {
  CalibrationSet calib;
  calib.num_states = static_cast<int>(scores.size());
  for (size_t s = 0; s < scores.size(); ++s) {
    std::vector<double> pos, neg;
    for (const auto &[x, label] : scores[s]) (label ? pos : neg).push_back(x);
    if (pos.empty())
      throw EmptyClassError("state " + std::to_string(s) + " has no positive dev frames");
    if (neg.empty())
      throw EmptyClassError("state " + std::to_string(s) + " has no negative dev frames");
    StateCalibration sc;
    sc.pos_table = EstimateTable(pos, num_segments, true);
    sc.neg_table = EstimateTable(neg, num_segments, true);
    sc.scale_pos = scale_pos;
    sc.scale_neg = scale_neg;
    calib.per_state.push_back(std::move(sc));
  }
  return calib;
}

double WeightedLogLikelihood(const LabeledScores &dev, const StateCalibration &calib,
                             FusionMode mode) {
  constexpr double kPosWeight = 0.99, kNegWeight = 0.01, kClamp = 1e-6;
  double sum = 0.0;
  for (const auto &[x, label] : dev) {
    const double p = std::clamp(calib.Confidence(x, mode), kClamp, 1.0 - kClamp);
    sum += label ? kPosWeight * std::log(p) : kNegWeight * std::log(1.0 - p);
  }
  return sum;
}

ScalePair AdaptScales(const LabeledScores &dev, std::span<const ScalePair> grid,
                      const StateCalibration &calib, FusionMode mode) {
  if (grid.empty()) throw ConfigError("scale grid is empty");
  const bool has_pos = std::any_of(dev.begin(), dev.end(), [](auto &p) { return p.second == 1; });
  const bool has_neg = std::any_of(dev.begin(), dev.end(), [](auto &p) { return p.second == 0; });
  if (!has_pos) throw EmptyClassError("no positive dev frames for scale adaptation");
  if (!has_neg) throw EmptyClassError("no negative dev frames for scale adaptation");

  std::vector<ScalePair> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end());
  StateCalibration trial = calib;
  ScalePair best = sorted.front();
  double best_ll = -std::numeric_limits<double>::infinity();
  for (const auto &pair : sorted) {
    trial.scale_pos = pair.first;
    trial.scale_neg = pair.second;
    const double ll = WeightedLogLikelihood(dev, trial, mode);
    if (ll > best_ll) {
      best_ll = ll;
      best = pair;
    }
  }
  return best;
}

std::vector<ScalePair> ScaleGrid(std::span<const double> values) {
  std::vector<ScalePair> grid;
  for (double a : values)
    for (double b : values) grid.emplace_back(a, b);
  return grid;
}

namespace {

void WriteTable(std::ostream &os, const std::string &tag, const BoundaryTable &t) {
  os << tag << ' ' << t.NumSegments() << '\n' << "boundaries";
  for (double b : t.boundaries) os << ' ' << FormatDouble(b);
  os << "\nprobs";
  for (double p : t.probs) os << ' ' << FormatDouble(p);
  os << "\ncounts";
  for (int64_t c : t.counts) os << ' ' << c;
  os << '\n';
}

class LineReader {
 public:
  LineReader(std::istream &is, std::string path) : is_(is), path_(std::move(path)) {}

  std::istringstream Next(const std::string &key) {
    std::string line;
    while (std::getline(is_, line)) {
      ++line_no_;
      if (line.find_first_not_of(" \t\r") != std::string::npos) break;
    }
    if (!is_) Fail("unexpected end of file, expected '" + key + "'");
    std::istringstream ls(line);
    std::string k;
    ls >> k;
    if (k != key) Fail("expected '" + key + "', found '" + k + "'");
    return ls;
  }

  template <typename T>
  std::vector<T> Values(const std::string &key, size_t n) {
    auto ls = Next(key);
    std::vector<T> out(n);
    for (auto &v : out)
      if (!(ls >> v)) Fail(key + " needs " + std::to_string(n) + " values");
    std::string extra;
    if (ls >> extra) Fail(key + " has more than " + std::to_string(n) + " values");
    return out;
  }

  [[noreturn]] void Fail(const std::string &msg) const {
    throw FormatError(path_ + ":" + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::istream &is_;
  std::string path_;
  int line_no_ = 0;
};

BoundaryTable ReadTable(LineReader &r, const std::string &tag) {
  auto ls = r.Next(tag);
  int n = 0;
  if (!(ls >> n) || n < 1) r.Fail(tag + " needs a positive segment count");
  BoundaryTable t;
  t.boundaries = r.Values<double>("boundaries", n + 1);
  t.probs = r.Values<double>("probs", n + 1);
  t.counts = r.Values<int64_t>("counts", n);
  for (int64_t c : t.counts) t.total += c;
  return t;
}

}  // namespace

void SaveCalibration(const CalibrationSet &calib, const std::string &path) {
  calib.Validate();
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << "btnn-calibration " << kCalibrationFormatVersion << '\n';
  os << "num_states " << calib.num_states << '\n';
  os << "fusion " << FusionModeName(calib.fusion) << '\n';
  for (int s = 0; s < calib.num_states; ++s) {
    const auto &c = calib.per_state[s];
    os << "state " << s << '\n';
    os << "scales " << FormatDouble(c.scale_pos) << ' ' << FormatDouble(c.scale_neg) << '\n';
    WriteTable(os, "pos", c.pos_table);
    WriteTable(os, "neg", c.neg_table);
  }
  if (!os) throw IoError("write failed for " + path);
}

CalibrationSet LoadCalibration(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  LineReader r(is, path);
  CalibrationSet calib;
  auto ls = r.Next("btnn-calibration");
  int version = 0;
  ls >> version;
  if (version != kCalibrationFormatVersion)
    r.Fail("unsupported calibration version " + std::to_string(version));
  ls = r.Next("num_states");
  if (!(ls >> calib.num_states) || calib.num_states < 1) r.Fail("bad num_states");
  ls = r.Next("fusion");
  std::string mode;
  ls >> mode;
  calib.fusion = ParseFusionMode(mode);
  for (int s = 0; s < calib.num_states; ++s) {
    ls = r.Next("state");
    int id = -1;
    ls >> id;
    if (id != s) r.Fail("expected state " + std::to_string(s) + ", found " + std::to_string(id));
    StateCalibration c;
    auto scales = r.Values<double>("scales", 2);
    c.scale_pos = scales[0];
    c.scale_neg = scales[1];
    c.pos_table = ReadTable(r, "pos");
    c.neg_table = ReadTable(r, "neg");
    calib.per_state.push_back(std::move(c));
  }
  try {
    calib.Validate();
  } catch (const FormatError &e) {
    throw FormatError(path + ": " + e.what());
  }
  return calib;
}

}  // namespace btnn
