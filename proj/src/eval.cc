// eval.cc

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

#include "btnn/eval.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "btnn/binary-io.h"
#include "btnn/error.h"

namespace btnn {

namespace {

std::vector<std::string> Tokenize(const std::string &line) {
  std::istringstream ls(line);
  std::vector<std::string> out;
  std::string t;
  while (ls >> t) out.push_back(t);
  return out;
}

bool ParseInt(const std::string &s, int64_t *v) {
  try {
    size_t pos = 0;
    *v = std::stoll(s, &pos);
    return pos == s.size();
  } catch (const std::exception &) {
    return false;
  }
}

bool ParseDouble(const std::string &s, double *v) {
  try {
    size_t pos = 0;
    *v = std::stod(s, &pos);
    return pos == s.size();
  } catch (const std::exception &) {
    return false;
  }
}

}  // namespace

ReferenceSet ReadReferences(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  ReferenceSet refs;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string &msg) {
    throw FormatError(path + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(is, line)) {
    ++line_no;
    auto tok = Tokenize(line);
    if (tok.empty() || tok[0][0] == '#') continue;
    if (tok.size() < 3) fail("expected 'utt_id POS keyword [start end]' or 'utt_id NEG hours'");
    if (tok[1] == "POS") {
      PositiveRef r;
      r.utt_id = tok[0];
      int64_t a, b;
      size_t kw_end = tok.size();
      if (tok.size() >= 5 && ParseInt(tok[tok.size() - 2], &a) && ParseInt(tok.back(), &b)) {
        if (b <= a) fail("reference span end must exceed start");
        r.span = std::make_pair(a, b);
        kw_end -= 2;
      }
      for (size_t i = 2; i < kw_end; ++i) r.keyword += (i > 2 ? " " : "") + tok[i];
      refs.positives.push_back(std::move(r));
    } else if (tok[1] == "NEG") {
      double hours;
      if (tok.size() != 3 || !ParseDouble(tok[2], &hours) || hours < 0)
        fail("NEG line needs a non-negative duration in hours");
      refs.negatives.push_back(tok[0]);
      refs.negative_hours += hours;
    } else {
      fail("second field must be POS or NEG");
    }
  }
  return refs;
}

void WriteReferences(const std::string &path, const ReferenceSet &refs,
                     const std::map<std::string, double> &negative_hours_by_utt) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  for (const auto &r : refs.positives) {
    os << r.utt_id << " POS " << r.keyword;
    if (r.span) os << ' ' << r.span->first << ' ' << r.span->second;
    os << '\n';
  }
  for (const auto &u : refs.negatives)
    os << u << " NEG " << FormatDouble(negative_hours_by_utt.at(u)) << '\n';
  if (!os) throw IoError("write failed for " + path);
}

ResultsMap ReadResults(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  ResultsMap results;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    auto tok = Tokenize(line);
    if (tok.empty() || tok[0][0] == '#') continue;
    auto &events = results[tok[0]];
    if (tok.size() == 1) continue;
    DetectionEvent ev;
    if (tok.size() < 5 || !ParseInt(tok[tok.size() - 3], &ev.start_frame) ||
        !ParseInt(tok[tok.size() - 2], &ev.end_frame) ||
        !ParseDouble(tok.back(), &ev.confidence))
      throw FormatError(path + ":" + std::to_string(line_no) +
                        ": expected 'utt_id keyword start_frame end_frame confidence'");
    for (size_t i = 1; i + 3 < tok.size(); ++i) ev.keyword += (i > 1 ? " " : "") + tok[i];
    events.push_back(std::move(ev));
  }
  return results;
}

void WriteResults(const std::string &path, const ResultsMap &results) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  for (const auto &[utt, events] : results) {
    if (events.empty()) os << utt << '\n';
    for (const auto &e : events)
      os << utt << ' ' << e.keyword << ' ' << e.start_frame << ' ' << e.end_frame << ' '
         << FormatDouble(e.confidence) << '\n';
  }
  if (!os) throw IoError("write failed for " + path);
}

bool Matches(const DetectionEvent &event, const PositiveRef &ref) {
  if (event.keyword != ref.keyword) return false;
  if (!ref.span) return true;
  return std::max(event.start_frame, ref.span->first) <
         std::min(event.end_frame, ref.span->second);
}

double WakeupRate(const ResultsMap &results, const ReferenceSet &refs, double threshold) {
  if (refs.positives.empty()) throw EvalError("no positive references");
  int64_t hits = 0;
  for (const auto &ref : refs.positives) {
    auto it = results.find(ref.utt_id);
    if (it == results.end()) throw EvalError("utterance " + ref.utt_id + " missing from results");
    for (const auto &ev : it->second)
      if (ev.confidence >= threshold && Matches(ev, ref)) {
        ++hits;
        break;
      }
  }
  return static_cast<double>(hits) / static_cast<double>(refs.positives.size());
}

int64_t CountFalseAlarms(const ResultsMap &results, const ReferenceSet &refs, double threshold) {
  int64_t count = 0;
  for (const auto &utt : refs.negatives) {
    auto it = results.find(utt);
    if (it == results.end()) throw EvalError("utterance " + utt + " missing from results");
    for (const auto &ev : it->second)
      if (ev.confidence >= threshold) ++count;
  }
  return count;
}

double FalseAlarmRate(int64_t count, double negative_hours) {
  if (!(negative_hours > 0)) throw EvalError("negative audio duration must be positive");
  return static_cast<double>(count) * 24.0 / negative_hours;
}

SweepResult Sweep(std::span<const double> thresholds, const ResultsMap &candidates,
                  const ReferenceSet &refs, double fa_target) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end()))
    throw ConfigError("sweep thresholds must be sorted ascending");
  SweepResult out;
  for (double t : thresholds) {
    OperatingPoint p{t, WakeupRate(candidates, refs, t),
                     FalseAlarmRate(CountFalseAlarms(candidates, refs, t), refs.negative_hours)};
    out.points.push_back(p);
    if (p.false_alarms_per_24h <= fa_target && (!out.best || p.wakeup_rate > out.best->wakeup_rate))
      out.best = p;
  }
  return out;
}

std::vector<double> CandidateThresholds(const ResultsMap &candidates) {
  std::set<double> s;
  for (const auto &[utt, events] : candidates)
    for (const auto &e : events) s.insert(e.confidence);
  return {s.begin(), s.end()};
}

CandidateFile ReadCandidates(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  CandidateFile file;
  std::string line;
  if (!std::getline(is, line)) throw FormatError(path + ": empty candidates file");
  auto head = Tokenize(line);
  int64_t refractory = 0;
  if (head.size() != 4 || head[0] != "btnn-candidates" || head[1] != "1" ||
      head[2] != "refractory" || !ParseInt(head[3], &refractory) || refractory < 0)
    throw FormatError(path + ": expected header 'btnn-candidates 1 refractory R'");
  file.refractory_frames = static_cast<int>(refractory);
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    auto tok = Tokenize(line);
    if (tok.empty()) continue;
    auto &cands = file.utterances[tok[0]];
    if (tok.size() == 1) continue;
    Candidate c;
    if (tok.size() < 5 || !ParseInt(tok[tok.size() - 3], &c.frame) ||
        !ParseInt(tok[tok.size() - 2], &c.start_frame) ||
        !ParseDouble(tok.back(), &c.confidence))
      throw FormatError(path + ":" + std::to_string(line_no) +
                        ": expected 'utt_id keyword frame start_frame confidence'");
    for (size_t i = 1; i + 3 < tok.size(); ++i) c.keyword += (i > 1 ? " " : "") + tok[i];
    if (!cands.empty() && c.frame < cands.back().frame)
      throw FormatError(path + ":" + std::to_string(line_no) + ": candidates out of frame order");
    cands.push_back(std::move(c));
  }
  return file;
}

void WriteCandidates(const std::string &path, const CandidateFile &file) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << "btnn-candidates 1 refractory " << file.refractory_frames << '\n';
  for (const auto &[utt, cands] : file.utterances) {
    if (cands.empty()) os << utt << '\n';
    for (const auto &c : cands)
      os << utt << ' ' << c.keyword << ' ' << c.frame << ' ' << c.start_frame << ' '
         << FormatDouble(c.confidence) << '\n';
  }
  if (!os) throw IoError("write failed for " + path);
}

ResultsMap ReplayDetections(const CandidateFile &file, double threshold) {
  ResultsMap out;
  for (const auto &[utt, cands] : file.utterances) {
    auto &events = out[utt];
    std::map<std::string, int64_t> suppressed_through;
    for (const auto &c : cands) {
      if (c.confidence < threshold) continue;
      auto it = suppressed_through.find(c.keyword);
      if (it != suppressed_through.end() && c.frame <= it->second) continue;
      suppressed_through[c.keyword] = c.frame + file.refractory_frames;
      events.push_back({c.keyword, c.start_frame, c.frame + 1, c.confidence});
    }
  }
  return out;
}

SweepResult SweepCandidates(std::span<const double> thresholds, const CandidateFile &file,
                            const ReferenceSet &refs, double fa_target) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end()))
    throw ConfigError("sweep thresholds must be sorted ascending");
  SweepResult out;
  for (double t : thresholds) {
    const ResultsMap events = ReplayDetections(file, t);
    OperatingPoint p{t, WakeupRate(events, refs),
                     FalseAlarmRate(CountFalseAlarms(events, refs), refs.negative_hours)};
    out.points.push_back(p);
    if (p.false_alarms_per_24h <= fa_target && (!out.best || p.wakeup_rate > out.best->wakeup_rate))
      out.best = p;
  }
  return out;
}

std::vector<double> CandidateThresholds(const CandidateFile &file) {
  std::set<double> s;
  for (const auto &[utt, cands] : file.utterances)
    for (const auto &c : cands) s.insert(c.confidence);
  return {s.begin(), s.end()};
}

}  // namespace btnn
