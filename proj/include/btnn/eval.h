// btnn/eval.h

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

#ifndef BTNN_EVAL_H_
#define BTNN_EVAL_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "btnn/decoder.h"

namespace btnn {

struct PositiveRef {
  std::string utt_id;
  std::string keyword;
  std::optional<std::pair<int64_t, int64_t>> span;  // [start, end) frames
};

struct ReferenceSet {
  std::vector<PositiveRef> positives;
  std::vector<std::string> negatives;  // keyword-free utterance ids
  double negative_hours = 0.0;
};

// Reference manifest lines: "utt_id POS keyword [start end]" for keyword
// utterances and "utt_id NEG hours" for keyword-free audio.
ReferenceSet ReadReferences(const std::string &path);
void WriteReferences(const std::string &path, const ReferenceSet &refs,
                     const std::map<std::string, double> &negative_hours_by_utt);

/// Decoded events per utterance id. An utterance with an empty vector was
/// decoded and produced nothing.
using ResultsMap = std::map<std::string, std::vector<DetectionEvent>>;

// Results file: "utt_id keyword start_frame end_frame confidence" per event;
// a line holding only "utt_id" records a decoded utterance without events.
ResultsMap ReadResults(const std::string &path);
void WriteResults(const std::string &path, const ResultsMap &results);

/// Whether an event counts as a detection of `ref`: same keyword, and frame
/// intervals overlapping by at least one frame when the reference has a span.
bool Matches(const DetectionEvent &event, const PositiveRef &ref);

/// Fraction of positives with a matching event of confidence >= threshold.
/// Throws EvalError when a positive utterance is missing from `results`.
double WakeupRate(const ResultsMap &results, const ReferenceSet &refs,
                  double threshold = -std::numeric_limits<double>::infinity());

/// Events with confidence >= threshold on the negative utterances.
int64_t CountFalseAlarms(const ResultsMap &results, const ReferenceSet &refs,
                         double threshold = -std::numeric_limits<double>::infinity());

/// count * 24 / negative_hours. Throws EvalError for non-positive hours.
double FalseAlarmRate(int64_t count, double negative_hours);

struct OperatingPoint {
  double threshold = 0.0;
  double wakeup_rate = 0.0;
  double false_alarms_per_24h = 0.0;

  bool operator==(const OperatingPoint &) const = default;
};

struct SweepResult {
  std::vector<OperatingPoint> points;
  std::optional<OperatingPoint> best;  // max wakeup with FA <= target
};

/// Re-thresholds the cached events at each threshold (ascending) without
/// decoding again; ties for the best point go to the lowest threshold.
SweepResult Sweep(std::span<const double> thresholds, const ResultsMap &candidates,
                  const ReferenceSet &refs, double fa_target);

/// Distinct event confidences in ascending order.
std::vector<double> CandidateThresholds(const ResultsMap &candidates);

/// Best qualifying final token of one keyword on one frame, before the
/// detection threshold and refractory window are applied.
struct Candidate {
  std::string keyword;
  int64_t frame = 0;
  int64_t start_frame = 0;
  double confidence = 0.0;

  bool operator==(const Candidate &) const = default;
};

struct CandidateFile {
  int refractory_frames = 50;
  std::map<std::string, std::vector<Candidate>> utterances;  // frame order
};

// Candidates file: "btnn-candidates 1 refractory R", then one line per
// candidate "utt_id keyword frame start_frame confidence"; a line holding
// only "utt_id" records a decoded utterance without candidates.
CandidateFile ReadCandidates(const std::string &path);
void WriteCandidates(const std::string &path, const CandidateFile &file);

/// Events the decoder emits at `threshold`: per keyword, the first candidate
/// at or above it opens a refractory window of `refractory_frames`.
ResultsMap ReplayDetections(const CandidateFile &file, double threshold);

/// Exact sweep: replays detection at each threshold instead of filtering
/// events decoded at a single threshold.
SweepResult SweepCandidates(std::span<const double> thresholds, const CandidateFile &file,
                            const ReferenceSet &refs, double fa_target);

std::vector<double> CandidateThresholds(const CandidateFile &file);

}  // namespace btnn

#endif  // BTNN_EVAL_H_
