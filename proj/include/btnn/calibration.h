// btnn/calibration.h

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

#ifndef BTNN_CALIBRATION_H_
#define BTNN_CALIBRATION_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "btnn/dataset.h"
#include "btnn/nnet.h"

namespace btnn {

/// Piecewise-linear empirical CDF over raw tail scores.
///
/// boundaries b_0 < ... < b_N split [min, max] of the estimation batch into
/// N equal-width segments; counts[n-1] is the number of scores in segment n
/// (b_{n-1} <= x < b_n, the last segment also holds b_N) and probs[n] the
/// fraction of scores below b_n, with probs[0] = 0 and probs[N] = 1.
struct BoundaryTable {
  std::vector<double> boundaries;
  std::vector<double> probs;
  std::vector<int64_t> counts;
  int64_t total = 0;

  int NumSegments() const { return static_cast<int>(counts.size()); }
  void Validate() const;
  bool operator==(const BoundaryTable &) const = default;
};

/// Boundary probabilities from segment counts by the top-down recursion
/// P_N = 1, P_n = P_{n+1} - C_{n+1} / C_total, P_0 = 0.
std::vector<double> ProbsFromCounts(std::span<const int64_t> counts);

/// Throws DegenerateRangeError when every score is equal, unless
/// `widen_degenerate` is set, in which case the range becomes [x-1e-6, x] so
/// that the shared value itself sits at the top of the distribution.
BoundaryTable EstimateTable(std::span<const double> scores, int num_segments,
                            bool widen_degenerate = false);

/// Ascending probability: 0 at or below b_0, 1 at or above b_N, linear
/// interpolation of probs in between.
double PositiveProb(double x, const BoundaryTable &table);

/// Fraction of negative-table mass at or above x: 1 - PositiveProb(x, table).
double NegativeProb(double x, const BoundaryTable &table);

enum class FusionMode {
  kComplement,  // (p^Sp * (1 - q)^Sn)^(1 / (Sp + Sn)); monotone in the raw score
  kLiteral,     // (p^Sp * q^Sn)^(1 / (Sp + Sn))
};

std::string FusionModeName(FusionMode mode);
FusionMode ParseFusionMode(const std::string &name);

/// Scaled geometric fusion of a positive and a negative probability.
/// Throws ConfigError for negative scales or Sp = Sn = 0.
double Fuse(double p_pos, double q_neg, double scale_pos, double scale_neg,
            FusionMode mode = FusionMode::kComplement);

struct StateCalibration {
  BoundaryTable pos_table;
  BoundaryTable neg_table;
  double scale_pos = 4.0;
  double scale_neg = 1.0;

  double Confidence(double raw, FusionMode mode = FusionMode::kComplement) const;
  bool operator==(const StateCalibration &) const = default;
};

struct CalibrationSet {
  int num_states = 0;
  std::vector<StateCalibration> per_state;
  FusionMode fusion = FusionMode::kComplement;

  const StateCalibration &State(int s) const;
  void Validate() const;
  bool operator==(const CalibrationSet &) const = default;
};

using StateConfidences = std::map<int, double>;

/// Per-state confidences, each from its own tables; nothing is normalized
/// across states. Throws LookupError for a state without calibration.
StateConfidences CalibrateFrame(const StateScores &raw, const CalibrationSet &calib);

/// (raw score, label) pairs of one state on aligned data; label 1 marks
/// frames aligned to the state.
using LabeledScores = std::vector<std::pair<double, int>>;

/// Raw tail outputs for every frame of `dev`, grouped per state.
std::vector<LabeledScores> CollectStateScores(const ModelBundle &bundle,
                                              const AlignedDataset &dev);

/// Tables for every state from labeled scores; every state gets the same
/// initial scales.
CalibrationSet EstimateCalibration(const std::vector<LabeledScores> &scores, int num_segments,
                                   double scale_pos = 4.0, double scale_neg = 1.0);

/// Frame-level log likelihood with positives weighted 0.99 and negatives
/// 0.01: sum of w * log(p) over positives and w * log(1 - p) over negatives,
/// p clamped to [1e-6, 1 - 1e-6].
double WeightedLogLikelihood(const LabeledScores &dev, const StateCalibration &calib,
                             FusionMode mode = FusionMode::kComplement);

using ScalePair = std::pair<double, double>;

/// Grid pair maximizing WeightedLogLikelihood; ties go to the
/// lexicographically smallest pair. Throws EmptyClassError unless `dev` has
/// both classes.
ScalePair AdaptScales(const LabeledScores &dev, std::span<const ScalePair> grid,
                      const StateCalibration &calib,
                      FusionMode mode = FusionMode::kComplement);

/// Cartesian product of `values` with itself.
std::vector<ScalePair> ScaleGrid(std::span<const double> values);

inline constexpr int kCalibrationFormatVersion = 1;

void SaveCalibration(const CalibrationSet &calib, const std::string &path);
CalibrationSet LoadCalibration(const std::string &path);

}  // namespace btnn

#endif  // BTNN_CALIBRATION_H_
