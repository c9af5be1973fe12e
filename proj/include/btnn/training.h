// btnn/training.h

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

#ifndef BTNN_TRAINING_H_
#define BTNN_TRAINING_H_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "btnn/dataset.h"
#include "btnn/nnet.h"

namespace btnn {

/// Per-frame binary loss of one tail: squared distance to 0 for negatives,
/// squared distance to 1 times `scale` for positives.
double StateLoss(double output, int label, double scale);

struct BatchItem {
  AlignedSample sample;
  int label = 0;  // 1 when sample.state is the state being trained

  bool operator==(const BatchItem &) const = default;
};

/// Every positive frame of `state` plus round(ratio * positives) negatives
/// drawn without replacement (capped at the negatives available), shuffled.
/// Throws EmptyClassError when the state has no positive frame.
std::vector<BatchItem> SampleBatch(std::span<const AlignedSample> samples, int state,
                                   double ratio, std::mt19937_64 &rng);

enum class Optimizer { kSgd, kAdam };

struct TrainConfig {
  // Per-state positive scale and negatives-per-positive. Empty vectors mean
  // default_scale_pos / default_neg_pos_ratio for every state.
  std::vector<double> scale_pos;
  std::vector<double> neg_pos_ratio;
  double default_scale_pos = 4.0;
  double default_neg_pos_ratio = 1.0;
  double learning_rate = 0.01;
  int epochs = 50;
  int batch_size = 32;
  uint64_t rng_seed = 1;
  Optimizer optimizer = Optimizer::kAdam;
  // false: tails only, on a frozen embedding. true: embedding and tails.
  bool joint = false;

  double ScalePos(int state) const;
  double NegPosRatio(int state) const;
  void Validate(int num_states) const;
};

struct TrainResult {
  ModelBundle bundle;
  std::vector<std::vector<double>> loss_trace;  // [state][epoch], mean StateLoss
};

TrainResult Train(const AlignedDataset &dataset, const ModelBundle &bundle,
                  const TrainConfig &config);

/// Gradients of StateLoss for one frame, flattened in model order: each
/// dense layer contributes weights then bias, memory layers their taps.
struct ParameterGradients {
  std::vector<double> tail;
  std::vector<double> embedding;
};

ParameterGradients ComputeGradients(const ModelBundle &bundle, const AlignedUtterance &utt,
                                    int64_t frame, int state, double scale);

/// Max relative error between ComputeGradients and central differences over
/// every parameter of the state's tail and the embedding. Relative error is
/// |a - n| / max(|a|, |n|, 1e-6).
double GradientCheck(const ModelBundle &bundle, const AlignedUtterance &utt, int64_t frame,
                     int state, double epsilon, double scale = 4.0);

}  // namespace btnn

#endif  // BTNN_TRAINING_H_
