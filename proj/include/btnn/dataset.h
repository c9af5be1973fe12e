// btnn/dataset.h

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

#ifndef BTNN_DATASET_H_
#define BTNN_DATASET_H_

#include <cstdint>
#include <string>
#include <vector>

#include "btnn/features.h"

namespace btnn {

/// One utterance with a frame-level state alignment (one state per frame).
struct AlignedUtterance {
  std::string id;
  FrameSequence frames;
  std::vector<int> states;
};

/// A frame of the dataset by position; label for state s is (state == s).
struct AlignedSample {
  int64_t utterance = 0;
  int64_t frame = 0;
  int state = 0;

  int Label(int s) const { return state == s ? 1 : 0; }
  bool operator==(const AlignedSample &) const = default;
};

struct AlignedDataset {
  int num_states = 0;
  std::vector<AlignedUtterance> utterances;

  std::vector<AlignedSample> Samples() const;
  /// Throws on inconsistent alignment lengths or out-of-range states.
  void Validate() const;
};

// Alignment file: one line per frame, "utt_id frame_index state_id".
void WriteAlignment(const std::string &path, const AlignedUtterance &utt);
/// Reads the alignment for a single utterance; frames must be listed as
/// 0..n-1 in order.
std::pair<std::string, std::vector<int>> ReadAlignment(const std::string &path);

// Dataset manifest: one line per utterance, "feature_path alignment_path".
// Relative paths resolve against the manifest's directory.
struct ManifestEntry {
  std::string features;
  std::string alignment;
};
std::vector<ManifestEntry> ReadManifest(const std::string &path);
void WriteManifest(const std::string &path, const std::vector<ManifestEntry> &entries);

AlignedDataset LoadAlignedDataset(const std::string &manifest_path, int feature_dim,
                                  int num_states);

}  // namespace btnn

#endif  // BTNN_DATASET_H_
