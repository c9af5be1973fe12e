// dataset.cc

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

#include "btnn/dataset.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "btnn/error.h"

namespace btnn {

std::vector<AlignedSample> AlignedDataset::Samples() const {
  std::vector<AlignedSample> out;
  for (size_t u = 0; u < utterances.size(); ++u)
    for (size_t t = 0; t < utterances[u].states.size(); ++t)
      out.push_back({static_cast<int64_t>(u), static_cast<int64_t>(t),
                     utterances[u].states[t]});
  return out;
}

void AlignedDataset::Validate() const {
  if (num_states < 1) throw ConfigError("dataset num_states must be >= 1");
  for (const auto &u : utterances) {
    if (u.frames.size() != u.states.size())
      throw FormatError("utterance " + u.id + ": " + std::to_string(u.frames.size()) +
                        " frames but " + std::to_string(u.states.size()) + " alignment entries");
    for (size_t t = 0; t < u.states.size(); ++t)
      if (u.states[t] < 0 || u.states[t] >= num_states)
        throw FormatError("utterance " + u.id + " frame " + std::to_string(t) + ": state " +
                          std::to_string(u.states[t]) + " outside 0.." +
                          std::to_string(num_states - 1));
  }
}

void WriteAlignment(const std::string &path, const AlignedUtterance &utt) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  for (size_t t = 0; t < utt.states.size(); ++t)
    os << utt.id << ' ' << t << ' ' << utt.states[t] << '\n';
  if (!os) throw IoError("write failed for " + path);
}

std::pair<std::string, std::vector<int>> ReadAlignment(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  std::string utt_id;
  std::vector<int> states;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string id;
    int64_t frame;
    int state;
    if (!(ls >> id >> frame >> state))
      throw FormatError(path + ":" + std::to_string(line_no) +
                        ": expected 'utt_id frame_index state_id'");
    if (utt_id.empty()) utt_id = id;
    if (id != utt_id)
      throw FormatError(path + ":" + std::to_string(line_no) + ": utterance id " + id +
                        " differs from " + utt_id);
    if (frame != static_cast<int64_t>(states.size()))
      throw FormatError(path + ":" + std::to_string(line_no) + ": frame index " +
                        std::to_string(frame) + " out of order (expected " +
                        std::to_string(states.size()) + ")");
    states.push_back(state);
  }
  return {utt_id, states};
}

std::vector<ManifestEntry> ReadManifest(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string &p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    std::istringstream ls(line);
    ManifestEntry e;
    if (!(ls >> e.features))
      throw FormatError(path + ":" + std::to_string(line_no) + ": missing feature path");
    ls >> e.alignment;
    e.features = resolve(e.features);
    if (!e.alignment.empty()) e.alignment = resolve(e.alignment);
    entries.push_back(std::move(e));
  }
  return entries;
}

void WriteManifest(const std::string &path, const std::vector<ManifestEntry> &entries) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  for (const auto &e : entries) {
    os << e.features;
    if (!e.alignment.empty()) os << ' ' << e.alignment;
    os << '\n';
  }
  if (!os) throw IoError("write failed for " + path);
}

AlignedDataset LoadAlignedDataset(const std::string &manifest_path, int feature_dim,
                                  int num_states) {
  AlignedDataset ds;
  ds.num_states = num_states;
  for (const auto &e : ReadManifest(manifest_path)) {
    if (e.alignment.empty())
      throw FormatError(manifest_path + ": entry " + e.features + " has no alignment file");
    AlignedUtterance utt;
    utt.frames = ReadFrames(e.features, feature_dim);
    auto [id, states] = ReadAlignment(e.alignment);
    utt.id = id.empty() ? std::filesystem::path(e.features).stem().string() : id;
    utt.states = std::move(states);
    ds.utterances.push_back(std::move(utt));
  }
  ds.Validate();
  return ds;
}

}  // namespace btnn
