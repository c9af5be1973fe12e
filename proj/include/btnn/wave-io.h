// btnn/wave-io.h

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

#ifndef BTNN_WAVE_IO_H_
#define BTNN_WAVE_IO_H_

#include <string>

#include "btnn/features.h"

namespace btnn {

// Mono 16-bit PCM RIFF/WAVE. Multi-channel files are rejected.
AudioBuffer ReadWave(const std::string &path);
void WriteWave(const std::string &path, const AudioBuffer &audio);

}  // namespace btnn

#endif  // BTNN_WAVE_IO_H_
