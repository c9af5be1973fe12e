// btnn/binary-io.h

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

#ifndef BTNN_BINARY_IO_H_
#define BTNN_BINARY_IO_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace btnn {

// Little-endian primitives shared by the feature and model formats. Readers
// throw IoError on a short read; `what` names the field for the message.

void WriteU32(std::ostream &os, uint32_t v);
void WriteU64(std::ostream &os, uint64_t v);
void WriteF32(std::ostream &os, float v);
void WriteF32s(std::ostream &os, std::span<const float> v);

uint32_t ReadU32(std::istream &is, const std::string &what);
uint64_t ReadU64(std::istream &is, const std::string &what);
float ReadF32(std::istream &is, const std::string &what);
void ReadF32s(std::istream &is, std::span<float> out, const std::string &what);

/// Shortest decimal text that parses back to the same double.
std::string FormatDouble(double v);

}  // namespace btnn

#endif  // BTNN_BINARY_IO_H_
