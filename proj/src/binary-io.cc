// binary-io.cc

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

#include "btnn/binary-io.h"

#include <array>
#include <bit>
#include <charconv>
#include <istream>
#include <ostream>

#include "btnn/error.h"

namespace btnn {

namespace {

template <typename T>
void WriteLe(std::ostream &os, T v) {
  std::array<char, sizeof(T)> buf;
  for (size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf.data(), buf.size());
}

template <typename T>
T ReadLe(std::istream &is, const std::string &what) {
  std::array<unsigned char, sizeof(T)> buf;
  is.read(reinterpret_cast<char *>(buf.data()), buf.size());
  if (is.gcount() != static_cast<std::streamsize>(buf.size()))
    throw IoError("truncated input while reading " + what);
  T v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void WriteU32(std::ostream &os, uint32_t v) { WriteLe(os, v); }
void WriteU64(std::ostream &os, uint64_t v) { WriteLe(os, v); }
void WriteF32(std::ostream &os, float v) { WriteLe(os, std::bit_cast<uint32_t>(v)); }

void WriteF32s(std::ostream &os, std::span<const float> v) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char *>(v.data()),
             static_cast<std::streamsize>(v.size_bytes()));
  } else {
    for (float f : v) WriteF32(os, f);
  }
}

uint32_t ReadU32(std::istream &is, const std::string &what) {
  return ReadLe<uint32_t>(is, what);
}
uint64_t ReadU64(std::istream &is, const std::string &what) {
  return ReadLe<uint64_t>(is, what);
}
float ReadF32(std::istream &is, const std::string &what) {
  return std::bit_cast<float>(ReadLe<uint32_t>(is, what));
}

void ReadF32s(std::istream &is, std::span<float> out, const std::string &what) {
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char *>(out.data()),
            static_cast<std::streamsize>(out.size_bytes()));
    if (is.gcount() != static_cast<std::streamsize>(out.size_bytes()))
      throw IoError("truncated input while reading " + what);
  } else {
    for (float &f : out) f = ReadF32(is, what);
  }
}

std::string FormatDouble(double v) {
  std::array<char, 64> buf;
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace btnn
