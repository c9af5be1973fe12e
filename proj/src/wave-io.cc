// wave-io.cc

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

#include "btnn/wave-io.h"

#include <fstream>

#include "btnn/binary-io.h"
#include "btnn/error.h"

namespace btnn {

namespace {

uint16_t ReadU16(std::istream &is, const std::string &what) {
  unsigned char b[2];
  is.read(reinterpret_cast<char *>(b), 2);
  if (is.gcount() != 2) throw IoError("truncated input while reading " + what);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

void WriteU16(std::ostream &os, uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  os.write(b, 2);
}

std::string ReadTag(std::istream &is) {
  char tag[4];
  is.read(tag, 4);
  if (is.gcount() != 4) return {};
  return std::string(tag, 4);
}

}  // namespace

AudioBuffer ReadWave(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  if (ReadTag(is) != "RIFF") throw FormatError(path + ": not a RIFF file");
  ReadU32(is, "riff size");
  if (ReadTag(is) != "WAVE") throw FormatError(path + ": not a WAVE file");

  AudioBuffer audio;
  bool have_fmt = false;
  for (;;) {
    std::string tag = ReadTag(is);
    if (tag.empty()) throw FormatError(path + ": no data chunk");
    uint32_t size = ReadU32(is, "chunk size");
    if (tag == "fmt ") {
      uint16_t format = ReadU16(is, "format");
      uint16_t channels = ReadU16(is, "channels");
      uint32_t rate = ReadU32(is, "sample rate");
      ReadU32(is, "byte rate");
      ReadU16(is, "block align");
      uint16_t bits = ReadU16(is, "bits per sample");
      if (format != 1 || bits != 16)
        throw FormatError(path + ": only 16-bit PCM is supported");
      if (channels != 1) throw FormatError(path + ": expected mono audio");
      audio.sample_rate_hz = static_cast<int>(rate);
      is.seekg(size - 16 + (size & 1), std::ios::cur);
      have_fmt = true;
    } else if (tag == "data") {
      if (!have_fmt) throw FormatError(path + ": data chunk before fmt chunk");
      audio.samples.resize(size / 2);
      for (auto &s : audio.samples) s = static_cast<int16_t>(ReadU16(is, "samples"));
      return audio;
    } else {
      is.seekg(size + (size & 1), std::ios::cur);
    }
  }
}

void WriteWave(const std::string &path, const AudioBuffer &audio) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  const uint32_t data_bytes = static_cast<uint32_t>(audio.samples.size() * 2);
  os.write("RIFF", 4);
  WriteU32(os, 36 + data_bytes);
  os.write("WAVEfmt ", 8);
  WriteU32(os, 16);
  WriteU16(os, 1);
  WriteU16(os, 1);
  WriteU32(os, static_cast<uint32_t>(audio.sample_rate_hz));
  WriteU32(os, static_cast<uint32_t>(audio.sample_rate_hz) * 2);
  WriteU16(os, 2);
  WriteU16(os, 16);
  os.write("data", 4);
  WriteU32(os, data_bytes);
  for (int16_t s : audio.samples) WriteU16(os, static_cast<uint16_t>(s));
  if (!os) throw IoError("write failed for " + path);
}

}  // namespace btnn
