// btnn/error.h

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

#ifndef BTNN_ERROR_H_
#define BTNN_ERROR_H_

#include <stdexcept>
#include <string>

namespace btnn {

/// Base of every error thrown by the library. The CLI maps these to exit
/// status 1; usage errors are handled by the argument parser (exit 2).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string &what) : std::runtime_error(what) {}
};

/// Invalid configuration values (feature config, fusion scales, decode
/// config, ...).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string &what) : Error("config error: " + what) {}
};

/// A file was readable but its contents do not follow the declared format.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string &what) : Error("format error: " + what) {}
};

/// Missing, unreadable or truncated file.
class IoError : public Error {
 public:
  explicit IoError(const std::string &what) : Error("I/O error: " + what) {}
};

/// Vector/matrix dimension mismatch.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string &what) : Error("shape error: " + what) {}
};

/// Unknown state id, keyword, or calibration entry.
class LookupError : public Error {
 public:
  explicit LookupError(const std::string &what) : Error("lookup error: " + what) {}
};

/// A class (positive or negative samples for a state) is empty.
class EmptyClassError : public Error {
 public:
  explicit EmptyClassError(const std::string &what)
      : Error("empty class: " + what) {}
};

/// Score range of an estimation batch collapses to a point.
class DegenerateRangeError : public Error {
 public:
  explicit DegenerateRangeError(const std::string &what)
      : Error("degenerate range: " + what) {}
};

/// Out-of-vocabulary unit while expanding a keyword.
class OovError : public Error {
 public:
  explicit OovError(const std::string &what) : Error("OOV: " + what) {}
};

/// Graph construction failure.
class GraphError : public Error {
 public:
  explicit GraphError(const std::string &what) : Error("graph error: " + what) {}
};

/// Training diverged.
class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string &what)
      : Error("training error: " + what) {}
};

/// A caller broke an operation's precondition (e.g. a decoder step without
/// the confidences it needs).
class ContractError : public Error {
 public:
  explicit ContractError(const std::string &what)
      : Error("contract violation: " + what) {}
};

/// Evaluation inputs are inconsistent (missing utterance, zero hours).
class EvalError : public Error {
 public:
  explicit EvalError(const std::string &what) : Error("eval error: " + what) {}
};

}  // namespace btnn

#endif  // BTNN_ERROR_H_
