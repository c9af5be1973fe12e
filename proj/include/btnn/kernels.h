// btnn/kernels.h

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

#ifndef BTNN_KERNELS_H_
#define BTNN_KERNELS_H_

#include <cstddef>
#include <string_view>
#include <vector>

namespace btnn::simd {

// Float32 inner loops used by inference (dense layers, memory taps, mel
// weighting). Each instruction set provides a full table; one table is chosen
// per process at first use so every caller in a process sees identical
// rounding. Scalar is the reference; vector variants are only required to
// agree with it to float rounding (accumulation order differs).
struct KernelTable {
  const char *name;
  // sum_i a[i] * b[i]
  float (*dot)(const float *a, const float *b, size_t n);
  // y[r] = bias[r] + sum_c w[r * cols + c] * x[c]; bias may be null.
  void (*matvec)(const float *w, size_t rows, size_t cols, const float *x,
                 const float *bias, float *y);
  // y[i] += a[i] * b[i]
  void (*mul_acc)(const float *a, const float *b, size_t n, float *y);
};

const KernelTable &ScalarKernels();

/// Tables compiled into this binary and runnable on this CPU, scalar first.
std::vector<const KernelTable *> AvailableKernels();

/// Process-wide selection. Honors BTNN_SIMD=scalar|avx2|neon; otherwise the
/// widest available table.
const KernelTable &Kernels();

/// Looks a table up by name; null when unavailable here.
const KernelTable *FindKernels(std::string_view name);

}  // namespace btnn::simd

#endif  // BTNN_KERNELS_H_
