// simd/kernels-scalar.cc

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

#include "btnn/kernels.h"

namespace btnn::simd {

namespace {

float DotScalar(const float *a, const float *b, size_t n) {
  float sum = 0.0f;
  for (size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void MatVecScalar(const float *w, size_t rows, size_t cols, const float *x,
                  const float *bias, float *y) {
  for (size_t r = 0; r < rows; ++r) {
    float v = DotScalar(w + r * cols, x, cols);
    y[r] = bias != nullptr ? bias[r] + v : v;
  }
}

void MulAccScalar(const float *a, const float *b, size_t n, float *y) {
  for (size_t i = 0; i < n; ++i) y[i] += a[i] * b[i];
}

}  // namespace

const KernelTable &ScalarKernels() {
  static const KernelTable table{"scalar", DotScalar, MatVecScalar, MulAccScalar};
  return table;
}

}  // namespace btnn::simd
