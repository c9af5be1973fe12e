// simd/kernels-neon.cc

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

#include <arm_neon.h>

#include "btnn/kernels.h"

namespace btnn::simd {

namespace {

float DotNeon(const float *a, const float *b, size_t n) {
  float32x4_t acc0 = vdupq_n_f32(0.0f);
  float32x4_t acc1 = vdupq_n_f32(0.0f);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = vfmaq_f32(acc0, vld1q_f32(a + i), vld1q_f32(b + i));
    acc1 = vfmaq_f32(acc1, vld1q_f32(a + i + 4), vld1q_f32(b + i + 4));
  }
  float sum = vaddvq_f32(vaddq_f32(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void MatVecNeon(const float *w, size_t rows, size_t cols, const float *x,
                const float *bias, float *y) {
  for (size_t r = 0; r < rows; ++r) {
    float v = DotNeon(w + r * cols, x, cols);
    y[r] = bias != nullptr ? bias[r] + v : v;
  }
}

void MulAccNeon(const float *a, const float *b, size_t n, float *y) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    vst1q_f32(y + i, vfmaq_f32(vld1q_f32(y + i), vld1q_f32(a + i), vld1q_f32(b + i)));
  for (; i < n; ++i) y[i] += a[i] * b[i];
}

}  // namespace

const KernelTable &NeonKernels() {
  static const KernelTable table{"neon", DotNeon, MatVecNeon, MulAccNeon};
  return table;
}

}  // namespace btnn::simd
