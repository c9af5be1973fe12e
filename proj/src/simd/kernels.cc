// simd/kernels.cc

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

#include <cstdlib>
#include <string>

#include "btnn/error.h"

namespace btnn::simd {

#ifdef BTNN_HAVE_AVX2
const KernelTable &Avx2Kernels();
#endif
#ifdef BTNN_HAVE_NEON
const KernelTable &NeonKernels();
#endif

std::vector<const KernelTable *> AvailableKernels() {
  std::vector<const KernelTable *> out{&ScalarKernels()};
#ifdef BTNN_HAVE_AVX2
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    out.push_back(&Avx2Kernels());
#endif
#ifdef BTNN_HAVE_NEON
  out.push_back(&NeonKernels());
#endif
  return out;
}

const KernelTable *FindKernels(std::string_view name) {
  for (const KernelTable *t : AvailableKernels())
    if (name == t->name) return t;
  return nullptr;
}

namespace {

const KernelTable &SelectKernels() {
  const char *env = std::getenv("BTNN_SIMD");
  if (env != nullptr && *env != '\0' && std::string_view(env) != "auto") {
    const KernelTable *t = FindKernels(env);
    if (t == nullptr)
      throw ConfigError(std::string("BTNN_SIMD=") + env +
                        " is not available on this machine");
    return *t;
  }
  return *AvailableKernels().back();
}

}  // namespace

const KernelTable &Kernels() {
  static const KernelTable &selected = SelectKernels();
  return selected;
}

}  // namespace btnn::simd
