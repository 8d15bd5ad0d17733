// Copyright 2026 The Isochron Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <string>

#include "isochron/common/error.h"
#include "isochron/numcore/kernels.h"

namespace isochron::num {

#if ISOCHRON_BUILD_AVX2
const KernelTable* avx2_kernels_impl();
#endif

namespace {

bool cpu_has_avx2_fma() {
#if ISOCHRON_BUILD_AVX2 && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* resolve() {
  const char* env = std::getenv("ISOCHRON_SIMD");
  std::string mode = env ? env : "auto";
  if (mode == "scalar") return &scalar_kernels();
  if (mode == "avx2") {
    const KernelTable* t = avx2_kernels();
    ISO_CHECK_ARG(t != nullptr,
                  "ISOCHRON_SIMD=avx2 requested but AVX2+FMA is unavailable "
                  "on this CPU or build");
    return t;
  }
  ISO_CHECK_ARG(mode == "auto",
                "ISOCHRON_SIMD must be scalar, avx2 or auto; got '" << mode
                                                                    << "'");
  const KernelTable* t = avx2_kernels();
  return t ? t : &scalar_kernels();
}

}  // namespace

const KernelTable* avx2_kernels() {
#if ISOCHRON_BUILD_AVX2
  if (cpu_has_avx2_fma()) return avx2_kernels_impl();
#endif
  return nullptr;
}

const KernelTable& active_kernels() {
  static const KernelTable* table = resolve();
  return *table;
}

}  // namespace isochron::num
