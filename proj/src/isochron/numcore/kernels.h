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

#ifndef ISOCHRON_NUMCORE_KERNELS_H_
#define ISOCHRON_NUMCORE_KERNELS_H_

#include <cstddef>

// Low-level float kernels behind all tensor math. Two implementations exist,
// a scalar reference and an AVX2 variant, selected once at startup. The two
// are contracted to produce bitwise-identical outputs for finite inputs:
//
//  * every reduction accumulates in double; a float*float product is exact
//    in double, so the AVX2 fused multiply-add equals mul-then-add bit for
//    bit (sumsq_diff is the exception: its double*double square is inexact,
//    so both paths use separate mul and add there);
//  * dot/sum/sumsq_diff/vmax keep 4 (8 for vmax) independent lane
//    accumulators in both paths, fold tails into the leading lanes, and
//    combine with the fixed tree (l0+l1)+(l2+l3);
//  * matmuls accumulate each output element sequentially over the
//    contraction index in double and narrow once at the end, which makes
//    lane layout irrelevant to the result.
//
// Inputs are assumed finite except where noted; vmax tolerates -inf entries
// (used for masked logits).

namespace isochron::num {

struct KernelTable {
  const char* name;

  // Elementwise; out may alias a and/or b.
  void (*add)(float* out, const float* a, const float* b, size_t n);
  void (*sub)(float* out, const float* a, const float* b, size_t n);
  void (*mul)(float* out, const float* a, const float* b, size_t n);
  // out[i] = (float)((double)x[i] * s)
  void (*scale)(float* out, const float* x, double s, size_t n);
  // out[i] = (float)((double)x[i] - s)
  void (*sub_scalar)(float* out, const float* x, double s, size_t n);
  // out[i] = (float)((double)x[i] / z)
  void (*div_by)(float* out, const float* x, double z, size_t n);
  // y[i] = y[i] + a * x[i], all in float (single rounding per op, no fma)
  void (*axpy)(float* y, float a, const float* x, size_t n);
  // out[i] = max(x[i], 0.0f)
  void (*relu)(float* out, const float* x, size_t n);
  // out[r*cols + c] = x[r*cols + c] + bias[c]
  void (*add_bias)(float* out, const float* x, const float* bias, size_t rows,
                   size_t cols);
  // out[i] = (float)(((double)x[i] - mean) * inv_std) * gain[i] + bias[i]
  void (*norm_affine)(float* out, const float* x, const float* gain,
                      const float* bias, size_t n, double mean, double inv_std);

  double (*dot)(const float* a, const float* b, size_t n);
  double (*sum)(const float* x, size_t n);
  // sum over i of ((double)x[i] - mean)^2
  double (*sumsq_diff)(const float* x, size_t n, double mean);
  float (*vmax)(const float* x, size_t n);  // n >= 1

  // out[m x n] = a[m x k] * b[k x n]
  void (*matmul_nn)(const float* a, const float* b, float* out, size_t m,
                    size_t n, size_t k);
  // out[m x n] = a[m x k] * b[n x k]^T
  void (*matmul_nt)(const float* a, const float* b, float* out, size_t m,
                    size_t n, size_t k);
  // out[m x n] = a[k x m]^T * b[k x n]
  void (*matmul_tn)(const float* a, const float* b, float* out, size_t m,
                    size_t n, size_t k);
};

// The table selected at startup: ISOCHRON_SIMD=scalar|avx2|auto (default
// auto picks AVX2 when the CPU supports AVX2+FMA and the build has the
// AVX2 translation unit).
const KernelTable& active_kernels();

const KernelTable& scalar_kernels();
// Null when the build or CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

namespace kernels {

inline void add(float* out, const float* a, const float* b, size_t n) {
  active_kernels().add(out, a, b, n);
}
inline void sub(float* out, const float* a, const float* b, size_t n) {
  active_kernels().sub(out, a, b, n);
}
inline void mul(float* out, const float* a, const float* b, size_t n) {
  active_kernels().mul(out, a, b, n);
}
inline void scale(float* out, const float* x, double s, size_t n) {
  active_kernels().scale(out, x, s, n);
}
inline void sub_scalar(float* out, const float* x, double s, size_t n) {
  active_kernels().sub_scalar(out, x, s, n);
}
inline void div_by(float* out, const float* x, double z, size_t n) {
  active_kernels().div_by(out, x, z, n);
}
inline void axpy(float* y, float a, const float* x, size_t n) {
  active_kernels().axpy(y, a, x, n);
}
inline void relu(float* out, const float* x, size_t n) {
  active_kernels().relu(out, x, n);
}
inline void add_bias(float* out, const float* x, const float* bias,
                     size_t rows, size_t cols) {
  active_kernels().add_bias(out, x, bias, rows, cols);
}
inline void norm_affine(float* out, const float* x, const float* gain,
                        const float* bias, size_t n, double mean,
                        double inv_std) {
  active_kernels().norm_affine(out, x, gain, bias, n, mean, inv_std);
}
inline double dot(const float* a, const float* b, size_t n) {
  return active_kernels().dot(a, b, n);
}
inline double sum(const float* x, size_t n) {
  return active_kernels().sum(x, n);
}
inline double sumsq_diff(const float* x, size_t n, double mean) {
  return active_kernels().sumsq_diff(x, n, mean);
}
inline float vmax(const float* x, size_t n) {
  return active_kernels().vmax(x, n);
}
inline void matmul_nn(const float* a, const float* b, float* out, size_t m,
                      size_t n, size_t k) {
  active_kernels().matmul_nn(a, b, out, m, n, k);
}
inline void matmul_nt(const float* a, const float* b, float* out, size_t m,
                      size_t n, size_t k) {
  active_kernels().matmul_nt(a, b, out, m, n, k);
}
inline void matmul_tn(const float* a, const float* b, float* out, size_t m,
                      size_t n, size_t k) {
  active_kernels().matmul_tn(a, b, out, m, n, k);
}

}  // namespace kernels

}  // namespace isochron::num

#endif  // ISOCHRON_NUMCORE_KERNELS_H_
