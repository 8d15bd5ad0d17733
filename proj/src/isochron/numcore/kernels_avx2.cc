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

// AVX2+FMA kernels. Compiled with -mavx2 -mfma in this translation unit
// only; selection happens at runtime (see kernels_dispatch.cc). Each kernel
// reproduces its scalar reference bit for bit: reductions run in double
// where a float*float product is exact, so _mm256_fmadd_pd equals the scalar
// mul-then-add, and tails reuse the scalar per-lane expressions.

#include <algorithm>
#include <cstddef>
#include <limits>

#include <immintrin.h>

#include "isochron/numcore/kernels.h"

namespace isochron::num {
namespace {

inline __m256d cvt4(const float* p) {
  return _mm256_cvtps_pd(_mm_loadu_ps(p));
}

inline void store4(float* p, __m256d v) {
  _mm_storeu_ps(p, _mm256_cvtpd_ps(v));
}

void k_add(float* out, const float* a, const float* b, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(a + i),
                                            _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void k_sub(float* out, const float* a, const float* b, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_sub_ps(_mm256_loadu_ps(a + i),
                                            _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void k_mul(float* out, const float* a, const float* b, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(a + i),
                                            _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void k_scale(float* out, const float* x, double s, size_t n) {
  __m256d sv = _mm256_set1_pd(s);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) store4(out + i, _mm256_mul_pd(cvt4(x + i), sv));
  for (; i < n; ++i)
    out[i] = static_cast<float>(static_cast<double>(x[i]) * s);
}

void k_sub_scalar(float* out, const float* x, double s, size_t n) {
  __m256d sv = _mm256_set1_pd(s);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) store4(out + i, _mm256_sub_pd(cvt4(x + i), sv));
  for (; i < n; ++i)
    out[i] = static_cast<float>(static_cast<double>(x[i]) - s);
}

void k_div_by(float* out, const float* x, double z, size_t n) {
  __m256d zv = _mm256_set1_pd(z);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) store4(out + i, _mm256_div_pd(cvt4(x + i), zv));
  for (; i < n; ++i)
    out[i] = static_cast<float>(static_cast<double>(x[i]) / z);
}

void k_axpy(float* y, float a, const float* x, size_t n) {
  __m256 av = _mm256_set1_ps(a);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    // Separate mul and add: the scalar reference rounds the product.
    __m256 p = _mm256_mul_ps(av, _mm256_loadu_ps(x + i));
    _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), p));
  }
  for (; i < n; ++i) {
    float p = a * x[i];
    y[i] = y[i] + p;
  }
}

void k_relu(float* out, const float* x, size_t n) {
  __m256 zero = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
  for (; i < n; ++i) out[i] = std::max(x[i], 0.0f);
}

void k_add_bias(float* out, const float* x, const float* bias, size_t rows,
                size_t cols) {
  for (size_t r = 0; r < rows; ++r)
    k_add(out + r * cols, x + r * cols, bias, cols);
}

void k_norm_affine(float* out, const float* x, const float* gain,
                   const float* bias, size_t n, double mean, double inv_std) {
  __m256d mv = _mm256_set1_pd(mean);
  __m256d iv = _mm256_set1_pd(inv_std);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d centered = _mm256_sub_pd(cvt4(x + i), mv);
    __m128 normed = _mm256_cvtpd_ps(_mm256_mul_pd(centered, iv));
    __m128 scaled = _mm_mul_ps(normed, _mm_loadu_ps(gain + i));
    _mm_storeu_ps(out + i, _mm_add_ps(scaled, _mm_loadu_ps(bias + i)));
  }
  for (; i < n; ++i) {
    float normed =
        static_cast<float>((static_cast<double>(x[i]) - mean) * inv_std);
    float scaled = normed * gain[i];
    out[i] = scaled + bias[i];
  }
}

double k_dot(const float* a, const float* b, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(cvt4(a + i), cvt4(b + i), acc);
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  for (size_t j = 0; i < n; ++i, ++j)
    lane[j] += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double k_sum(const float* x, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, cvt4(x + i));
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  for (size_t j = 0; i < n; ++i, ++j) lane[j] += static_cast<double>(x[i]);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double k_sumsq_diff(const float* x, size_t n, double mean) {
  __m256d mv = _mm256_set1_pd(mean);
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(cvt4(x + i), mv);
    // mul + add, not fma: d*d is not exact in double, and the scalar
    // reference rounds the square before accumulating.
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  for (size_t j = 0; i < n; ++i, ++j) {
    double d = static_cast<double>(x[i]) - mean;
    double sq = d * d;
    lane[j] += sq;
  }
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

float k_vmax(const float* x, size_t n) {
  __m256 acc = _mm256_set1_ps(-std::numeric_limits<float>::infinity());
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    acc = _mm256_max_ps(acc, _mm256_loadu_ps(x + i));
  alignas(32) float lane[8];
  _mm256_store_ps(lane, acc);
  for (size_t j = 0; i < n; ++i, ++j) lane[j] = std::max(lane[j], x[i]);
  float m01 = std::max(lane[0], lane[1]);
  float m23 = std::max(lane[2], lane[3]);
  float m45 = std::max(lane[4], lane[5]);
  float m67 = std::max(lane[6], lane[7]);
  return std::max(std::max(m01, m23), std::max(m45, m67));
}

// One output row of a*b: orow[j] = sum_l arow[l] * b[l*n + j].
void mm_nn_row1(const float* arow, const float* b, float* orow, size_t n,
                size_t k) {
  size_t j = 0;
  for (; j + 16 <= n; j += 16) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    for (size_t l = 0; l < k; ++l) {
      __m256d av = _mm256_set1_pd(static_cast<double>(arow[l]));
      const float* bp = b + l * n + j;
      acc0 = _mm256_fmadd_pd(av, cvt4(bp), acc0);
      acc1 = _mm256_fmadd_pd(av, cvt4(bp + 4), acc1);
      acc2 = _mm256_fmadd_pd(av, cvt4(bp + 8), acc2);
      acc3 = _mm256_fmadd_pd(av, cvt4(bp + 12), acc3);
    }
    store4(orow + j, acc0);
    store4(orow + j + 4, acc1);
    store4(orow + j + 8, acc2);
    store4(orow + j + 12, acc3);
  }
  for (; j + 4 <= n; j += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (size_t l = 0; l < k; ++l)
      acc = _mm256_fmadd_pd(_mm256_set1_pd(static_cast<double>(arow[l])),
                            cvt4(b + l * n + j), acc);
    store4(orow + j, acc);
  }
  for (; j < n; ++j) {
    double acc = 0.0;
    for (size_t l = 0; l < k; ++l)
      acc += static_cast<double>(arow[l]) * static_cast<double>(b[l * n + j]);
    orow[j] = static_cast<float>(acc);
  }
}

// Four output rows at once; a_rows[r] points at source row r.
void mm_nn_rows4(const float* const a_rows[4], const float* b,
                 float* const o_rows[4], size_t n, size_t k) {
  size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    __m256d acc00 = _mm256_setzero_pd(), acc01 = _mm256_setzero_pd();
    __m256d acc10 = _mm256_setzero_pd(), acc11 = _mm256_setzero_pd();
    __m256d acc20 = _mm256_setzero_pd(), acc21 = _mm256_setzero_pd();
    __m256d acc30 = _mm256_setzero_pd(), acc31 = _mm256_setzero_pd();
    for (size_t l = 0; l < k; ++l) {
      const float* bp = b + l * n + j;
      __m256d b0 = cvt4(bp);
      __m256d b1 = cvt4(bp + 4);
      __m256d av;
      av = _mm256_set1_pd(static_cast<double>(a_rows[0][l]));
      acc00 = _mm256_fmadd_pd(av, b0, acc00);
      acc01 = _mm256_fmadd_pd(av, b1, acc01);
      av = _mm256_set1_pd(static_cast<double>(a_rows[1][l]));
      acc10 = _mm256_fmadd_pd(av, b0, acc10);
      acc11 = _mm256_fmadd_pd(av, b1, acc11);
      av = _mm256_set1_pd(static_cast<double>(a_rows[2][l]));
      acc20 = _mm256_fmadd_pd(av, b0, acc20);
      acc21 = _mm256_fmadd_pd(av, b1, acc21);
      av = _mm256_set1_pd(static_cast<double>(a_rows[3][l]));
      acc30 = _mm256_fmadd_pd(av, b0, acc30);
      acc31 = _mm256_fmadd_pd(av, b1, acc31);
    }
    store4(o_rows[0] + j, acc00);
    store4(o_rows[0] + j + 4, acc01);
    store4(o_rows[1] + j, acc10);
    store4(o_rows[1] + j + 4, acc11);
    store4(o_rows[2] + j, acc20);
    store4(o_rows[2] + j + 4, acc21);
    store4(o_rows[3] + j, acc30);
    store4(o_rows[3] + j + 4, acc31);
  }
  for (; j < n; ++j) {
    for (size_t r = 0; r < 4; ++r) {
      double acc = 0.0;
      for (size_t l = 0; l < k; ++l)
        acc += static_cast<double>(a_rows[r][l]) *
               static_cast<double>(b[l * n + j]);
      o_rows[r][j] = static_cast<float>(acc);
    }
  }
}

void k_matmul_nn(const float* a, const float* b, float* out, size_t m,
                 size_t n, size_t k) {
  size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const float* a_rows[4] = {a + i * k, a + (i + 1) * k, a + (i + 2) * k,
                              a + (i + 3) * k};
    float* o_rows[4] = {out + i * n, out + (i + 1) * n, out + (i + 2) * n,
                        out + (i + 3) * n};
    mm_nn_rows4(a_rows, b, o_rows, n, k);
  }
  for (; i < m; ++i) mm_nn_row1(a + i * k, b, out + i * n, n, k);
}

void k_matmul_nt(const float* a, const float* b, float* out, size_t m,
                 size_t n, size_t k) {
  for (size_t i = 0; i < m; ++i) {
    const float* arow = a + i * k;
    float* orow = out + i * n;
    size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const float* b0 = b + j * k;
      const float* b1 = b0 + k;
      const float* b2 = b1 + k;
      const float* b3 = b2 + k;
      __m256d acc0 = _mm256_setzero_pd();
      __m256d acc1 = _mm256_setzero_pd();
      __m256d acc2 = _mm256_setzero_pd();
      __m256d acc3 = _mm256_setzero_pd();
      size_t l = 0;
      for (; l + 4 <= k; l += 4) {
        __m256d av = cvt4(arow + l);
        acc0 = _mm256_fmadd_pd(av, cvt4(b0 + l), acc0);
        acc1 = _mm256_fmadd_pd(av, cvt4(b1 + l), acc1);
        acc2 = _mm256_fmadd_pd(av, cvt4(b2 + l), acc2);
        acc3 = _mm256_fmadd_pd(av, cvt4(b3 + l), acc3);
      }
      alignas(32) double lane[4][4];
      _mm256_store_pd(lane[0], acc0);
      _mm256_store_pd(lane[1], acc1);
      _mm256_store_pd(lane[2], acc2);
      _mm256_store_pd(lane[3], acc3);
      for (size_t jj = 0; jj < 4; ++jj) {
        const float* brow = b + (j + jj) * k;
        size_t li = l;
        for (size_t t = 0; li < k; ++li, ++t)
          lane[jj][t] += static_cast<double>(arow[li]) *
                         static_cast<double>(brow[li]);
        orow[j + jj] = static_cast<float>((lane[jj][0] + lane[jj][1]) +
                                          (lane[jj][2] + lane[jj][3]));
      }
    }
    for (; j < n; ++j) orow[j] = static_cast<float>(k_dot(arow, b + j * k, k));
  }
}

void k_matmul_tn(const float* a, const float* b, float* out, size_t m,
                 size_t n, size_t k) {
  size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    size_t j = 0;
    for (; j + 8 <= n; j += 8) {
      __m256d acc00 = _mm256_setzero_pd(), acc01 = _mm256_setzero_pd();
      __m256d acc10 = _mm256_setzero_pd(), acc11 = _mm256_setzero_pd();
      __m256d acc20 = _mm256_setzero_pd(), acc21 = _mm256_setzero_pd();
      __m256d acc30 = _mm256_setzero_pd(), acc31 = _mm256_setzero_pd();
      for (size_t l = 0; l < k; ++l) {
        const float* ap = a + l * m + i;
        const float* bp = b + l * n + j;
        __m256d b0 = cvt4(bp);
        __m256d b1 = cvt4(bp + 4);
        __m256d av;
        av = _mm256_set1_pd(static_cast<double>(ap[0]));
        acc00 = _mm256_fmadd_pd(av, b0, acc00);
        acc01 = _mm256_fmadd_pd(av, b1, acc01);
        av = _mm256_set1_pd(static_cast<double>(ap[1]));
        acc10 = _mm256_fmadd_pd(av, b0, acc10);
        acc11 = _mm256_fmadd_pd(av, b1, acc11);
        av = _mm256_set1_pd(static_cast<double>(ap[2]));
        acc20 = _mm256_fmadd_pd(av, b0, acc20);
        acc21 = _mm256_fmadd_pd(av, b1, acc21);
        av = _mm256_set1_pd(static_cast<double>(ap[3]));
        acc30 = _mm256_fmadd_pd(av, b0, acc30);
        acc31 = _mm256_fmadd_pd(av, b1, acc31);
      }
      store4(out + (i + 0) * n + j, acc00);
      store4(out + (i + 0) * n + j + 4, acc01);
      store4(out + (i + 1) * n + j, acc10);
      store4(out + (i + 1) * n + j + 4, acc11);
      store4(out + (i + 2) * n + j, acc20);
      store4(out + (i + 2) * n + j + 4, acc21);
      store4(out + (i + 3) * n + j, acc30);
      store4(out + (i + 3) * n + j + 4, acc31);
    }
    for (; j < n; ++j) {
      for (size_t r = 0; r < 4; ++r) {
        double acc = 0.0;
        for (size_t l = 0; l < k; ++l)
          acc += static_cast<double>(a[l * m + i + r]) *
                 static_cast<double>(b[l * n + j]);
        out[(i + r) * n + j] = static_cast<float>(acc);
      }
    }
  }
  for (; i < m; ++i) {
    for (size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (size_t l = 0; l < k; ++l)
        acc += static_cast<double>(a[l * m + i]) *
               static_cast<double>(b[l * n + j]);
      out[i * n + j] = static_cast<float>(acc);
    }
  }
}

}  // namespace

const KernelTable* avx2_kernels_impl() {
  static const KernelTable table = {
      "avx2",       k_add,    k_sub, k_mul,        k_scale,
      k_sub_scalar, k_div_by, k_axpy, k_relu,      k_add_bias,
      k_norm_affine, k_dot,   k_sum, k_sumsq_diff, k_vmax,
      k_matmul_nn,  k_matmul_nt, k_matmul_tn,
  };
  return &table;
}

}  // namespace isochron::num
