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

// Scalar reference kernels. These define the numeric contract; the AVX2
// variant must reproduce them bit for bit (see kernels.h).

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include "isochron/numcore/kernels.h"

namespace isochron::num {
namespace {

void k_add(float* out, const float* a, const float* b, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void k_sub(float* out, const float* a, const float* b, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void k_mul(float* out, const float* a, const float* b, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void k_scale(float* out, const float* x, double s, size_t n) {
  for (size_t i = 0; i < n; ++i)
    out[i] = static_cast<float>(static_cast<double>(x[i]) * s);
}

void k_sub_scalar(float* out, const float* x, double s, size_t n) {
  for (size_t i = 0; i < n; ++i)
    out[i] = static_cast<float>(static_cast<double>(x[i]) - s);
}

void k_div_by(float* out, const float* x, double z, size_t n) {
  for (size_t i = 0; i < n; ++i)
    out[i] = static_cast<float>(static_cast<double>(x[i]) / z);
}

void k_axpy(float* y, float a, const float* x, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    float p = a * x[i];
    y[i] = y[i] + p;
  }
}

void k_relu(float* out, const float* x, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = std::max(x[i], 0.0f);
}

void k_add_bias(float* out, const float* x, const float* bias, size_t rows,
                size_t cols) {
  for (size_t r = 0; r < rows; ++r) {
    const float* xr = x + r * cols;
    float* or_ = out + r * cols;
    for (size_t c = 0; c < cols; ++c) or_[c] = xr[c] + bias[c];
  }
}

void k_norm_affine(float* out, const float* x, const float* gain,
                   const float* bias, size_t n, double mean, double inv_std) {
  for (size_t i = 0; i < n; ++i) {
    float normed =
        static_cast<float>((static_cast<double>(x[i]) - mean) * inv_std);
    float scaled = normed * gain[i];
    out[i] = scaled + bias[i];
  }
}

double k_dot(const float* a, const float* b, size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    lane[0] += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    lane[1] += static_cast<double>(a[i + 1]) * static_cast<double>(b[i + 1]);
    lane[2] += static_cast<double>(a[i + 2]) * static_cast<double>(b[i + 2]);
    lane[3] += static_cast<double>(a[i + 3]) * static_cast<double>(b[i + 3]);
  }
  for (size_t j = 0; i < n; ++i, ++j)
    lane[j] += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double k_sum(const float* x, size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    lane[0] += static_cast<double>(x[i]);
    lane[1] += static_cast<double>(x[i + 1]);
    lane[2] += static_cast<double>(x[i + 2]);
    lane[3] += static_cast<double>(x[i + 3]);
  }
  for (size_t j = 0; i < n; ++i, ++j) lane[j] += static_cast<double>(x[i]);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double k_sumsq_diff(const float* x, size_t n, double mean) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (size_t j = 0; j < 4; ++j) {
      double d = static_cast<double>(x[i + j]) - mean;
      double sq = d * d;
      lane[j] += sq;
    }
  }
  for (size_t j = 0; i < n; ++i, ++j) {
    double d = static_cast<double>(x[i]) - mean;
    double sq = d * d;
    lane[j] += sq;
  }
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

float k_vmax(const float* x, size_t n) {
  float lane[8];
  for (auto& l : lane) l = -std::numeric_limits<float>::infinity();
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (size_t j = 0; j < 8; ++j) lane[j] = std::max(lane[j], x[i + j]);
  for (size_t j = 0; i < n; ++i, ++j) lane[j] = std::max(lane[j], x[i]);
  float m01 = std::max(lane[0], lane[1]);
  float m23 = std::max(lane[2], lane[3]);
  float m45 = std::max(lane[4], lane[5]);
  float m67 = std::max(lane[6], lane[7]);
  return std::max(std::max(m01, m23), std::max(m45, m67));
}

std::vector<double>& scratch_row(size_t n) {
  thread_local std::vector<double> buf;
  if (buf.size() < n) buf.resize(n);
  return buf;
}

void k_matmul_nn(const float* a, const float* b, float* out, size_t m,
                 size_t n, size_t k) {
  std::vector<double>& acc = scratch_row(n);
  for (size_t i = 0; i < m; ++i) {
    std::fill(acc.begin(), acc.begin() + n, 0.0);
    const float* arow = a + i * k;
    for (size_t l = 0; l < k; ++l) {
      const double av = static_cast<double>(arow[l]);
      const float* brow = b + l * n;
      for (size_t j = 0; j < n; ++j)
        acc[j] += av * static_cast<double>(brow[j]);
    }
    float* orow = out + i * n;
    for (size_t j = 0; j < n; ++j) orow[j] = static_cast<float>(acc[j]);
  }
}

void k_matmul_nt(const float* a, const float* b, float* out, size_t m,
                 size_t n, size_t k) {
  for (size_t i = 0; i < m; ++i) {
    const float* arow = a + i * k;
    float* orow = out + i * n;
    for (size_t j = 0; j < n; ++j)
      orow[j] = static_cast<float>(k_dot(arow, b + j * k, k));
  }
}

void k_matmul_tn(const float* a, const float* b, float* out, size_t m,
                 size_t n, size_t k) {
  std::vector<double>& acc = scratch_row(n);
  for (size_t i = 0; i < m; ++i) {
    std::fill(acc.begin(), acc.begin() + n, 0.0);
    for (size_t l = 0; l < k; ++l) {
      const double av = static_cast<double>(a[l * m + i]);
      const float* brow = b + l * n;
      for (size_t j = 0; j < n; ++j)
        acc[j] += av * static_cast<double>(brow[j]);
    }
    float* orow = out + i * n;
    for (size_t j = 0; j < n; ++j) orow[j] = static_cast<float>(acc[j]);
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table = {
      "scalar",     k_add,    k_sub, k_mul,        k_scale,
      k_sub_scalar, k_div_by, k_axpy, k_relu,      k_add_bias,
      k_norm_affine, k_dot,   k_sum, k_sumsq_diff, k_vmax,
      k_matmul_nn,  k_matmul_nt, k_matmul_tn,
  };
  return table;
}

}  // namespace isochron::num
