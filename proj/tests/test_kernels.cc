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

#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include <doctest.h>

#include "isochron/common/rng.h"
#include "isochron/numcore/kernels.h"

using isochron::RandomStream;
using isochron::num::KernelTable;
using isochron::num::avx2_kernels;
using isochron::num::scalar_kernels;

namespace {

// Sizes chosen to exercise every tail length around the 4- and 8-wide
// vector loops.
const size_t kSizes[] = {1, 2, 3, 4, 5, 6, 7, 8, 9, 11, 12, 13,
                         15, 16, 17, 31, 32, 33, 63, 64, 100, 257};

std::vector<float> random_vec(RandomStream& rng, size_t n, double lo = -2.0,
                              double hi = 2.0) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(lo, hi));
  return v;
}

bool bitwise_equal(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

long double ref_dot(const std::vector<float>& a, const std::vector<float>& b) {
  long double s = 0.0L;
  for (size_t i = 0; i < a.size(); ++i)
    s += static_cast<long double>(a[i]) * static_cast<long double>(b[i]);
  return s;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("reductions match a long-double oracle") {
  RandomStream rng(7);
  const KernelTable& k = scalar_kernels();
  for (size_t n : kSizes) {
    auto a = random_vec(rng, n);
    auto b = random_vec(rng, n);
    long double want = ref_dot(a, b);
    double got = k.dot(a.data(), b.data(), n);
    CHECK(std::fabs(static_cast<double>(want) - got) <=
          1e-10 * (1.0 + std::fabs(static_cast<double>(want))));

    long double wsum = 0.0L;
    for (float x : a) wsum += static_cast<long double>(x);
    CHECK(std::fabs(static_cast<double>(wsum) - k.sum(a.data(), n)) <=
          1e-10 * (1.0 + std::fabs(static_cast<double>(wsum))));

    double mean = k.sum(a.data(), n) / static_cast<double>(n);
    long double wsq = 0.0L;
    for (float x : a) {
      long double d = static_cast<long double>(x) - mean;
      wsq += d * d;
    }
    CHECK(std::fabs(static_cast<double>(wsq) -
                    k.sumsq_diff(a.data(), n, mean)) <=
          1e-10 * (1.0 + std::fabs(static_cast<double>(wsq))));

    float want_max = a[0];
    for (float x : a) want_max = std::max(want_max, x);
    CHECK(k.vmax(a.data(), n) == want_max);
  }
}

TEST_CASE("matmul matches a long-double oracle on random shapes") {
  RandomStream rng(11);
  const KernelTable& kt = scalar_kernels();
  for (int rep = 0; rep < 30; ++rep) {
    size_t m = static_cast<size_t>(rng.uniform_int(1, 9));
    size_t n = static_cast<size_t>(rng.uniform_int(1, 9));
    size_t k = static_cast<size_t>(rng.uniform_int(1, 9));
    auto a = random_vec(rng, m * k);
    auto b = random_vec(rng, k * n);
    std::vector<float> out(m * n);

    kt.matmul_nn(a.data(), b.data(), out.data(), m, n, k);
    for (size_t i = 0; i < m; ++i) {
      for (size_t j = 0; j < n; ++j) {
        long double want = 0.0L;
        for (size_t l = 0; l < k; ++l)
          want += static_cast<long double>(a[i * k + l]) *
                  static_cast<long double>(b[l * n + j]);
        CHECK(out[i * n + j] ==
              doctest::Approx(static_cast<double>(want)).epsilon(1e-5));
      }
    }

    // nt: same product with b stored transposed.
    std::vector<float> bt(n * k);
    for (size_t l = 0; l < k; ++l)
      for (size_t j = 0; j < n; ++j) bt[j * k + l] = b[l * n + j];
    std::vector<float> out_nt(m * n);
    kt.matmul_nt(a.data(), bt.data(), out_nt.data(), m, n, k);
    CHECK(bitwise_equal(out, out_nt));

    // tn: same product with a stored transposed.
    std::vector<float> at(k * m);
    for (size_t i = 0; i < m; ++i)
      for (size_t l = 0; l < k; ++l) at[l * m + i] = a[i * k + l];
    std::vector<float> out_tn(m * n);
    kt.matmul_tn(at.data(), b.data(), out_tn.data(), m, n, k);
    for (size_t i = 0; i < m * n; ++i)
      CHECK(out_tn[i] == doctest::Approx(out[i]).epsilon(1e-5));
  }
}

TEST_CASE("matmul identity and hand-computed case") {
  const KernelTable& kt = scalar_kernels();
  // [1 2; 3 4] * [5 6; 7 8] = [19 22; 43 50]
  std::vector<float> a = {1, 2, 3, 4}, b = {5, 6, 7, 8}, out(4);
  kt.matmul_nn(a.data(), b.data(), out.data(), 2, 2, 2);
  CHECK(out == std::vector<float>{19, 22, 43, 50});

  std::vector<float> eye = {1, 0, 0, 1};
  kt.matmul_nn(a.data(), eye.data(), out.data(), 2, 2, 2);
  CHECK(out == a);
}

TEST_CASE("scalar and avx2 kernels agree bitwise") {
  const KernelTable* avx2 = avx2_kernels();
  if (!avx2) {
    MESSAGE("AVX2 unavailable; equivalence suite skipped");
    return;
  }
  const KernelTable& sc = scalar_kernels();
  RandomStream rng(23);

  for (size_t n : kSizes) {
    auto a = random_vec(rng, n);
    auto b = random_vec(rng, n);

    std::vector<float> o1(n), o2(n);
    sc.add(o1.data(), a.data(), b.data(), n);
    avx2->add(o2.data(), a.data(), b.data(), n);
    CHECK(bitwise_equal(o1, o2));

    sc.sub(o1.data(), a.data(), b.data(), n);
    avx2->sub(o2.data(), a.data(), b.data(), n);
    CHECK(bitwise_equal(o1, o2));

    sc.mul(o1.data(), a.data(), b.data(), n);
    avx2->mul(o2.data(), a.data(), b.data(), n);
    CHECK(bitwise_equal(o1, o2));

    double s = rng.uniform(-3.0, 3.0);
    sc.scale(o1.data(), a.data(), s, n);
    avx2->scale(o2.data(), a.data(), s, n);
    CHECK(bitwise_equal(o1, o2));

    sc.sub_scalar(o1.data(), a.data(), s, n);
    avx2->sub_scalar(o2.data(), a.data(), s, n);
    CHECK(bitwise_equal(o1, o2));

    double z = rng.uniform(0.5, 4.0);
    sc.div_by(o1.data(), a.data(), z, n);
    avx2->div_by(o2.data(), a.data(), z, n);
    CHECK(bitwise_equal(o1, o2));

    o1 = b;
    o2 = b;
    float alpha = static_cast<float>(rng.uniform(-2.0, 2.0));
    sc.axpy(o1.data(), alpha, a.data(), n);
    avx2->axpy(o2.data(), alpha, a.data(), n);
    CHECK(bitwise_equal(o1, o2));

    sc.relu(o1.data(), a.data(), n);
    avx2->relu(o2.data(), a.data(), n);
    CHECK(bitwise_equal(o1, o2));

    double d1 = sc.dot(a.data(), b.data(), n);
    double d2 = avx2->dot(a.data(), b.data(), n);
    CHECK(std::memcmp(&d1, &d2, sizeof(double)) == 0);

    d1 = sc.sum(a.data(), n);
    d2 = avx2->sum(a.data(), n);
    CHECK(std::memcmp(&d1, &d2, sizeof(double)) == 0);

    double mean = sc.sum(a.data(), n) / static_cast<double>(n);
    d1 = sc.sumsq_diff(a.data(), n, mean);
    d2 = avx2->sumsq_diff(a.data(), n, mean);
    CHECK(std::memcmp(&d1, &d2, sizeof(double)) == 0);

    float m1 = sc.vmax(a.data(), n);
    float m2 = avx2->vmax(a.data(), n);
    CHECK(std::memcmp(&m1, &m2, sizeof(float)) == 0);
  }
}

TEST_CASE("scalar and avx2 vmax agree with -inf entries") {
  const KernelTable* avx2 = avx2_kernels();
  if (!avx2) return;
  const KernelTable& sc = scalar_kernels();
  RandomStream rng(29);
  for (size_t n : kSizes) {
    auto a = random_vec(rng, n);
    // Mask a random subset to -inf, keeping at least one finite entry.
    for (size_t i = 0; i < n; ++i)
      if (i != 0 && rng.next_unit() < 0.4)
        a[i] = -std::numeric_limits<float>::infinity();
    float m1 = sc.vmax(a.data(), n);
    float m2 = avx2->vmax(a.data(), n);
    CHECK(std::memcmp(&m1, &m2, sizeof(float)) == 0);
  }
}

TEST_CASE("scalar and avx2 row kernels agree bitwise") {
  const KernelTable* avx2 = avx2_kernels();
  if (!avx2) return;
  const KernelTable& sc = scalar_kernels();
  RandomStream rng(31);
  for (int rep = 0; rep < 20; ++rep) {
    size_t rows = static_cast<size_t>(rng.uniform_int(1, 7));
    size_t cols = static_cast<size_t>(rng.uniform_int(1, 40));
    auto x = random_vec(rng, rows * cols);
    auto bias = random_vec(rng, cols);
    std::vector<float> o1(rows * cols), o2(rows * cols);
    sc.add_bias(o1.data(), x.data(), bias.data(), rows, cols);
    avx2->add_bias(o2.data(), x.data(), bias.data(), rows, cols);
    CHECK(bitwise_equal(o1, o2));

    auto gain = random_vec(rng, cols);
    double mean = rng.uniform(-1.0, 1.0);
    double inv_std = rng.uniform(0.5, 2.0);
    sc.norm_affine(o1.data(), x.data(), gain.data(), bias.data(), cols, mean,
                   inv_std);
    avx2->norm_affine(o2.data(), x.data(), gain.data(), bias.data(), cols,
                      mean, inv_std);
    CHECK(std::memcmp(o1.data(), o2.data(), cols * sizeof(float)) == 0);
  }
}

TEST_CASE("scalar and avx2 matmuls agree bitwise across shapes") {
  const KernelTable* avx2 = avx2_kernels();
  if (!avx2) return;
  const KernelTable& sc = scalar_kernels();
  RandomStream rng(37);
  // Shape grid covers the 4-row blocking, the 8/16-column blocking and all
  // tail paths.
  const size_t dims[] = {1, 2, 3, 4, 5, 7, 8, 9, 16, 17, 33, 64};
  for (size_t m : dims) {
    for (size_t n : dims) {
      for (size_t k : {1ul, 3ul, 4ul, 5ul, 16ul, 64ul}) {
        auto a = random_vec(rng, m * k);
        auto b = random_vec(rng, k * n);
        std::vector<float> o1(m * n), o2(m * n);

        sc.matmul_nn(a.data(), b.data(), o1.data(), m, n, k);
        avx2->matmul_nn(a.data(), b.data(), o2.data(), m, n, k);
        CHECK(bitwise_equal(o1, o2));

        auto bt = random_vec(rng, n * k);
        sc.matmul_nt(a.data(), bt.data(), o1.data(), m, n, k);
        avx2->matmul_nt(a.data(), bt.data(), o2.data(), m, n, k);
        CHECK(bitwise_equal(o1, o2));

        auto at = random_vec(rng, k * m);
        sc.matmul_tn(at.data(), b.data(), o1.data(), m, n, k);
        avx2->matmul_tn(at.data(), b.data(), o2.data(), m, n, k);
        CHECK(bitwise_equal(o1, o2));
      }
    }
  }
}

TEST_CASE("active kernel table is one of the registered tables") {
  const KernelTable& active = isochron::num::active_kernels();
  bool is_scalar = &active == &scalar_kernels();
  bool is_avx2 = avx2_kernels() != nullptr && &active == avx2_kernels();
  CHECK((is_scalar || is_avx2));
  MESSAGE("active kernels: ", std::string(active.name));
}

}  // TEST_SUITE
