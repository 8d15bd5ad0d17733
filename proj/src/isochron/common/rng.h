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

#ifndef ISOCHRON_COMMON_RNG_H_
#define ISOCHRON_COMMON_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace isochron {

// Derives a child seed from a root seed and a stream name, so every random
// consumer (init, shuffling, dropout, synthesis) reads an independent,
// reproducible stream. FNV-1a over the name, mixed with the root through
// splitmix64 finalization.
uint64_t derive_seed(uint64_t root, std::string_view name);
uint64_t derive_seed(uint64_t root, std::string_view name, uint64_t index);

// Deterministic random stream. Distribution sampling is hand-rolled on top
// of mt19937_64 because the std:: distributions are implementation-defined
// and would tie corpora and weights to one standard library.
class RandomStream {
 public:
  explicit RandomStream(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double next_unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [lo, hi], inclusive, rejection-sampled (unbiased).
  int64_t uniform_int(int64_t lo, int64_t hi);

  double uniform(double a, double b) { return a + (b - a) * next_unit(); }

  // Standard normal via Box-Muller; the second variate of each pair is
  // cached so consecutive calls consume engine output predictably.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace isochron

#endif  // ISOCHRON_COMMON_RNG_H_
