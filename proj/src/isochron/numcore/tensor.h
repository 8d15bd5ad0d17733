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

#ifndef ISOCHRON_NUMCORE_TENSOR_H_
#define ISOCHRON_NUMCORE_TENSOR_H_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace isochron::num {

// Dense row-major float tensor. Copying a Tensor copies the handle, not the
// storage; the handle identity is what the autodiff tape tracks. Rank 0 is a
// scalar (size 1).
class Tensor {
 public:
  struct Impl {
    std::vector<int64_t> shape;
    std::vector<float> data;
    std::vector<float> grad;  // empty until first accumulation
    bool requires_grad = false;
  };

  Tensor() = default;

  static Tensor zeros(std::vector<int64_t> shape, bool requires_grad = false);
  static Tensor full(std::vector<int64_t> shape, float value,
                     bool requires_grad = false);
  static Tensor from_data(std::vector<int64_t> shape, std::vector<float> data,
                          bool requires_grad = false);
  static Tensor scalar(float value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int64_t>& shape() const;
  int rank() const { return static_cast<int>(shape().size()); }
  int64_t dim(int i) const;
  int64_t size() const;
  std::string shape_str() const;

  const float* data() const;
  float* data();
  float item() const;  // requires size() == 1

  bool requires_grad() const;
  void set_requires_grad(bool v);

  // Persistent gradient, filled by Graph::backward in accumulate mode.
  bool has_grad() const;
  const float* grad() const;
  float* mutable_grad();  // allocates zeros on first use
  void zero_grad();

  const std::shared_ptr<Impl>& impl() const { return impl_; }
  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<Impl> impl_;
};

int64_t shape_size(const std::vector<int64_t>& shape);
std::string shape_to_string(const std::vector<int64_t>& shape);

}  // namespace isochron::num

#endif  // ISOCHRON_NUMCORE_TENSOR_H_
