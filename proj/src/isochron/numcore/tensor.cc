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

#include "isochron/numcore/tensor.h"

#include <algorithm>

#include "isochron/common/error.h"

namespace isochron::num {

int64_t shape_size(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    ISO_CHECK_ARG(d >= 0, "negative dimension in shape " << shape_to_string(shape));
    n *= d;
  }
  return n;
}

std::string shape_to_string(const std::vector<int64_t>& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  s += "]";
  return s;
}

Tensor Tensor::zeros(std::vector<int64_t> shape, bool requires_grad) {
  auto impl = std::make_shared<Impl>();
  int64_t n = shape_size(shape);
  impl->shape = std::move(shape);
  impl->data.assign(static_cast<size_t>(n), 0.0f);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::full(std::vector<int64_t> shape, float value,
                    bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
  return t;
}

Tensor Tensor::from_data(std::vector<int64_t> shape, std::vector<float> data,
                         bool requires_grad) {
  int64_t n = shape_size(shape);
  ISO_CHECK_ARG(static_cast<size_t>(n) == data.size(),
                "from_data: shape " << shape_to_string(shape) << " wants " << n
                                    << " elements, got " << data.size());
  auto impl = std::make_shared<Impl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(float value, bool requires_grad) {
  return from_data({}, {value}, requires_grad);
}

const std::vector<int64_t>& Tensor::shape() const {
  ISO_CHECK_ARG(defined(), "operation on an undefined tensor");
  return impl_->shape;
}

int64_t Tensor::dim(int i) const {
  const auto& s = shape();
  ISO_CHECK_ARG(i >= 0 && static_cast<size_t>(i) < s.size(),
                "dim " << i << " out of range for shape " << shape_str());
  return s[static_cast<size_t>(i)];
}

int64_t Tensor::size() const {
  ISO_CHECK_ARG(defined(), "operation on an undefined tensor");
  return static_cast<int64_t>(impl_->data.size());
}

std::string Tensor::shape_str() const { return shape_to_string(shape()); }

const float* Tensor::data() const {
  ISO_CHECK_ARG(defined(), "operation on an undefined tensor");
  return impl_->data.data();
}

float* Tensor::data() {
  ISO_CHECK_ARG(defined(), "operation on an undefined tensor");
  return impl_->data.data();
}

float Tensor::item() const {
  ISO_CHECK_ARG(size() == 1, "item() on tensor of shape " << shape_str());
  return impl_->data[0];
}

bool Tensor::requires_grad() const {
  return defined() && impl_->requires_grad;
}

void Tensor::set_requires_grad(bool v) {
  ISO_CHECK_ARG(defined(), "operation on an undefined tensor");
  impl_->requires_grad = v;
}

bool Tensor::has_grad() const { return defined() && !impl_->grad.empty(); }

const float* Tensor::grad() const {
  ISO_CHECK_ARG(has_grad(), "grad() on tensor without gradient");
  return impl_->grad.data();
}

float* Tensor::mutable_grad() {
  ISO_CHECK_ARG(defined(), "operation on an undefined tensor");
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0f);
  return impl_->grad.data();
}

void Tensor::zero_grad() {
  ISO_CHECK_ARG(defined(), "operation on an undefined tensor");
  std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0f);
}

}  // namespace isochron::num
