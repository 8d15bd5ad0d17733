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

#include "isochron/numcore/graph.h"

#include "isochron/common/error.h"
#include "isochron/numcore/kernels.h"

namespace isochron::num {

namespace {
thread_local Graph* t_current = nullptr;
}  // namespace

Graph::Scope::Scope(Graph& g) : prev_(t_current) { t_current = &g; }

Graph::Scope::~Scope() { t_current = prev_; }

Graph* Graph::current() { return t_current; }

bool Graph::needs_grad(const Tensor& t) const {
  if (!t.defined()) return false;
  if (t.requires_grad()) return true;
  return produced_.count(t.impl().get()) != 0;
}

void Graph::record(const Tensor& output, std::function<void(Graph&)> backward) {
  ISO_CHECK(!ran_backward_, "graph already ran backward; recording is closed");
  produced_.insert(output.impl().get());
  nodes_.push_back(Node{output, std::move(backward)});
}

const float* Graph::grad_of(const Tensor& t) const {
  auto it = grads_.find(t.impl().get());
  return it == grads_.end() ? nullptr : it->second.data();
}

float* Graph::grad_sink(const Tensor& t) {
  auto [it, inserted] = grads_.try_emplace(t.impl().get());
  if (inserted) {
    it->second.assign(static_cast<size_t>(t.size()), 0.0f);
    grad_targets_.push_back(t);
  }
  return it->second.data();
}

void Graph::backward(const Tensor& loss, bool accumulate_into_tensors) {
  ISO_CHECK(!ran_backward_, "graph supports a single backward pass");
  ISO_CHECK_ARG(loss.defined() && loss.size() == 1,
                "backward expects a scalar loss");
  ran_backward_ = true;
  grad_sink(loss)[0] = 1.0f;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (grads_.find(it->output.impl().get()) == grads_.end())
      continue;  // no gradient flowed to this branch
    it->backward(*this);
  }
  if (!accumulate_into_tensors) return;
  for (Tensor& t : grad_targets_) {
    if (!t.requires_grad()) continue;
    const float* src = grads_.at(t.impl().get()).data();
    kernels::add(t.mutable_grad(), t.mutable_grad(), src,
                 static_cast<size_t>(t.size()));
  }
}

void backward(const Tensor& loss) {
  Graph* g = Graph::current();
  ISO_CHECK(g != nullptr, "backward() called without an active graph scope");
  g->backward(loss);
}

}  // namespace isochron::num
