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

#ifndef ISOCHRON_NUMCORE_GRAPH_H_
#define ISOCHRON_NUMCORE_GRAPH_H_

#include <functional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "isochron/numcore/tensor.h"

namespace isochron::num {

// Reverse-mode autodiff tape. Ops record themselves on the graph installed
// by Graph::Scope for the current thread; with no scope installed they run
// as pure computations. Gradient buffers live on the graph, so independent
// graphs on different threads never contend; backward() additionally
// accumulates into Tensor::mutable_grad() for tensors that require grad.
//
// A graph records one forward pass and supports one backward() call.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Installs a graph as the recording target for the current thread.
  class Scope {
   public:
    explicit Scope(Graph& g);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Graph* prev_;
  };

  static Graph* current();

  // True when a backward pass will need this tensor's gradient: either it
  // requires grad itself or it was produced by a recorded op.
  bool needs_grad(const Tensor& t) const;

  // Records one op. Call only when at least one input needs grad. The
  // closure reads grad_of(output) and accumulates into grad_sink(input)
  // for every input it wants(...).
  void record(const Tensor& output, std::function<void(Graph&)> backward);

  // Runs the reverse sweep from a scalar loss. When accumulate_into_tensors
  // is set (the default), tensors with requires_grad receive their gradient
  // in Tensor::mutable_grad() as well.
  void backward(const Tensor& loss, bool accumulate_into_tensors = true);

  // Graph-local gradient of t after backward(); null when no gradient
  // flowed to it.
  const float* grad_of(const Tensor& t) const;

  // Zero-initialized graph-local gradient buffer for t (for closures).
  float* grad_sink(const Tensor& t);

  bool wants(const Tensor& t) const { return needs_grad(t); }

  size_t num_ops() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor output;
    std::function<void(Graph&)> backward;
  };

  std::vector<Node> nodes_;
  std::unordered_set<const Tensor::Impl*> produced_;
  std::unordered_map<const Tensor::Impl*, std::vector<float>> grads_;
  std::vector<Tensor> grad_targets_;
  bool ran_backward_ = false;
};

// Convenience wrapper over Graph::current()->backward(loss).
void backward(const Tensor& loss);

}  // namespace isochron::num

#endif  // ISOCHRON_NUMCORE_GRAPH_H_
