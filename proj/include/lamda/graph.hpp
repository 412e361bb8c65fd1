// Copyright 2026 The lamda Authors.
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

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lamda/tensor.hpp"

namespace lamda {

class Graph;

// Handle to a value recorded on a Graph. Cheap to copy; only valid while the
// owning graph is alive.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  bool requires_grad() const;
  std::size_t id() const noexcept { return id_; }
  Graph& graph() const noexcept { return *graph_; }
  bool valid() const noexcept { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

// Gradients of the trainable leaves of a graph, in leaf-creation order.
class GradientMap {
 public:
  struct Entry {
    std::size_t id;
    std::string name;
    Tensor grad;
  };

  bool contains(Var v) const noexcept;
  const Tensor& at(Var v) const;
  const Tensor& at(std::string_view name) const;
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  friend class Graph;
  std::vector<Entry> entries_;
};

// One tensor a backward rule keeps alive, as seen by the instrumentation.
struct RetainedActivation {
  std::size_t id;
  std::string tag;  // tag of the first node that retained it
  Shape shape;
};

// Computation tape. Operations append nodes in execution order; backward()
// replays their rules in reverse order. Not copyable or movable: Vars point
// back into it.
class Graph {
 public:
  // Gradient contributions for each input, in input order. A rule leaves the
  // slot of an input that does not require a gradient null.
  using BackwardRule =
      std::function<void(const Tensor& grad_out, std::vector<Tensor>& input_grads)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Trainable weight.
  Var parameter(Tensor value, std::string name);
  // Weight that receives no gradient.
  Var frozen(Tensor value, std::string name = {});
  // Data fed into the graph (tokens, activations handed in by a caller).
  Var input(Tensor value, std::string name = {});

  // Appends an operation node. `saved` lists the values `rule` reads during
  // backward; it drives the stored-activation instrumentation only.
  Var record(std::string_view op, Tensor value, std::vector<Var> inputs,
             std::vector<Var> saved, BackwardRule rule);

  // Labels every node recorded while the scope is alive.
  class TagScope {
   public:
    TagScope(Graph& graph, std::string tag);
    ~TagScope();
    TagScope(const TagScope&) = delete;
    TagScope& operator=(const TagScope&) = delete;

   private:
    Graph& graph_;
    std::string saved_;
  };

  // Reverse-mode sweep from a size-1 loss. Returns a gradient for every
  // trainable leaf (zeros for leaves the loss does not depend on).
  GradientMap backward(Var loss);

  std::size_t node_count() const noexcept { return nodes_.size(); }

  // Non-weight tensors retained by backward rules of nodes whose tag starts
  // with `tag_prefix`. Each tensor is counted once.
  std::vector<RetainedActivation> retained_activations(std::string_view tag_prefix) const;
  std::size_t retained_activation_floats(std::string_view tag_prefix) const;

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

 private:
  enum class NodeKind { parameter, frozen, input, op };

  struct Node {
    NodeKind kind;
    std::string name;  // leaf name or op name
    std::string tag;
    Tensor value;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    std::vector<std::size_t> saved;
    BackwardRule rule;
  };

  Var add_leaf(NodeKind kind, Tensor value, std::string name, bool requires_grad);

  std::vector<Node> nodes_;
  std::string current_tag_;
};

// ---- Differentiable operations. All operate on 2-D values unless stated;
// results are rounded to the float mode and checked for NaN/Inf.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double factor);
Var transpose(Var a);
// Adds a length-d vector to every row of an m×d matrix.
Var add_bias(Var a, Var bias);
// Tanh approximation: 0.5·x·(1 + tanh(√(2/π)·(x + 0.044715·x³))).
Var gelu(Var a);
// Row-wise softmax with per-row max subtraction. With `causal`, entry (i, j)
// for j > i is excluded (probability exactly 0).
Var softmax_rows(Var a, bool causal = false);
// Per-row normalization to zero mean / unit variance, then gain and bias.
Var layer_norm(Var a, Var gain, Var bias, double eps = 1e-5);
// Rows of `table` selected by `ids`.
Var embedding(Var table, std::span<const int> ids);
// Mean negative log-likelihood over rows whose target is >= 0; targets < 0
// are ignored. Log-softmax is fused in.
Var cross_entropy(Var logits, std::span<const int> targets);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice(Var a, std::size_t row0, std::size_t rows, std::size_t col0, std::size_t cols);
Var sum(Var a);  // size-1 result

}  // namespace lamda
