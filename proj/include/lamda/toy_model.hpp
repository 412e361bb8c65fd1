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
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lamda/adapter.hpp"
#include "lamda/graph.hpp"
#include "lamda/module_id.hpp"
#include "lamda/tensor.hpp"

namespace lamda {

struct ToyTransformerConfig {
  std::size_t layers = 2;
  std::size_t d_model = 64;
  std::size_t heads = 4;
  std::size_t ffn = 256;
  std::size_t vocab = 64;
  std::size_t context = 32;
  bool causal = true;

  std::size_t head_dim() const { return d_model / heads; }
  void validate() const;
  // d_in × d_out of a linear module.
  std::size_t d_in(ModuleKind kind) const { return kind == ModuleKind::FFN2 ? ffn : d_model; }
  std::size_t d_out(ModuleKind kind) const { return kind == ModuleKind::FFN1 ? ffn : d_model; }
};

// Named tensors of a post-norm decoder:
//   embed.token (vocab×d), embed.position (context×d)
//   layers.<l>.<KIND>.weight (d_in×d_out), layers.<l>.<KIND>.bias (1×d_out)
//   layers.<l>.ln1.gain/.bias, layers.<l>.ln2.gain/.bias (1×d)
//   head.weight (d×vocab), head.bias (1×vocab)
struct ToyModel {
  ToyTransformerConfig config;
  std::map<std::string, Tensor> tensors;

  const Tensor& weight(const ModuleId& id) const;
  Tensor& weight(const ModuleId& id);
};

ToyModel init_toy_model(const ToyTransformerConfig& config, std::uint64_t seed);

std::string weight_name(const ModuleId& id);  // "layers.<l>.<KIND>.weight"
std::string bias_name(const ModuleId& id);

// A model placed on a graph. Backbone tensors are leaves (trainable or not),
// and any linear module may be routed through an adapter or LoRA path.
class BoundModel {
 public:
  // `trainable_backbone` marks every backbone tensor as a parameter.
  BoundModel(Graph& graph, const ToyModel& model, bool trainable_backbone);

  void attach(const ModuleId& id, const AdapterState& state);
  void attach(const ModuleId& id, const LoraState& state);

  Graph& graph() const { return graph_; }
  const ToyTransformerConfig& config() const { return model_.config; }
  Var tensor(const std::string& name) const;
  const std::map<ModuleId, AdapterVars>& adapters() const { return adapters_; }
  const std::map<ModuleId, LoraVars>& loras() const { return loras_; }

  // x·W (+ adapter path) + bias for one linear module.
  Var linear(const ModuleId& id, Var x) const;

 private:
  Graph& graph_;
  const ToyModel& model_;
  std::map<std::string, Var> leaves_;
  std::map<ModuleId, AdapterVars> adapters_;
  std::map<ModuleId, double> adapter_alpha_;
  std::map<ModuleId, LoraVars> loras_;
};

// Multi-head self-attention of one layer on `batch` stacked sequences of
// `seq` tokens each (x is batch·seq × d). Scores are scaled by 1/√d_h.
Var mhsa_forward(const BoundModel& model, std::size_t layer, Var x, std::size_t batch,
                 std::size_t seq);
// LayerNorm(X′ + FFN(X′)) with X′ = LayerNorm(X + MHSA(X)).
Var block_forward(const BoundModel& model, std::size_t layer, Var x, std::size_t batch,
                  std::size_t seq);
// Token ids (batch·seq, row-major by sequence) to logits (batch·seq × vocab).
Var model_forward(const BoundModel& model, std::span<const int> ids, std::size_t batch,
                  std::size_t seq);

// Dense conveniences that build a throwaway graph with a frozen backbone.
Tensor mhsa_forward(const ToyModel& model, std::size_t layer, const Tensor& x);
Tensor model_logits(const ToyModel& model, std::span<const int> ids, std::size_t batch,
                    std::size_t seq);

}  // namespace lamda
