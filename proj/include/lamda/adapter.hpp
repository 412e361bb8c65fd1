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
#include <set>
#include <string>
#include <string_view>

#include "lamda/graph.hpp"
#include "lamda/tensor.hpp"

namespace lamda {

enum class InitMode {
  spectral_top,    // A, B from the leading singular triplets; S = I
  spectral_tail,   // A, B from the trailing singular triplets; S = I
  kaiming_random,  // A, B Kaiming-normal; S = 0; residual = W
};

enum class FreezeMode {
  lda_only,     // only S trains
  gradual_pmb,  // S trains; rows of B train until the freeze schedule retires them
};

std::string_view to_string(InitMode mode) noexcept;
std::string_view to_string(FreezeMode mode) noexcept;
InitMode parse_init_mode(std::string_view text);
FreezeMode parse_freeze_mode(std::string_view text);

struct AdapterConfig {
  std::size_t rank = 0;
  double alpha = 1.0;
  InitMode init = InitMode::spectral_top;
  FreezeMode freeze = FreezeMode::gradual_pmb;
  std::size_t d_in = 0;
  std::size_t d_out = 0;

  void validate() const;
};

// Y = X·W_res + alpha·((X·A)·S)·B
//   residual  d_in × d_out   frozen
//   a         d_in × r       frozen
//   s         r × r          trainable
//   b         r × d_out      rows [0, trainable_rows) trainable
struct AdapterState {
  Tensor residual;
  Tensor a;
  Tensor s;
  Tensor b;
  std::size_t trainable_rows = 0;
  AdapterConfig config;
};

AdapterState build_adapter(const Tensor& w, const AdapterConfig& config, std::uint64_t seed);

// Dense evaluation, same association order as the graph path.
Tensor forward(const AdapterState& state, const Tensor& x);

// W_res + alpha·A·S·B
Tensor effective_weight(const AdapterState& state);

// Always {"S"}, plus "B[i]" for every live row i.
std::set<std::string> trainable_parameter_names(const AdapterState& state);

// Retires rows [rows, trainable_rows). Rows never come back.
void freeze_rows_to(AdapterState& state, std::size_t rows);

// Leaves of one adapter on a graph. `b` is a parameter only while rows are live.
struct AdapterVars {
  Var residual;
  Var a;
  Var s;
  Var b;
};

// Leaf names are "<prefix>.W_res", "<prefix>.A", "<prefix>.S", "<prefix>.B".
AdapterVars bind(Graph& graph, const AdapterState& state, std::string_view prefix);

// Records the adapted linear map under the tag "adapter/<module>". The only
// adapter-path activations retained for backward are X·A (for S) and, while
// B has live rows, (X·A)·S.
Var forward(Graph& graph, const AdapterVars& vars, double alpha, Var x,
            std::string_view module);

// Plain low-rank baseline: Y = X·W + alpha·(X·A)·B with A Kaiming-normal and B = 0.
struct LoraState {
  Tensor w;
  Tensor a;
  Tensor b;
  double alpha = 1.0;
};

LoraState build_lora(const Tensor& w, std::size_t rank, double alpha, std::uint64_t seed);
Tensor forward(const LoraState& state, const Tensor& x);

struct LoraVars {
  Var w;
  Var a;
  Var b;
};

LoraVars bind(Graph& graph, const LoraState& state, std::string_view prefix);
Var forward(Graph& graph, const LoraVars& vars, double alpha, Var x, std::string_view module);

}  // namespace lamda
