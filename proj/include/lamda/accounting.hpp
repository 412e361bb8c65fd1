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
#include <string>
#include <vector>

#include "lamda/freezing.hpp"
#include "lamda/module_id.hpp"

namespace lamda {

// Shape-only description of a transformer stack. Modules use the X·W
// convention, so Q/K/V/O are d×d, FFN1 is d×ffn and FFN2 is ffn×d.
struct ModelSpec {
  std::string name;
  std::size_t layers = 0;
  std::size_t d_model = 0;
  std::size_t ffn = 0;
  std::vector<ModuleKind> kinds;  // adapted modules of every layer
  std::size_t seq_len = 1;        // n
  std::size_t batch = 1;          // b
  std::size_t bytes_per_scalar = 4;

  void validate() const;
  std::size_t d_in(ModuleKind kind) const;
  std::size_t d_out(ModuleKind kind) const;
  // Every adapted module, in (layer, kind) order.
  std::vector<ModuleId> modules() const;
};

ModelSpec model_spec_from_json(const std::string& text);
std::string model_spec_to_json(const ModelSpec& spec);
// Looks for <name>.json in the shipped preset directory, or reads `name` as a
// path when it ends in ".json".
ModelSpec load_preset(const std::string& name);
std::vector<std::string> preset_names();

enum class Method { full, lora, lamda, lamda_pp };
std::string to_string(Method method);
Method parse_method(const std::string& text);

struct ModuleCost {
  ModuleId module;
  std::size_t d_in = 0;
  std::size_t d_out = 0;
  std::size_t rank = 0;
  std::uint64_t trainable_params = 0;  // at step 0
  double effective_params = 0.0;       // time-averaged over the run
  // Floats kept for the backward pass of the adapter path. The primary line
  // is the input of the first trainable matmul (LoRA: X, LaMDA: X·A); the
  // secondary line is the extra r-wide tensor needed while the second
  // projection is trainable (LoRA: X·A, LaMDA: (X·A)·S).
  std::uint64_t activation_primary = 0;
  std::uint64_t activation_secondary = 0;
};

struct CostReport {
  Method method = Method::lora;
  std::string model;
  double ti_fraction = 0.0;
  std::uint64_t trainable_params = 0;
  double effective_params = 0.0;
  std::uint64_t gradient_bytes = 0;
  std::uint64_t optimizer_state_scalars = 0;  // Adam m and v
  std::uint64_t optimizer_state_bytes = 0;
  std::uint64_t activation_primary = 0;
  std::uint64_t activation_secondary = 0;
  std::vector<ModuleCost> modules;

  std::uint64_t stored_activation_floats() const {
    return activation_primary + activation_secondary;
  }
};

using RankMap = std::map<ModuleId, std::size_t>;

RankMap uniform_ranks(const ModelSpec& spec, std::size_t rank);

// (d_in + d_out)·r per module. r = 0 gives an empty adapter.
CostReport count_lora(const ModelSpec& spec, std::size_t rank);

// Per module: f·(r·d_out)/2 + r². With f = 0 this is the LDA-only count.
CostReport count_lamda_effective(const ModelSpec& spec, const RankMap& ranks,
                                 double ti_fraction);
CostReport count_lamda_effective(const ModelSpec& spec, std::size_t rank, double ti_fraction);

// Every adapted weight trainable.
CostReport count_full(const ModelSpec& spec);

// Adapter-path activations per step. Primary line only for the ratio;
// `include_secondary` adds the r-wide second tensor.
std::uint64_t activation_footprint(const ModelSpec& spec, Method method, std::size_t rank,
                                   bool include_secondary = false);

// Live trainable scalars at iteration t under the given schedule horizon
// (Σ r² + live_rows·d_out), and the matching Adam state.
std::uint64_t live_params_at(const ModelSpec& spec, const RankMap& ranks,
                             std::size_t freeze_iters, std::size_t total_iters, std::size_t t);
std::uint64_t optimizer_state_scalars_at(const ModelSpec& spec, const RankMap& ranks,
                                         std::size_t freeze_iters, std::size_t total_iters,
                                         std::size_t t);

std::string report_to_json(const CostReport& report);
// One row per module plus a "total" row.
std::string report_to_csv(const CostReport& report);

}  // namespace lamda
