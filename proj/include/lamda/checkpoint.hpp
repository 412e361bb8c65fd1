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

#include <cstdint>

#include "lamda/container.hpp"
#include "lamda/toy_model.hpp"
#include "lamda/trainer.hpp"

namespace lamda {

// Tensor names inside a checkpoint container:
//   model.<tensor>                         backbone tensors
//   adapter.<module>.{W_res,A,S,B}         LaMDA adapter tensors
//   lora.<module>.{W,A,B}                  LoRA tensors
//   adam.<param>.{m,v}                     Adam moments of the live rows
//   meta.step, meta.adam_step              counters
//   meta.config_hash                       [high 32 bits, low 32 bits]
//   meta.model                             [layers, d, heads, ffn, vocab, context, causal]
//   meta.adapter.<module>                  [rank, alpha, init, freeze, trainable_rows]
// Weights use the storage dtype of the float mode; meta entries are f64.
WeightContainer make_checkpoint(const Trainer& trainer, std::uint64_t config_hash);

// Loads a checkpoint into a trainer built from the same configuration.
// ConfigError when the stored hash differs from `config_hash`.
void restore_checkpoint(Trainer& trainer, const WeightContainer& checkpoint,
                        std::uint64_t config_hash);

// Backbone tensors alone, as `finetune` reads them.
WeightContainer model_to_container(const ToyModel& model);
ToyModel model_from_container(const WeightContainer& container,
                              const ToyTransformerConfig& config);

}  // namespace lamda
