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
#include <optional>
#include <string>

#include "lamda/tensor.hpp"
#include "lamda/trainer.hpp"

namespace lamda {

// Where the frozen backbone of a fine-tuning run comes from.
struct PretrainSpec {
  TaskId task = TaskId::copy;
  std::size_t steps = 600;
  double learning_rate = 3e-3;
  std::uint64_t seed = 1;
};

// A `finetune` configuration file. Top-level keys:
//   method, rank, budget, reverse_allocation, alpha, init, ti_fraction,
//   schedule, kinds, total_steps, learning_rate, beta1, beta2, eps, batch,
//   seed, task, prompt_len, corpus, eval_batches, eval_every, float_mode,
//   model {layers, d_model, heads, ffn, vocab, context, causal},
//   backbone (container path) or pretrain {task, steps, learning_rate, seed}
// Unknown keys are rejected. Relative paths resolve against `base_dir`.
struct RunConfigFile {
  TrainRunConfig run;
  FloatMode float_mode = FloatMode::f32;
  std::optional<std::string> backbone_path;
  std::optional<PretrainSpec> pretrain;
  std::uint64_t hash = 0;  // FNV-1a of the canonical JSON document
};

RunConfigFile parse_run_config(const std::string& text, const std::string& base_dir = ".");
RunConfigFile load_run_config(const std::string& path);

std::uint64_t fnv1a64(std::string_view bytes);

// Applies LDA_FLOAT_MODE when set; ConfigError for any other value.
FloatMode float_mode_from_env(FloatMode fallback);

// Backbone named by the config: read from the container, or pre-trained with
// the same model shape, batch size and prompt length as the run.
ToyModel resolve_backbone(const RunConfigFile& config);

}  // namespace lamda
