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
#include <optional>
#include <vector>

#include "lamda/accounting.hpp"
#include "lamda/adapter.hpp"
#include "lamda/allocator.hpp"
#include "lamda/freezing.hpp"
#include "lamda/optimizer.hpp"
#include "lamda/tasks.hpp"
#include "lamda/toy_model.hpp"

namespace lamda {

struct TrainRunConfig {
  Method method = Method::lamda;
  std::size_t rank = 8;               // lora, lamda
  std::optional<RankBudget> budget;   // lamda++
  bool reverse_allocation = false;    // lamda++ ablation
  double alpha = 1.0;
  InitMode init = InitMode::spectral_top;
  double ti_fraction = 0.3;  // 0 trains S only
  ScheduleVariant schedule = ScheduleVariant::linear;
  std::vector<ModuleKind> kinds{std::begin(kAllModuleKinds), std::end(kAllModuleKinds)};
  std::size_t total_steps = 2000;
  AdamConfig adam;
  TaskConfig task;
  std::uint64_t seed = 0;
  std::size_t eval_batches = 4;
  std::size_t eval_every = 0;  // 0: evaluate at the start and the end only
  ToyTransformerConfig model;

  void validate() const;
  std::size_t freeze_iters() const;
};

struct StepMetrics {
  std::size_t step = 0;
  double loss = 0.0;
  std::uint64_t live_params = 0;
  std::uint64_t stored_activation_floats = 0;
  std::uint64_t optimizer_state_scalars = 0;  // after this step's update
  std::optional<double> eval_loss;            // before this step's update
};

// Shape description of the toy model for the cost model.
ModelSpec toy_model_spec(const ToyTransformerConfig& model, const std::vector<ModuleKind>& kinds,
                         std::size_t batch, std::size_t seq);

// Steps one run. The backbone passed in is copied; adapter methods never
// modify it.
class Trainer {
 public:
  Trainer(TrainRunConfig run, const ToyModel& backbone);

  const TrainRunConfig& run() const { return run_; }
  std::size_t step_index() const { return step_; }
  bool done() const { return step_ >= run_.total_steps; }

  // One optimizer step on the next training batch. Throws NumericalError on a
  // non-finite loss or update, naming the step.
  StepMetrics step();
  double eval_loss() const;

  const ToyModel& model() const { return model_; }
  ToyModel& model() { return model_; }
  const std::map<ModuleId, AdapterState>& adapters() const { return adapters_; }
  std::map<ModuleId, AdapterState>& adapters() { return adapters_; }
  const std::map<ModuleId, LoraState>& loras() const { return loras_; }
  std::map<ModuleId, LoraState>& loras() { return loras_; }
  const Adam& optimizer() const { return adam_; }
  Adam& optimizer() { return adam_; }
  const RankMap& ranks() const { return ranks_; }
  const std::optional<RankPlan>& plan() const { return plan_; }
  const ModelSpec& spec() const { return spec_; }

  // Trainable scalars at the current step (after freezing is applied).
  std::uint64_t live_params() const;

  // Restores everything a checkpoint carries; the task stream is replayed so
  // the next batch matches an uninterrupted run.
  void restore(std::size_t step, ToyModel model, std::map<ModuleId, AdapterState> adapters,
               std::map<ModuleId, LoraState> loras, std::size_t adam_step,
               std::map<std::string, Adam::Moments> moments);

 private:
  void apply_freezing(std::size_t t);
  Var forward_loss(Graph& graph, const Batch& batch, BoundModel& bound) const;

  TrainRunConfig run_;
  ToyModel model_;
  std::map<ModuleId, AdapterState> adapters_;
  std::map<ModuleId, LoraState> loras_;
  RankMap ranks_;
  std::optional<RankPlan> plan_;
  ModelSpec spec_;
  Adam adam_;
  TaskStream stream_;
  std::vector<Batch> eval_set_;
  std::size_t step_ = 0;
};

struct TrainResult {
  std::vector<StepMetrics> steps;
  double initial_eval_loss = 0.0;
  double final_eval_loss = 0.0;
};

// Runs to completion. `trainer` is left in its final state.
TrainResult train(Trainer& trainer);

// Seeded full-parameter pre-training of a fresh toy model.
ToyModel pretrain(const TrainRunConfig& run);

}  // namespace lamda
