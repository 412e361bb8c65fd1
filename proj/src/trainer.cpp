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

#include "lamda/trainer.hpp"

#include <cmath>

#include "lamda/error.hpp"

namespace lamda {

void TrainRunConfig::validate() const {
  model.validate();
  task.validate();
  adam.validate();
  if (total_steps == 0) throw ConfigError("total_steps must be positive");
  if (!(ti_fraction >= 0.0 && ti_fraction <= 1.0))
    throw ConfigError("ti_fraction must lie in [0, 1]");
  if (!std::isfinite(alpha)) throw ConfigError("alpha must be finite");
  if (task.vocab != model.vocab) {
    throw ConfigError("task vocab " + std::to_string(task.vocab) + " differs from model vocab " +
                      std::to_string(model.vocab));
  }
  if (task.seq_len() > model.context) {
    throw ConfigError("task sequences of " + std::to_string(task.seq_len()) +
                      " tokens exceed the model context " + std::to_string(model.context));
  }
  if (kinds.empty() && method != Method::full) throw ConfigError("no adapted module kinds");
  if (method == Method::lamda_pp) {
    if (!budget) throw ConfigError("method lamda++ needs a rank budget");
    budget->validate();
  } else if (method != Method::full && rank == 0) {
    throw ConfigError("rank must be positive");
  }
}

std::size_t TrainRunConfig::freeze_iters() const {
  return static_cast<std::size_t>(std::llround(ti_fraction * static_cast<double>(total_steps)));
}

ModelSpec toy_model_spec(const ToyTransformerConfig& model, const std::vector<ModuleKind>& kinds,
                         std::size_t batch, std::size_t seq) {
  ModelSpec s;
  s.name = "toy";
  s.layers = model.layers;
  s.d_model = model.d_model;
  s.ffn = model.ffn;
  s.kinds = kinds;
  s.seq_len = seq;
  s.batch = batch;
  s.bytes_per_scalar = float_mode() == FloatMode::f32 ? 4 : 8;
  return s;
}

namespace {

const TrainRunConfig& checked(TrainRunConfig& run, const ToyModel& backbone) {
  run.model = backbone.config;
  run.validate();
  return run;
}

std::uint64_t stream_seed(std::uint64_t seed) { return Rng(seed).fork(1).next_u64(); }

}  // namespace

Trainer::Trainer(TrainRunConfig run, const ToyModel& backbone)
    : run_(std::move(run)),
      model_(backbone),
      adam_(checked(run_, backbone).adam),
      stream_(run_.task, stream_seed(run_.seed)),
      eval_set_(make_eval_set(run_.task, run_.seed, run_.eval_batches)) {
  spec_ = toy_model_spec(model_.config, run_.kinds, run_.task.batch, run_.task.seq_len());
  if (run_.method == Method::full) return;

  const auto modules = spec_.modules();
  if (run_.method == Method::lamda_pp) {
    std::map<ModuleId, Tensor> weights;
    for (const auto& id : modules) weights[id] = model_.weight(id);
    plan_ = allocate(score_modules(weights, *run_.budget), *run_.budget, run_.reverse_allocation);
    ranks_ = plan_->ranks;
  } else {
    ranks_ = uniform_ranks(spec_, run_.rank);
  }

  Rng init_rng = Rng(run_.seed).fork(2);
  for (const auto& id : modules) {
    const std::uint64_t seed = init_rng.next_u64();
    const Tensor& w = model_.weight(id);
    if (run_.method == Method::lora) {
      loras_[id] = build_lora(w, ranks_.at(id), run_.alpha, seed);
      continue;
    }
    AdapterConfig cfg;
    cfg.rank = ranks_.at(id);
    cfg.alpha = run_.alpha;
    cfg.init = run_.init;
    cfg.freeze = run_.ti_fraction > 0.0 ? FreezeMode::gradual_pmb : FreezeMode::lda_only;
    cfg.d_in = w.rows();
    cfg.d_out = w.cols();
    adapters_[id] = build_adapter(w, cfg, seed);
  }
  apply_freezing(0);
}

void Trainer::apply_freezing(std::size_t t) {
  const std::size_t ti = run_.freeze_iters();
  for (auto& [id, st] : adapters_) {
    if (st.config.freeze != FreezeMode::gradual_pmb) continue;
    const FreezeSchedule sched{st.config.rank, ti, run_.total_steps, run_.schedule};
    freeze_rows_to(st, trainable_rows(sched, std::min(t, run_.total_steps)));
  }
}

Var Trainer::forward_loss(Graph& graph, const Batch& batch, BoundModel& bound) const {
  (void)graph;
  for (const auto& [id, st] : adapters_) bound.attach(id, st);
  for (const auto& [id, st] : loras_) bound.attach(id, st);
  const Var logits = model_forward(bound, batch.inputs, batch.batch, batch.seq);
  return cross_entropy(logits, batch.targets);
}

std::uint64_t Trainer::live_params() const {
  std::uint64_t n = 0;
  switch (run_.method) {
    case Method::full:
      for (const auto& [_, t] : model_.tensors) n += t.size();
      break;
    case Method::lora:
      for (const auto& [_, st] : loras_) n += st.a.size() + st.b.size();
      break;
    case Method::lamda:
    case Method::lamda_pp:
      for (const auto& [_, st] : adapters_) n += st.s.size() + st.trainable_rows * st.b.cols();
      break;
  }
  return n;
}

StepMetrics Trainer::step() {
  if (done()) throw ContractError("Trainer::step past total_steps");
  const std::size_t t = step_;
  StepMetrics m;
  m.step = t;
  try {
    apply_freezing(t);
    if (run_.eval_every > 0 && t % run_.eval_every == 0) m.eval_loss = eval_loss();

    const Batch batch = stream_.next();
    Graph graph;
    BoundModel bound(graph, model_, run_.method == Method::full);
    const Var loss = forward_loss(graph, batch, bound);
    m.loss = loss.value()[0];
    if (!std::isfinite(m.loss)) throw NumericalError("loss is not finite");
    const GradientMap grads = graph.backward(loss);
    m.live_params = live_params();
    m.stored_activation_floats = graph.retained_activation_floats("adapter/");

    adam_.begin_step();
    switch (run_.method) {
      case Method::full:
        for (auto& [name, value] : model_.tensors) adam_.update(name, value, grads.at(name));
        break;
      case Method::lora:
        for (auto& [id, st] : loras_) {
          adam_.update(id.name() + ".A", st.a, grads.at(id.name() + ".A"));
          adam_.update(id.name() + ".B", st.b, grads.at(id.name() + ".B"));
        }
        break;
      case Method::lamda:
      case Method::lamda_pp:
        for (auto& [id, st] : adapters_) {
          const std::string p = id.name();
          adam_.update(p + ".S", st.s, grads.at(p + ".S"));
          if (st.trainable_rows > 0)
            adam_.update(p + ".B", st.b, grads.at(p + ".B"), st.trainable_rows);
          else
            adam_.release(p + ".B");
        }
        break;
    }
    m.optimizer_state_scalars = adam_.state_scalars();
  } catch (const NumericalError& e) {
    throw NumericalError("training diverged at step " + std::to_string(t) + ": " + e.what());
  }
  ++step_;
  return m;
}

double Trainer::eval_loss() const {
  double total = 0.0;
  for (const Batch& b : eval_set_) {
    Graph graph;
    BoundModel bound(graph, model_, false);
    total += forward_loss(graph, b, bound).value()[0];
  }
  return eval_set_.empty() ? 0.0 : total / static_cast<double>(eval_set_.size());
}

void Trainer::restore(std::size_t step, ToyModel model, std::map<ModuleId, AdapterState> adapters,
                      std::map<ModuleId, LoraState> loras, std::size_t adam_step,
                      std::map<std::string, Adam::Moments> moments) {
  if (step > run_.total_steps) throw FormatError("checkpoint step beyond the run length");
  model_ = std::move(model);
  adapters_ = std::move(adapters);
  loras_ = std::move(loras);
  adam_.restore(adam_step, std::move(moments));
  step_ = step;
  stream_ = TaskStream(run_.task, stream_seed(run_.seed));
  for (std::size_t i = 0; i < step; ++i) stream_.next();
}

TrainResult train(Trainer& trainer) {
  TrainResult r;
  auto eval = [&trainer] {
    try {
      return trainer.eval_loss();
    } catch (const NumericalError& e) {
      throw NumericalError("evaluation failed at step " + std::to_string(trainer.step_index()) +
                           ": " + e.what());
    }
  };
  r.initial_eval_loss = eval();
  while (!trainer.done()) r.steps.push_back(trainer.step());
  r.final_eval_loss = eval();
  return r;
}

ToyModel pretrain(const TrainRunConfig& run) {
  TrainRunConfig cfg = run;
  cfg.method = Method::full;
  const ToyModel fresh = init_toy_model(cfg.model, Rng(cfg.seed).fork(3).next_u64());
  Trainer trainer(cfg, fresh);
  while (!trainer.done()) trainer.step();
  return trainer.model();
}

}  // namespace lamda
