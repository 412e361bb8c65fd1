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

#include <doctest.h>

#include <cmath>

#include "lamda/checkpoint.hpp"
#include "lamda/error.hpp"
#include "lamda/trainer.hpp"
#include "oracles.hpp"

using namespace lamda;

namespace {

TrainRunConfig small_run(Method method = Method::lamda) {
  TrainRunConfig r;
  r.method = method;
  r.rank = 3;
  r.model.layers = 2;
  r.model.d_model = 16;
  r.model.heads = 2;
  r.model.ffn = 32;
  r.model.vocab = 12;
  r.model.context = 8;
  r.task.vocab = 12;
  r.task.prompt_len = 4;
  r.task.batch = 2;
  r.task.task = TaskId::reverse;
  r.total_steps = 40;
  r.ti_fraction = 0.5;
  r.adam.learning_rate = 1e-2;
  r.eval_batches = 2;
  r.seed = 5;
  return r;
}

ToyModel small_backbone(const TrainRunConfig& r) { return init_toy_model(r.model, 77); }

}  // namespace

TEST_CASE("run config validation") {
  auto r = small_run();
  r.task.vocab = 13;
  CHECK_THROWS_AS(Trainer(r, small_backbone(small_run())), ConfigError);
  r = small_run(Method::lamda_pp);
  CHECK_THROWS_AS(Trainer(r, small_backbone(r)), ConfigError);
  r = small_run();
  r.rank = 17;
  CHECK_THROWS_AS(Trainer(r, small_backbone(r)), ConfigError);
  r = small_run();
  r.ti_fraction = 1.2;
  CHECK_THROWS_AS(Trainer(r, small_backbone(r)), ConfigError);
}

TEST_CASE("learning rate 0 leaves every trainable tensor unchanged") {
  for (Method m : {Method::full, Method::lora, Method::lamda}) {
    auto r = small_run(m);
    r.adam.learning_rate = 0.0;
    r.total_steps = 10;
    const ToyModel base = small_backbone(r);
    Trainer t(r, base);
    const auto adapters = t.adapters();
    const auto loras = t.loras();
    while (!t.done()) t.step();
    for (const auto& [name, v] : base.tensors) CHECK(bitwise_equal(t.model().tensors.at(name), v));
    for (const auto& [id, st] : adapters) {
      CHECK(bitwise_equal(t.adapters().at(id).s, st.s));
      CHECK(bitwise_equal(t.adapters().at(id).b, st.b));
    }
    for (const auto& [id, st] : loras) {
      CHECK(bitwise_equal(t.loras().at(id).a, st.a));
      CHECK(bitwise_equal(t.loras().at(id).b, st.b));
    }
  }
}

TEST_CASE("adapter methods keep the backbone, W_res, A and retired B rows fixed") {
  auto r = small_run();
  const ToyModel base = small_backbone(r);
  Trainer t(r, base);
  const auto start = t.adapters();
  std::map<ModuleId, AdapterState> at_freeze;
  while (!t.done()) {
    t.step();
    for (const auto& [id, st] : t.adapters()) {
      // Rows beyond the live count never move after they retire.
      if (!at_freeze.count(id)) at_freeze[id] = st;
      const auto& prev = at_freeze[id];
      for (std::size_t row = st.trainable_rows; row < st.config.rank; ++row) {
        if (row < prev.trainable_rows) continue;
        CHECK(bitwise_equal(slice(st.b, row, 1, 0, st.b.cols()),
                            slice(prev.b, row, 1, 0, prev.b.cols())));
      }
      at_freeze[id] = st;
    }
  }
  for (const auto& [name, v] : base.tensors) CHECK(bitwise_equal(t.model().tensors.at(name), v));
  for (const auto& [id, st] : start) {
    const auto& end = t.adapters().at(id);
    CHECK(bitwise_equal(end.residual, st.residual));
    CHECK(bitwise_equal(end.a, st.a));
    CHECK(end.trainable_rows == 0);
    CHECK_FALSE(bitwise_equal(end.s, st.s));
  }
}

TEST_CASE("spectral-top LaMDA starts at the backbone's loss") {
  auto r = small_run();
  const ToyModel base = small_backbone(r);
  auto frozen = r;
  frozen.method = Method::full;
  const double backbone = Trainer(frozen, base).eval_loss();
  const double lamda = Trainer(r, base).eval_loss();
  CHECK(std::abs(lamda / backbone - 1.0) <= 1e-4);
  auto tail = r;
  tail.init = InitMode::spectral_tail;
  CHECK(std::abs(Trainer(tail, base).eval_loss() / backbone - 1.0) <= 1e-4);
  auto lora = r;
  lora.method = Method::lora;
  CHECK(Trainer(lora, base).eval_loss() == backbone);
}

TEST_CASE("live parameters, optimizer state and activations follow the cost model") {
  auto r = small_run();
  r.total_steps = 30;
  const ToyModel base = small_backbone(r);
  Trainer t(r, base);
  const ModelSpec& spec = t.spec();
  const std::uint64_t tokens = r.task.batch * r.task.seq_len();
  while (!t.done()) {
    const StepMetrics m = t.step();
    CHECK(m.live_params == live_params_at(spec, t.ranks(), r.freeze_iters(), r.total_steps, m.step));
    CHECK(m.optimizer_state_scalars ==
          optimizer_state_scalars_at(spec, t.ranks(), r.freeze_iters(), r.total_steps, m.step));
    const FreezeSchedule sched{r.rank, r.freeze_iters(), r.total_steps};
    const bool b_live = trainable_rows(sched, m.step) > 0;
    const std::uint64_t per_module = tokens * r.rank;
    CHECK(m.stored_activation_floats == spec.modules().size() * per_module * (b_live ? 2 : 1));
  }
  CHECK(t.adapters().begin()->second.trainable_rows == 0);

  SUBCASE("LDA-only runs keep b·n·r per module from the first step") {
    auto lda = r;
    lda.ti_fraction = 0.0;
    lda.total_steps = 3;
    Trainer tl(lda, base);
    const auto m = tl.step();
    CHECK(m.stored_activation_floats == activation_footprint(tl.spec(), Method::lamda, lda.rank));
    CHECK(m.live_params == count_lamda_effective(tl.spec(), lda.rank, 0.0).trainable_params);
  }

  SUBCASE("LoRA keeps each distinct module input once plus X·A") {
    auto lr = r;
    lr.method = Method::lora;
    lr.total_steps = 2;
    Trainer tl(lr, base);
    const auto m = tl.step();
    // Q, K and V read the same input tensor, so it is stored once per layer.
    const std::uint64_t d = r.model.d_model, ffn = r.model.ffn;
    const std::uint64_t expected =
        r.model.layers * tokens * (d + d + d + ffn) + spec.modules().size() * tokens * r.rank;
    CHECK(m.stored_activation_floats == expected);
    CHECK(m.stored_activation_floats <= count_lora(tl.spec(), r.rank).stored_activation_floats());
    CHECK(m.live_params == count_lora(tl.spec(), r.rank).trainable_params);
  }
}

TEST_CASE("LaMDA++ plans ranks from the backbone spectra") {
  auto r = small_run(Method::lamda_pp);
  r.budget = RankBudget{{2, 3, 4}, 3};
  r.kinds = {ModuleKind::Q, ModuleKind::V, ModuleKind::FFN1};
  const ToyModel base = small_backbone(r);
  Trainer t(r, base);
  REQUIRE(t.plan().has_value());
  CHECK(t.plan()->achieved_mean == 3.0);
  for (const auto& [id, st] : t.adapters()) CHECK(st.config.rank == t.ranks().at(id));
  auto rev = r;
  rev.reverse_allocation = true;
  Trainer tr(rev, base);
  for (const auto& [id, rank] : t.ranks()) CHECK(tr.ranks().at(id) == 6 - rank);
}

TEST_CASE("identical seeds give identical loss series") {
  auto r = small_run();
  r.total_steps = 15;
  const ToyModel base = small_backbone(r);
  Trainer a(r, base), b(r, base);
  const auto ra = train(a), rb = train(b);
  for (std::size_t i = 0; i < ra.steps.size(); ++i) CHECK(ra.steps[i].loss == rb.steps[i].loss);
  CHECK(ra.final_eval_loss == rb.final_eval_loss);
  auto other = r;
  other.seed = 6;
  Trainer c(other, base);
  CHECK(train(c).steps[0].loss != ra.steps[0].loss);
}

TEST_CASE("training learns the task") {
  auto r = small_run(Method::full);
  r.total_steps = 150;
  r.task.task = TaskId::copy;
  Trainer t(r, small_backbone(r));
  const auto res = train(t);
  CHECK(res.final_eval_loss < 0.7 * res.initial_eval_loss);
}

TEST_CASE("non-finite values abort with the step") {
  auto r = small_run();
  ToyModel base = small_backbone(r);
  auto full = r;
  full.method = Method::full;
  base.tensors["head.bias"][0] = std::nan("");
  Trainer t(full, base);
  try {
    t.step();
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("step 0") != std::string::npos);
  }
}

TEST_CASE("resuming from a checkpoint continues the same run") {
  for (Method m : {Method::lamda, Method::lora, Method::full}) {
    auto r = small_run(m);
    r.total_steps = 20;
    const ToyModel base = small_backbone(r);
    Trainer straight(r, base);
    std::vector<double> losses;
    while (!straight.done()) losses.push_back(straight.step().loss);

    Trainer first(r, base);
    for (int i = 0; i < 9; ++i) first.step();
    const auto bytes = encode_container(make_checkpoint(first, 42));
    Trainer resumed(r, base);
    restore_checkpoint(resumed, decode_container(bytes), 42);
    CHECK(bitwise_equal(make_checkpoint(resumed, 42), make_checkpoint(first, 42)));
    for (std::size_t i = 9; i < 20; ++i) CHECK(resumed.step().loss == losses[i]);
    CHECK(bitwise_equal(make_checkpoint(resumed, 42), make_checkpoint(straight, 42)));
    CHECK_THROWS_AS(restore_checkpoint(resumed, decode_container(bytes), 43), ConfigError);
  }
}
