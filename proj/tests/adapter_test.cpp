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

#include "lamda/adapter.hpp"
#include "lamda/error.hpp"
#include "lamda/freezing.hpp"
#include "lamda/optimizer.hpp"
#include "oracles.hpp"

using namespace lamda;

namespace {

AdapterConfig config_for(const Tensor& w, std::size_t rank, InitMode init,
                         FreezeMode freeze = FreezeMode::gradual_pmb) {
  AdapterConfig c;
  c.rank = rank;
  c.init = init;
  c.freeze = freeze;
  c.d_in = w.rows();
  c.d_out = w.cols();
  return c;
}

// Dense reference: X·(W_res + alpha·A·S·B), computed with the oracle kernels.
Tensor dense_reference(const AdapterState& st, const Tensor& x) {
  const Tensor asb =
      oracle::triple_loop_matmul(oracle::triple_loop_matmul(st.a, st.s), st.b);
  Tensor w = st.residual;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] += st.config.alpha * asb[i];
  return oracle::triple_loop_matmul(x, w);
}

// One optimizer step with a generic nonzero loss; returns the updated state.
AdapterState step_once(AdapterState st, const Tensor& x, const Tensor& target) {
  Graph g;
  auto vars = bind(g, st, "m");
  auto y = forward(g, vars, st.config.alpha, g.input(x), "m");
  auto diff = sub(y, g.input(target));
  auto grads = g.backward(sum(mul(diff, diff)));
  Adam adam(AdamConfig{1e-2});
  adam.begin_step();
  adam.update("m.S", st.s, grads.at(vars.s));
  if (vars.b.requires_grad()) adam.update("m.B", st.b, grads.at(vars.b), st.trainable_rows);
  return st;
}

}  // namespace

TEST_CASE("build_adapter: spectral top reproduces the weight") {
  ScopedFloatMode f64(FloatMode::f64);
  const Tensor w = Tensor::diagonal({5, 3, 1});
  auto st = build_adapter(w, config_for(w, 1, InitMode::spectral_top), 0);
  CHECK(max_abs_diff(forward(st, Tensor::identity(3)), w) <= 1e-12);
  CHECK(bitwise_equal(st.s, Tensor::identity(1)));
  CHECK(st.trainable_rows == 1);

  Rng rng(16);
  const Tensor w16 = oracle::random_matrix(16, 16, rng);
  auto st16 = build_adapter(w16, config_for(w16, 4, InitMode::spectral_top), 0);
  CHECK(relative_frobenius_error(effective_weight(st16), w16) <= 1e-5);
}

TEST_CASE("build_adapter: f32 storage keeps the init identity") {
  ScopedFloatMode f32(FloatMode::f32);
  Rng rng(3);
  const Tensor w = oracle::random_f32_matrix(24, 40, rng);
  auto st = build_adapter(w, config_for(w, 8, InitMode::spectral_top), 0);
  const Tensor x = oracle::random_f32_matrix(5, 24, rng);
  CHECK(relative_frobenius_error(forward(st, x), matmul(x, w)) <= 1e-5);
}

TEST_CASE("build_adapter: kaiming mode zero-initializes S") {
  ScopedFloatMode f64(FloatMode::f64);
  Rng rng(5);
  const Tensor w = oracle::random_matrix(6, 9, rng);
  auto st = build_adapter(w, config_for(w, 3, InitMode::kaiming_random), 42);
  CHECK(max_abs(st.s) == 0.0);
  CHECK(bitwise_equal(st.residual, w));
  const Tensor x = oracle::random_matrix(4, 6, rng);
  CHECK(bitwise_equal(forward(st, x), add(matmul(x, w), scaled(matmul(matmul(matmul(x, st.a), st.s), st.b), 1.0))));
  CHECK(max_abs_diff(forward(st, x), matmul(x, w)) == 0.0);
  // Same seed, same draw.
  auto again = build_adapter(w, config_for(w, 3, InitMode::kaiming_random), 42);
  CHECK(bitwise_equal(st.a, again.a));
  CHECK(bitwise_equal(st.b, again.b));
}

TEST_CASE("build_adapter: configuration errors") {
  const Tensor w = Tensor::zeros(4, 6);
  CHECK_THROWS_AS(build_adapter(w, config_for(w, 0, InitMode::spectral_top), 0), ConfigError);
  CHECK_THROWS_AS(build_adapter(w, config_for(w, 5, InitMode::spectral_top), 0), ConfigError);
  auto bad = config_for(w, 2, InitMode::spectral_top);
  bad.d_in = 5;
  CHECK_THROWS_AS(build_adapter(w, bad, 0), DimensionError);
  auto lda = build_adapter(w, config_for(w, 2, InitMode::spectral_top, FreezeMode::lda_only), 0);
  CHECK(lda.trainable_rows == 0);
}

TEST_CASE("forward: zero input and dense reference") {
  ScopedFloatMode f64(FloatMode::f64);
  Rng rng(8);
  const Tensor w = oracle::random_matrix(7, 5, rng);
  auto st = build_adapter(w, config_for(w, 3, InitMode::spectral_top), 0);
  CHECK(max_abs(forward(st, Tensor::zeros(4, 7))) == 0.0);
  CHECK_THROWS_AS(forward(st, Tensor::zeros(4, 6)), DimensionError);

  st.s = oracle::random_matrix(3, 3, rng);
  st.config.alpha = 0.7;
  freeze_rows_to(st, 1);
  const Tensor x = oracle::random_matrix(6, 7, rng);
  CHECK(max_abs_diff(forward(st, x), dense_reference(st, x)) <= 1e-10);

  Graph g;
  auto vars = bind(g, st, "m");
  auto y = forward(g, vars, st.config.alpha, g.input(x), "m");
  CHECK(max_abs_diff(y.value(), dense_reference(st, x)) <= 1e-10);
}

TEST_CASE("trainable_parameter_names and step-and-diff") {
  ScopedFloatMode f64(FloatMode::f64);
  Rng rng(21);
  const Tensor w = oracle::random_matrix(12, 10, rng);
  auto st = build_adapter(w, config_for(w, 8, InitMode::spectral_top), 0);

  freeze_rows_to(st, 0);
  CHECK(trainable_parameter_names(st) == std::set<std::string>{"S"});

  auto full = build_adapter(w, config_for(w, 8, InitMode::spectral_top), 0);
  CHECK(trainable_parameter_names(full).size() == 9);

  auto partial = full;
  freeze_rows_to(partial, 3);
  CHECK(trainable_parameter_names(partial) ==
        std::set<std::string>{"S", "B[0]", "B[1]", "B[2]"});

  const Tensor x = oracle::random_matrix(9, 12, rng);
  const Tensor target = oracle::random_matrix(9, 10, rng);
  const AdapterState after = step_once(partial, x, target);
  std::set<std::string> changed;
  if (!bitwise_equal(after.s, partial.s)) changed.insert("S");
  for (std::size_t r = 0; r < 8; ++r) {
    if (!bitwise_equal(slice(after.b, r, 1, 0, 10), slice(partial.b, r, 1, 0, 10)))
      changed.insert("B[" + std::to_string(r) + "]");
  }
  CHECK(changed == trainable_parameter_names(partial));
  CHECK(bitwise_equal(after.a, partial.a));
  CHECK(bitwise_equal(after.residual, partial.residual));

  SUBCASE("rows 8 -> 5: rows 5, 6, 7 freeze") {
    const FreezeSchedule sched{8, 16, 20};
    AdapterState st8 = full;
    std::size_t t = 0;
    while (trainable_rows(sched, t) > 5) ++t;
    CHECK(trainable_rows(sched, t) == 5);
    CHECK(rows_frozen_between(8, 5) == std::vector<std::size_t>{7, 6, 5});
    freeze_rows_to(st8, trainable_rows(sched, t));
    const AdapterState stepped = step_once(st8, x, target);
    for (std::size_t r = 0; r < 8; ++r) {
      const bool moved = !bitwise_equal(slice(stepped.b, r, 1, 0, 10), slice(st8.b, r, 1, 0, 10));
      CHECK(moved == (r < 5));
    }
  }
}

TEST_CASE("retained adapter activations have width r") {
  ScopedFloatMode f64(FloatMode::f64);
  Rng rng(2);
  const std::size_t d = 16, r = 4, tokens = 10;
  const Tensor w = oracle::random_matrix(d, d, rng);
  const Tensor x = oracle::random_matrix(tokens, d, rng);

  for (FreezeMode mode : {FreezeMode::lda_only, FreezeMode::gradual_pmb}) {
    auto st = build_adapter(w, config_for(w, r, InitMode::spectral_top, mode), 0);
    Graph g;
    // Upstream activation that itself needs a gradient, as inside a network.
    auto up = g.parameter(Tensor::identity(d), "upstream");
    auto xin = matmul(g.input(x), up);
    auto vars = bind(g, st, "m");
    auto y = forward(g, vars, 1.0, xin, "m");
    g.backward(sum(y));
    const auto kept = g.retained_activations("adapter/");
    CHECK(kept.size() == (mode == FreezeMode::lda_only ? 1u : 2u));
    for (const auto& k : kept) CHECK(k.shape == Shape{tokens, r});
    CHECK(g.retained_activation_floats("adapter/") == kept.size() * tokens * r);
  }

  SUBCASE("LoRA keeps the full-width input") {
    auto lora = build_lora(w, r, 1.0, 3);
    Graph g;
    auto vars = bind(g, lora, "m");
    auto y = forward(g, vars, 1.0, g.input(x), "m");
    g.backward(sum(y));
    CHECK(g.retained_activation_floats("adapter/") == tokens * d + tokens * r);
  }
}

TEST_CASE("gradient of S matches the closed form") {
  ScopedFloatMode f64(FloatMode::f64);
  Rng rng(31);
  const Tensor w = oracle::random_matrix(9, 7, rng);
  auto cfg = config_for(w, 3, InitMode::spectral_top, FreezeMode::lda_only);
  cfg.alpha = 1.7;
  auto st = build_adapter(w, cfg, 0);
  st.s = oracle::random_matrix(3, 3, rng);
  const Tensor x = oracle::random_matrix(5, 9, rng);
  const Tensor dy = oracle::random_matrix(5, 7, rng);

  Graph g;
  auto vars = bind(g, st, "m");
  auto y = forward(g, vars, cfg.alpha, g.input(x), "m");
  auto grads = g.backward(sum(mul(y, g.input(dy))));
  // Aᵀ·Xᵀ·dY·Bᵀ·alpha
  using oracle::naive_transpose;
  using oracle::triple_loop_matmul;
  const Tensor expected = scaled(
      triple_loop_matmul(triple_loop_matmul(triple_loop_matmul(naive_transpose(st.a),
                                                               naive_transpose(x)),
                                            dy),
                         naive_transpose(st.b)),
      cfg.alpha);
  CHECK(max_abs_diff(grads.at(vars.s), expected) <= 1e-10);
  CHECK(grads.size() == 1);
}

TEST_CASE("LoRA baseline is the frozen model at init") {
  Rng rng(6);
  const Tensor w = oracle::random_matrix(8, 6, rng);
  auto st = build_lora(w, 2, 2.0, 11);
  CHECK(max_abs(st.b) == 0.0);
  const Tensor x = oracle::random_matrix(3, 8, rng);
  CHECK(bitwise_equal(forward(st, x), matmul(x, w)));
  CHECK_THROWS_AS(build_lora(w, 7, 1.0, 0), ConfigError);
}

TEST_CASE("Adam: masked rows, state shrinkage and zero learning rate") {
  Tensor p = Tensor::filled(4, 3, 1.0);
  const Tensor g = Tensor::filled(4, 3, 0.5);
  Adam adam(AdamConfig{0.1});
  adam.begin_step();
  adam.update("B", p, g, 4);
  CHECK(adam.state_scalars() == 24);
  adam.begin_step();
  const Tensor before = p;
  adam.update("B", p, g, 2);
  CHECK(adam.state_scalars() == 12);
  CHECK(bitwise_equal(slice(p, 2, 2, 0, 3), slice(before, 2, 2, 0, 3)));
  CHECK_FALSE(bitwise_equal(slice(p, 0, 2, 0, 3), slice(before, 0, 2, 0, 3)));
  adam.begin_step();
  CHECK_THROWS_AS(adam.update("B", p, g, 3), ContractError);
  adam.update("B", p, g, 0);
  CHECK(adam.state_scalars() == 0);

  Tensor q = Tensor::filled(2, 2, 0.25);
  const Tensor q0 = q;
  Adam frozen(AdamConfig{0.0});
  for (int i = 0; i < 10; ++i) {
    frozen.begin_step();
    frozen.update("q", q, Tensor::filled(2, 2, 3.0));
  }
  CHECK(bitwise_equal(q, q0));
  CHECK_THROWS_AS(Adam(AdamConfig{-1.0}), ConfigError);
}
