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

#include "lamda/adapter.hpp"

#include <algorithm>
#include <cmath>

#include "lamda/error.hpp"
#include "lamda/random.hpp"
#include "lamda/spectral.hpp"

namespace lamda {

std::string_view to_string(InitMode mode) noexcept {
  switch (mode) {
    case InitMode::spectral_top: return "spectral_top";
    case InitMode::spectral_tail: return "spectral_tail";
    case InitMode::kaiming_random: return "kaiming";
  }
  return "?";
}

std::string_view to_string(FreezeMode mode) noexcept {
  return mode == FreezeMode::lda_only ? "lda_only" : "gradual_pmb";
}

InitMode parse_init_mode(std::string_view text) {
  for (InitMode m : {InitMode::spectral_top, InitMode::spectral_tail, InitMode::kaiming_random})
    if (to_string(m) == text) return m;
  throw ConfigError("unknown init mode '" + std::string(text) +
                    "' (expected spectral_top, spectral_tail or kaiming)");
}

FreezeMode parse_freeze_mode(std::string_view text) {
  for (FreezeMode m : {FreezeMode::lda_only, FreezeMode::gradual_pmb})
    if (to_string(m) == text) return m;
  throw ConfigError("unknown freeze mode '" + std::string(text) +
                    "' (expected lda_only or gradual_pmb)");
}

void AdapterConfig::validate() const {
  if (d_in == 0 || d_out == 0) throw ConfigError("adapter shape must be positive");
  if (rank < 1 || rank > std::min(d_in, d_out)) {
    throw ConfigError("adapter rank " + std::to_string(rank) + " outside [1, " +
                      std::to_string(std::min(d_in, d_out)) + "] for a " +
                      std::to_string(d_in) + "x" + std::to_string(d_out) + " weight");
  }
  if (!std::isfinite(alpha)) throw ConfigError("adapter alpha must be finite");
}

AdapterState build_adapter(const Tensor& w, const AdapterConfig& config, std::uint64_t seed) {
  config.validate();
  if (w.ndim() != 2 || w.rows() != config.d_in || w.cols() != config.d_out) {
    throw DimensionError("build_adapter: weight " + shape_string(w.shape()) +
                         " does not match configured " + std::to_string(config.d_in) + "x" +
                         std::to_string(config.d_out));
  }
  w.check_finite("adapter base weight");
  const std::size_t r = config.rank;

  AdapterState st;
  st.config = config;
  if (config.init == InitMode::kaiming_random) {
    Rng rng(seed);
    st.a = kaiming_normal(config.d_in, r, config.d_in, rng);
    st.b = kaiming_normal(r, config.d_out, r, rng);
    st.residual = w;
    st.s = Tensor::zeros(r, r);
  } else {
    const SpectralDecomposition dec = svd(w);
    SpectrumSplit split = config.init == InitMode::spectral_top
                              ? split_spectrum(dec, w, r)
                              : split_spectrum_tail(dec, w, r);
    st.a = std::move(split.a);
    st.b = std::move(split.b);
    st.residual = std::move(split.residual);
    st.s = Tensor::identity(r);
  }
  st.residual.round_to_mode();
  st.a.round_to_mode();
  st.b.round_to_mode();
  st.trainable_rows = config.freeze == FreezeMode::gradual_pmb ? r : 0;
  return st;
}

Tensor forward(const AdapterState& state, const Tensor& x) {
  if (x.ndim() != 2 || x.cols() != state.config.d_in) {
    throw DimensionError("adapter forward: input " + shape_string(x.shape()) +
                         " does not have " + std::to_string(state.config.d_in) + " columns");
  }
  const Tensor path = matmul(matmul(matmul(x, state.a), state.s), state.b);
  return add(matmul(x, state.residual), scaled(path, state.config.alpha));
}

Tensor effective_weight(const AdapterState& state) {
  return add(state.residual,
             scaled(matmul(matmul(state.a, state.s), state.b), state.config.alpha));
}

std::set<std::string> trainable_parameter_names(const AdapterState& state) {
  std::set<std::string> names{"S"};
  for (std::size_t i = 0; i < state.trainable_rows; ++i)
    names.insert("B[" + std::to_string(i) + "]");
  return names;
}

void freeze_rows_to(AdapterState& state, std::size_t rows) {
  state.trainable_rows = std::min(state.trainable_rows, rows);
}

AdapterVars bind(Graph& graph, const AdapterState& state, std::string_view prefix) {
  const std::string p(prefix);
  AdapterVars v;
  v.residual = graph.frozen(state.residual, p + ".W_res");
  v.a = graph.frozen(state.a, p + ".A");
  v.s = graph.parameter(state.s, p + ".S");
  v.b = state.trainable_rows > 0 ? graph.parameter(state.b, p + ".B")
                                 : graph.frozen(state.b, p + ".B");
  return v;
}

Var forward(Graph& graph, const AdapterVars& vars, double alpha, Var x,
            std::string_view module) {
  Graph::TagScope tag(graph, "adapter/" + std::string(module));
  Var main = matmul(x, vars.residual);
  Var path = matmul(matmul(matmul(x, vars.a), vars.s), vars.b);
  if (alpha != 1.0) path = scale(path, alpha);
  return add(main, path);
}

LoraState build_lora(const Tensor& w, std::size_t rank, double alpha, std::uint64_t seed) {
  if (w.ndim() != 2) throw DimensionError("build_lora: weight must be a matrix");
  if (rank < 1 || rank > std::min(w.rows(), w.cols())) {
    throw ConfigError("LoRA rank " + std::to_string(rank) + " outside [1, " +
                      std::to_string(std::min(w.rows(), w.cols())) + "]");
  }
  Rng rng(seed);
  LoraState st;
  st.w = w;
  st.a = kaiming_normal(w.rows(), rank, w.rows(), rng);
  st.b = Tensor::zeros(rank, w.cols());
  st.alpha = alpha;
  return st;
}

Tensor forward(const LoraState& state, const Tensor& x) {
  return add(matmul(x, state.w), scaled(matmul(matmul(x, state.a), state.b), state.alpha));
}

LoraVars bind(Graph& graph, const LoraState& state, std::string_view prefix) {
  const std::string p(prefix);
  return {graph.frozen(state.w, p + ".W"), graph.parameter(state.a, p + ".A"),
          graph.parameter(state.b, p + ".B")};
}

Var forward(Graph& graph, const LoraVars& vars, double alpha, Var x, std::string_view module) {
  Graph::TagScope tag(graph, "adapter/" + std::string(module));
  Var main = matmul(x, vars.w);
  Var path = matmul(matmul(x, vars.a), vars.b);
  if (alpha != 1.0) path = scale(path, alpha);
  return add(main, path);
}

}  // namespace lamda
