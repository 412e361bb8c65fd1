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

#include "lamda/toy_model.hpp"

#include <cmath>

#include "lamda/error.hpp"
#include "lamda/random.hpp"

namespace lamda {

void ToyTransformerConfig::validate() const {
  if (layers == 0 || d_model == 0 || heads == 0 || ffn == 0 || vocab == 0 || context == 0)
    throw ConfigError("toy model: all sizes must be positive");
  if (d_model % heads != 0) {
    throw ConfigError("toy model: d_model " + std::to_string(d_model) +
                      " is not divisible by heads " + std::to_string(heads));
  }
}

std::string weight_name(const ModuleId& id) { return id.name() + ".weight"; }
std::string bias_name(const ModuleId& id) { return id.name() + ".bias"; }

const Tensor& ToyModel::weight(const ModuleId& id) const {
  auto it = tensors.find(weight_name(id));
  if (it == tensors.end()) throw ConfigError("model has no tensor " + weight_name(id));
  return it->second;
}

Tensor& ToyModel::weight(const ModuleId& id) {
  auto it = tensors.find(weight_name(id));
  if (it == tensors.end()) throw ConfigError("model has no tensor " + weight_name(id));
  return it->second;
}

ToyModel init_toy_model(const ToyTransformerConfig& config, std::uint64_t seed) {
  config.validate();
  ToyModel m;
  m.config = config;
  Rng rng(seed);
  const std::size_t d = config.d_model;
  m.tensors["embed.token"] = normal_tensor(config.vocab, d, 1.0, rng);
  m.tensors["embed.position"] = normal_tensor(config.context, d, 1.0, rng);
  for (std::size_t l = 0; l < config.layers; ++l) {
    for (ModuleKind k : kAllModuleKinds) {
      const ModuleId id{l, k};
      const std::size_t din = config.d_in(k), dout = config.d_out(k);
      m.tensors[weight_name(id)] = normal_tensor(din, dout, 1.0 / std::sqrt(double(din)), rng);
      m.tensors[bias_name(id)] = Tensor::zeros(1, dout);
    }
    const std::string p = "layers." + std::to_string(l);
    for (const char* ln : {".ln1", ".ln2"}) {
      m.tensors[p + ln + ".gain"] = Tensor::filled(1, d, 1.0);
      m.tensors[p + ln + ".bias"] = Tensor::zeros(1, d);
    }
  }
  m.tensors["head.weight"] = normal_tensor(d, config.vocab, 1.0 / std::sqrt(double(d)), rng);
  m.tensors["head.bias"] = Tensor::zeros(1, config.vocab);
  return m;
}

BoundModel::BoundModel(Graph& graph, const ToyModel& model, bool trainable_backbone)
    : graph_(graph), model_(model) {
  model.config.validate();
  for (const auto& [name, t] : model.tensors)
    leaves_[name] = trainable_backbone ? graph.parameter(t, name) : graph.frozen(t, name);
}

void BoundModel::attach(const ModuleId& id, const AdapterState& state) {
  adapters_[id] = lamda::bind(graph_, state, id.name());
  adapter_alpha_[id] = state.config.alpha;
}

void BoundModel::attach(const ModuleId& id, const LoraState& state) {
  loras_[id] = lamda::bind(graph_, state, id.name());
  adapter_alpha_[id] = state.alpha;
}

Var BoundModel::tensor(const std::string& name) const {
  auto it = leaves_.find(name);
  if (it == leaves_.end()) throw ConfigError("model has no tensor " + name);
  return it->second;
}

Var BoundModel::linear(const ModuleId& id, Var x) const {
  Var y;
  if (auto a = adapters_.find(id); a != adapters_.end()) {
    y = forward(graph_, a->second, adapter_alpha_.at(id), x, id.name());
  } else if (auto l = loras_.find(id); l != loras_.end()) {
    y = forward(graph_, l->second, adapter_alpha_.at(id), x, id.name());
  } else {
    y = matmul(x, tensor(weight_name(id)));
  }
  return add_bias(y, tensor(bias_name(id)));
}

Var mhsa_forward(const BoundModel& model, std::size_t layer, Var x, std::size_t batch,
                 std::size_t seq) {
  const auto& cfg = model.config();
  if (x.value().ndim() != 2 || x.value().rows() != batch * seq ||
      x.value().cols() != cfg.d_model) {
    throw DimensionError("mhsa_forward: input " + shape_string(x.value().shape()) +
                         " is not " + std::to_string(batch * seq) + "x" +
                         std::to_string(cfg.d_model));
  }
  const Var q = model.linear({layer, ModuleKind::Q}, x);
  const Var k = model.linear({layer, ModuleKind::K}, x);
  const Var v = model.linear({layer, ModuleKind::V}, x);
  const std::size_t dh = cfg.head_dim();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  std::vector<Var> rows;
  rows.reserve(batch);
  for (std::size_t s = 0; s < batch; ++s) {
    std::vector<Var> heads;
    heads.reserve(cfg.heads);
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      const Var qh = slice(q, s * seq, seq, h * dh, dh);
      const Var kh = slice(k, s * seq, seq, h * dh, dh);
      const Var vh = slice(v, s * seq, seq, h * dh, dh);
      const Var p = softmax_rows(scale(matmul(qh, transpose(kh)), inv_sqrt), cfg.causal);
      heads.push_back(matmul(p, vh));
    }
    rows.push_back(cfg.heads == 1 ? heads[0] : concat_cols(heads));
  }
  const Var concat = batch == 1 ? rows[0] : concat_rows(rows);
  return model.linear({layer, ModuleKind::O}, concat);
}

Var block_forward(const BoundModel& model, std::size_t layer, Var x, std::size_t batch,
                  std::size_t seq) {
  const std::string p = "layers." + std::to_string(layer);
  const Var x1 = layer_norm(add(x, mhsa_forward(model, layer, x, batch, seq)),
                            model.tensor(p + ".ln1.gain"), model.tensor(p + ".ln1.bias"));
  const Var hidden = gelu(model.linear({layer, ModuleKind::FFN1}, x1));
  const Var ffn = model.linear({layer, ModuleKind::FFN2}, hidden);
  return layer_norm(add(x1, ffn), model.tensor(p + ".ln2.gain"), model.tensor(p + ".ln2.bias"));
}

Var model_forward(const BoundModel& model, std::span<const int> ids, std::size_t batch,
                  std::size_t seq) {
  const auto& cfg = model.config();
  if (ids.size() != batch * seq) {
    throw DimensionError("model_forward: " + std::to_string(ids.size()) + " ids for " +
                         std::to_string(batch) + " sequences of " + std::to_string(seq));
  }
  if (seq > cfg.context) {
    throw DimensionError("model_forward: sequence length " + std::to_string(seq) +
                         " exceeds context " + std::to_string(cfg.context));
  }
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab)
      throw DimensionError("model_forward: token id " + std::to_string(id) + " outside vocab");
  }
  std::vector<int> positions(batch * seq);
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(i % seq);
  Var h = add(embedding(model.tensor("embed.token"), ids),
              embedding(model.tensor("embed.position"), positions));
  for (std::size_t l = 0; l < cfg.layers; ++l) h = block_forward(model, l, h, batch, seq);
  return add_bias(matmul(h, model.tensor("head.weight")), model.tensor("head.bias"));
}

Tensor mhsa_forward(const ToyModel& model, std::size_t layer, const Tensor& x) {
  Graph g;
  BoundModel bound(g, model, false);
  return mhsa_forward(bound, layer, g.input(x), 1, x.rows()).value();
}

Tensor model_logits(const ToyModel& model, std::span<const int> ids, std::size_t batch,
                    std::size_t seq) {
  Graph g;
  BoundModel bound(g, model, false);
  return model_forward(bound, ids, batch, seq).value();
}

}  // namespace lamda
