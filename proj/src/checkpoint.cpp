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

#include "lamda/checkpoint.hpp"

#include <cmath>
#include <set>

#include "lamda/error.hpp"

namespace lamda {

namespace {

ContainerEntry meta(std::string name, std::initializer_list<double> values) {
  return {std::move(name), DType::f64, Tensor({values.size()}, std::vector<double>(values))};
}

ContainerEntry weight(std::string name, const Tensor& t) {
  return {std::move(name), storage_dtype(), t};
}

const Tensor& meta_values(const WeightContainer& c, const std::string& name, std::size_t n) {
  const Tensor& t = find_entry(c, name).tensor;
  if (t.size() != n) {
    throw FormatError("checkpoint entry " + name + " holds " + std::to_string(t.size()) +
                      " values, expected " + std::to_string(n));
  }
  return t;
}

std::size_t as_count(double v, const std::string& what) {
  if (!(v >= 0.0) || v != std::floor(v) || v > 9007199254740992.0)
    throw FormatError("checkpoint: bad " + what);
  return static_cast<std::size_t>(v);
}

Tensor shaped_like(const WeightContainer& c, const std::string& name, const Tensor& like) {
  const Tensor& t = find_entry(c, name).tensor;
  if (t.shape() != like.shape()) {
    throw FormatError("checkpoint tensor " + name + " has shape " + shape_string(t.shape()) +
                      ", expected " + shape_string(like.shape()));
  }
  return t;
}

}  // namespace

WeightContainer model_to_container(const ToyModel& model) {
  WeightContainer out;
  for (const auto& [name, t] : model.tensors) out.push_back(weight(name, t));
  return out;
}

ToyModel model_from_container(const WeightContainer& container,
                              const ToyTransformerConfig& config) {
  ToyModel m = init_toy_model(config, 0);  // names and shapes only
  std::set<std::string> expected;
  for (auto& [name, t] : m.tensors) {
    t = shaped_like(container, name, t);
    expected.insert(name);
  }
  for (const auto& e : container) {
    if (!expected.count(e.name))
      throw FormatError("backbone container has unexpected tensor " + e.name);
  }
  return m;
}

WeightContainer make_checkpoint(const Trainer& trainer, std::uint64_t config_hash) {
  WeightContainer out;
  const auto& cfg = trainer.model().config;
  out.push_back(meta("meta.step", {double(trainer.step_index())}));
  out.push_back(meta("meta.adam_step", {double(trainer.optimizer().step_count())}));
  out.push_back(meta("meta.config_hash",
                     {double(config_hash >> 32), double(config_hash & 0xFFFFFFFFu)}));
  out.push_back(meta("meta.model", {double(cfg.layers), double(cfg.d_model), double(cfg.heads),
                                    double(cfg.ffn), double(cfg.vocab), double(cfg.context),
                                    cfg.causal ? 1.0 : 0.0}));
  for (const auto& [name, t] : trainer.model().tensors) out.push_back(weight("model." + name, t));
  for (const auto& [id, st] : trainer.adapters()) {
    const std::string p = "adapter." + id.name();
    out.push_back(meta("meta." + p, {double(st.config.rank), st.config.alpha,
                                     double(static_cast<int>(st.config.init)),
                                     double(static_cast<int>(st.config.freeze)),
                                     double(st.trainable_rows)}));
    out.push_back(weight(p + ".W_res", st.residual));
    out.push_back(weight(p + ".A", st.a));
    out.push_back(weight(p + ".S", st.s));
    out.push_back(weight(p + ".B", st.b));
  }
  for (const auto& [id, st] : trainer.loras()) {
    const std::string p = "lora." + id.name();
    out.push_back(weight(p + ".W", st.w));
    out.push_back(weight(p + ".A", st.a));
    out.push_back(weight(p + ".B", st.b));
  }
  for (const auto& [name, mom] : trainer.optimizer().moments()) {
    out.push_back(weight("adam." + name + ".m", Tensor({mom.rows, mom.cols}, mom.m)));
    out.push_back(weight("adam." + name + ".v", Tensor({mom.rows, mom.cols}, mom.v)));
  }
  return out;
}

void restore_checkpoint(Trainer& trainer, const WeightContainer& c, std::uint64_t config_hash) {
  const Tensor& hash = meta_values(c, "meta.config_hash", 2);
  const std::uint64_t stored = (static_cast<std::uint64_t>(hash[0]) << 32) |
                               static_cast<std::uint64_t>(hash[1]);
  if (stored != config_hash) {
    throw ConfigError("checkpoint was written by a different run configuration");
  }
  const std::size_t step = as_count(meta_values(c, "meta.step", 1)[0], "step");
  const std::size_t adam_step = as_count(meta_values(c, "meta.adam_step", 1)[0], "adam step");

  ToyModel model = trainer.model();
  for (auto& [name, t] : model.tensors) t = shaped_like(c, "model." + name, t);

  auto adapters = trainer.adapters();
  for (auto& [id, st] : adapters) {
    const std::string p = "adapter." + id.name();
    const Tensor& m = meta_values(c, "meta." + p, 5);
    if (as_count(m[0], "rank") != st.config.rank || m[1] != st.config.alpha ||
        m[2] != double(static_cast<int>(st.config.init)) ||
        m[3] != double(static_cast<int>(st.config.freeze))) {
      throw FormatError("checkpoint adapter " + id.name() + " does not match the run");
    }
    st.trainable_rows = as_count(m[4], "trainable rows");
    if (st.trainable_rows > st.config.rank) throw FormatError("checkpoint: too many live rows");
    st.residual = shaped_like(c, p + ".W_res", st.residual);
    st.a = shaped_like(c, p + ".A", st.a);
    st.s = shaped_like(c, p + ".S", st.s);
    st.b = shaped_like(c, p + ".B", st.b);
  }
  auto loras = trainer.loras();
  for (auto& [id, st] : loras) {
    const std::string p = "lora." + id.name();
    st.w = shaped_like(c, p + ".W", st.w);
    st.a = shaped_like(c, p + ".A", st.a);
    st.b = shaped_like(c, p + ".B", st.b);
  }

  std::map<std::string, Adam::Moments> moments;
  for (const auto& e : c) {
    if (e.name.rfind("adam.", 0) != 0 || e.name.size() < 7 ||
        e.name.compare(e.name.size() - 2, 2, ".m") != 0)
      continue;
    const std::string param = e.name.substr(5, e.name.size() - 7);
    const Tensor& v = find_entry(c, "adam." + param + ".v").tensor;
    if (e.tensor.ndim() != 2 || v.shape() != e.tensor.shape())
      throw FormatError("checkpoint moments of " + param + " are malformed");
    Adam::Moments mom;
    mom.rows = e.tensor.rows();
    mom.cols = e.tensor.cols();
    mom.m.assign(e.tensor.data().begin(), e.tensor.data().end());
    mom.v.assign(v.data().begin(), v.data().end());
    moments[param] = std::move(mom);
  }
  trainer.restore(step, std::move(model), std::move(adapters), std::move(loras), adam_step,
                  std::move(moments));
}

}  // namespace lamda
