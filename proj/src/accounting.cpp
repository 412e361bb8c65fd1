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

#include "lamda/accounting.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lamda/error.hpp"
#include "lamda/json_util.hpp"

namespace lamda {

namespace {

std::string shortest(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

void ModelSpec::validate() const {
  if (layers == 0 || d_model == 0 || ffn == 0 || seq_len == 0 || batch == 0 ||
      bytes_per_scalar == 0) {
    throw ConfigError("model spec '" + name + "': all sizes must be positive");
  }
  if (kinds.empty()) throw ConfigError("model spec '" + name + "': no adapted module kinds");
}

std::size_t ModelSpec::d_in(ModuleKind kind) const {
  return kind == ModuleKind::FFN2 ? ffn : d_model;
}

std::size_t ModelSpec::d_out(ModuleKind kind) const {
  return kind == ModuleKind::FFN1 ? ffn : d_model;
}

std::vector<ModuleId> ModelSpec::modules() const {
  std::vector<ModuleKind> ordered;
  for (ModuleKind k : kAllModuleKinds)
    if (std::find(kinds.begin(), kinds.end(), k) != kinds.end()) ordered.push_back(k);
  std::vector<ModuleId> out;
  for (std::size_t l = 0; l < layers; ++l)
    for (ModuleKind k : ordered) out.push_back({l, k});
  return out;
}

ModelSpec model_spec_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model spec: ") + e.what());
  }
  constexpr const char* ctx = "model spec";
  reject_unknown_keys(doc, {"name", "layers", "d_model", "ffn", "kinds", "seq_len", "batch",
                            "bytes_per_scalar"},
                      ctx);
  ModelSpec s;
  s.name = optional<std::string>(doc, "name", "custom", ctx);
  s.layers = require<std::size_t>(doc, "layers", ctx);
  s.d_model = require<std::size_t>(doc, "d_model", ctx);
  s.ffn = require<std::size_t>(doc, "ffn", ctx);
  for (const auto& k : require<std::vector<std::string>>(doc, "kinds", ctx))
    s.kinds.push_back(parse_module_kind(k));
  s.seq_len = optional<std::size_t>(doc, "seq_len", 1, ctx);
  s.batch = optional<std::size_t>(doc, "batch", 1, ctx);
  s.bytes_per_scalar = optional<std::size_t>(doc, "bytes_per_scalar", 4, ctx);
  s.validate();
  return s;
}

std::string model_spec_to_json(const ModelSpec& spec) {
  nlohmann::ordered_json doc;
  doc["name"] = spec.name;
  doc["layers"] = spec.layers;
  doc["d_model"] = spec.d_model;
  doc["ffn"] = spec.ffn;
  auto& kinds = doc["kinds"] = nlohmann::ordered_json::array();
  for (ModuleKind k : spec.kinds) kinds.push_back(std::string(to_string(k)));
  doc["seq_len"] = spec.seq_len;
  doc["batch"] = spec.batch;
  doc["bytes_per_scalar"] = spec.bytes_per_scalar;
  return doc.dump(2);
}

ModelSpec load_preset(const std::string& name) {
  namespace fs = std::filesystem;
  fs::path path = name;
  if (path.extension() != ".json") path = fs::path(LAMDA_PRESET_DIR) / (name + ".json");
  std::ifstream in(path);
  if (!in) {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown model preset '" + name + "' (available: " + known + ")");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return model_spec_from_json(buf.str());
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& e : std::filesystem::directory_iterator(LAMDA_PRESET_DIR, ec))
    if (e.path().extension() == ".json") out.push_back(e.path().stem().string());
  std::sort(out.begin(), out.end());
  return out;
}

std::string to_string(Method method) {
  switch (method) {
    case Method::full: return "full";
    case Method::lora: return "lora";
    case Method::lamda: return "lamda";
    case Method::lamda_pp: return "lamda++";
  }
  return "?";
}

Method parse_method(const std::string& text) {
  for (Method m : {Method::full, Method::lora, Method::lamda, Method::lamda_pp})
    if (to_string(m) == text) return m;
  throw ConfigError("unknown method '" + text + "' (expected full, lora, lamda or lamda++)");
}

RankMap uniform_ranks(const ModelSpec& spec, std::size_t rank) {
  RankMap out;
  for (const auto& id : spec.modules()) out[id] = rank;
  return out;
}

namespace {

void check_rank(const ModelSpec& spec, const ModuleId& id, std::size_t rank) {
  const std::size_t k = std::min(spec.d_in(id.kind), spec.d_out(id.kind));
  if (rank > k) {
    throw ConfigError(id.name() + ": rank " + std::to_string(rank) + " exceeds min dimension " +
                      std::to_string(k));
  }
}

void finish(CostReport& r, const ModelSpec& spec) {
  for (const auto& m : r.modules) {
    r.trainable_params += m.trainable_params;
    r.activation_primary += m.activation_primary;
    r.activation_secondary += m.activation_secondary;
  }
  if (r.method == Method::lamda || r.method == Method::lamda_pp) {
    // f·Σ(r·d_out)/2 + Σr² from exact integer sums, one rounding at the end.
    std::uint64_t pmb = 0, lda = 0;
    for (const auto& m : r.modules) {
      pmb += m.rank * m.d_out;
      lda += m.rank * m.rank;
    }
    r.effective_params = r.ti_fraction * static_cast<double>(pmb) / 2.0 + static_cast<double>(lda);
  } else {
    r.effective_params = static_cast<double>(r.trainable_params);
  }
  r.gradient_bytes = r.trainable_params * spec.bytes_per_scalar;
  r.optimizer_state_scalars = 2 * r.trainable_params;
  r.optimizer_state_bytes = r.optimizer_state_scalars * spec.bytes_per_scalar;
}

ModuleCost module_cost(const ModelSpec& spec, const ModuleId& id, std::size_t rank) {
  ModuleCost c;
  c.module = id;
  c.d_in = spec.d_in(id.kind);
  c.d_out = spec.d_out(id.kind);
  c.rank = rank;
  return c;
}

}  // namespace

CostReport count_lora(const ModelSpec& spec, std::size_t rank) {
  spec.validate();
  CostReport r;
  r.method = Method::lora;
  r.model = spec.name;
  const std::uint64_t tokens = spec.batch * spec.seq_len;
  for (const auto& id : spec.modules()) {
    check_rank(spec, id, rank);
    ModuleCost c = module_cost(spec, id, rank);
    if (rank > 0) {
      c.trainable_params = (c.d_in + c.d_out) * rank;
      c.activation_primary = tokens * c.d_in;
      c.activation_secondary = tokens * rank;
    }
    c.effective_params = static_cast<double>(c.trainable_params);
    r.modules.push_back(c);
  }
  finish(r, spec);
  return r;
}

CostReport count_lamda_effective(const ModelSpec& spec, const RankMap& ranks,
                                 double ti_fraction) {
  spec.validate();
  if (!(ti_fraction >= 0.0 && ti_fraction <= 1.0))
    throw ConfigError("t_i fraction must lie in [0, 1]");
  CostReport r;
  r.method = Method::lamda;
  r.model = spec.name;
  r.ti_fraction = ti_fraction;
  const std::uint64_t tokens = spec.batch * spec.seq_len;
  for (const auto& id : spec.modules()) {
    auto it = ranks.find(id);
    if (it == ranks.end()) throw ConfigError("no rank given for module " + id.name());
    const std::size_t rank = it->second;
    check_rank(spec, id, rank);
    ModuleCost c = module_cost(spec, id, rank);
    const bool gradual = ti_fraction > 0.0 && rank > 0;
    c.trainable_params = rank * rank + (gradual ? rank * c.d_out : 0);
    c.effective_params = ti_fraction * static_cast<double>(rank * c.d_out) / 2.0 +
                         static_cast<double>(rank * rank);
    c.activation_primary = rank > 0 ? tokens * rank : 0;
    c.activation_secondary = gradual ? tokens * rank : 0;
    r.modules.push_back(c);
  }
  finish(r, spec);
  return r;
}

CostReport count_lamda_effective(const ModelSpec& spec, std::size_t rank, double ti_fraction) {
  return count_lamda_effective(spec, uniform_ranks(spec, rank), ti_fraction);
}

CostReport count_full(const ModelSpec& spec) {
  spec.validate();
  CostReport r;
  r.method = Method::full;
  r.model = spec.name;
  const std::uint64_t tokens = spec.batch * spec.seq_len;
  for (const auto& id : spec.modules()) {
    ModuleCost c = module_cost(spec, id, std::min(spec.d_in(id.kind), spec.d_out(id.kind)));
    c.trainable_params = c.d_in * c.d_out;
    c.effective_params = static_cast<double>(c.trainable_params);
    c.activation_primary = tokens * c.d_in;
    r.modules.push_back(c);
  }
  finish(r, spec);
  return r;
}

std::uint64_t activation_footprint(const ModelSpec& spec, Method method, std::size_t rank,
                                   bool include_secondary) {
  CostReport r;
  switch (method) {
    case Method::lora: r = count_lora(spec, rank); break;
    case Method::lamda:
    case Method::lamda_pp: r = count_lamda_effective(spec, rank, include_secondary ? 1.0 : 0.0); break;
    case Method::full: r = count_full(spec); break;
  }
  return include_secondary ? r.stored_activation_floats() : r.activation_primary;
}

std::uint64_t live_params_at(const ModelSpec& spec, const RankMap& ranks,
                             std::size_t freeze_iters, std::size_t total_iters, std::size_t t) {
  std::uint64_t total = 0;
  for (const auto& id : spec.modules()) {
    auto it = ranks.find(id);
    if (it == ranks.end()) throw ConfigError("no rank given for module " + id.name());
    const std::size_t rank = it->second;
    if (rank == 0) continue;
    const FreezeSchedule sched{rank, freeze_iters, total_iters};
    total += rank * rank + trainable_rows(sched, t) * spec.d_out(id.kind);
  }
  return total;
}

std::uint64_t optimizer_state_scalars_at(const ModelSpec& spec, const RankMap& ranks,
                                         std::size_t freeze_iters, std::size_t total_iters,
                                         std::size_t t) {
  return 2 * live_params_at(spec, ranks, freeze_iters, total_iters, t);
}

std::string report_to_json(const CostReport& r) {
  nlohmann::ordered_json doc;
  doc["model"] = r.model;
  doc["method"] = to_string(r.method);
  doc["ti_fraction"] = r.ti_fraction;
  doc["trainable_params"] = r.trainable_params;
  doc["effective_params"] = r.effective_params;
  doc["gradient_bytes"] = r.gradient_bytes;
  doc["optimizer_state_scalars"] = r.optimizer_state_scalars;
  doc["optimizer_state_bytes"] = r.optimizer_state_bytes;
  doc["activation_primary"] = r.activation_primary;
  doc["activation_secondary"] = r.activation_secondary;
  doc["stored_activation_floats"] = r.stored_activation_floats();
  auto& mods = doc["modules"] = nlohmann::ordered_json::array();
  for (const auto& m : r.modules) {
    mods.push_back({{"module", m.module.name()},
                    {"d_in", m.d_in},
                    {"d_out", m.d_out},
                    {"rank", m.rank},
                    {"trainable_params", m.trainable_params},
                    {"effective_params", m.effective_params},
                    {"activation_primary", m.activation_primary},
                    {"activation_secondary", m.activation_secondary}});
  }
  return doc.dump(2);
}

std::string report_to_csv(const CostReport& r) {
  std::ostringstream out;
  out << "module,d_in,d_out,rank,trainable_params,effective_params,activation_primary,"
         "activation_secondary\n";
  for (const auto& m : r.modules) {
    out << m.module.name() << ',' << m.d_in << ',' << m.d_out << ',' << m.rank << ','
        << m.trainable_params << ',' << shortest(m.effective_params) << ','
        << m.activation_primary << ',' << m.activation_secondary << '\n';
  }
  out << "total,,,," << r.trainable_params << ',' << shortest(r.effective_params) << ','
      << r.activation_primary << ',' << r.activation_secondary << '\n';
  return out.str();
}

}  // namespace lamda
