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

#include "lamda/run_config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lamda/checkpoint.hpp"
#include "lamda/error.hpp"
#include "lamda/json_util.hpp"

namespace lamda {

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string resolve(const std::string& base, const std::string& path) {
  std::filesystem::path p(path);
  return p.is_absolute() ? path : (std::filesystem::path(base) / p).string();
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

FloatMode float_mode_from_env(FloatMode fallback) {
  const char* v = std::getenv("LDA_FLOAT_MODE");
  if (v == nullptr || *v == '\0') return fallback;
  return parse_float_mode(v);
}

RunConfigFile parse_run_config(const std::string& text, const std::string& base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run config is not valid JSON: ") + e.what());
  }
  constexpr const char* ctx = "run config";
  reject_unknown_keys(doc,
                      {"method", "rank", "budget", "reverse_allocation", "alpha", "init",
                       "ti_fraction", "schedule", "kinds", "total_steps", "learning_rate", "beta1",
                       "beta2", "eps", "batch", "seed", "task", "prompt_len", "corpus",
                       "eval_batches", "eval_every", "float_mode", "model", "backbone",
                       "pretrain"},
                      ctx);
  RunConfigFile out;
  out.hash = fnv1a64(doc.dump());
  TrainRunConfig& run = out.run;

  run.method = parse_method(require<std::string>(doc, "method", ctx));
  run.rank = optional<std::size_t>(doc, "rank", run.rank, ctx);
  if (doc.contains("budget")) {
    RankBudget b;
    b.ranks = require<std::vector<std::size_t>>(doc, "budget", ctx);
    if (b.ranks.empty()) throw ConfigError("run config: empty budget");
    std::size_t total = 0;
    for (auto r : b.ranks) total += r;
    b.target = total / b.ranks.size();
    b.validate();
    run.budget = b;
  }
  run.reverse_allocation = optional<bool>(doc, "reverse_allocation", false, ctx);
  run.alpha = optional<double>(doc, "alpha", run.alpha, ctx);
  run.init = parse_init_mode(optional<std::string>(doc, "init", "spectral_top", ctx));
  run.ti_fraction = optional<double>(doc, "ti_fraction", run.ti_fraction, ctx);
  const auto schedule = optional<std::string>(doc, "schedule", "linear", ctx);
  if (schedule == "linear") {
    run.schedule = ScheduleVariant::linear;
  } else if (schedule == "literal") {
    run.schedule = ScheduleVariant::literal;
  } else {
    throw ConfigError("run config: schedule must be 'linear' or 'literal'");
  }
  if (doc.contains("kinds")) {
    run.kinds.clear();
    for (const auto& k : require<std::vector<std::string>>(doc, "kinds", ctx))
      run.kinds.push_back(parse_module_kind(k));
  }
  run.total_steps = require<std::size_t>(doc, "total_steps", ctx);
  run.adam.learning_rate = optional<double>(doc, "learning_rate", run.adam.learning_rate, ctx);
  run.adam.beta1 = optional<double>(doc, "beta1", run.adam.beta1, ctx);
  run.adam.beta2 = optional<double>(doc, "beta2", run.adam.beta2, ctx);
  run.adam.eps = optional<double>(doc, "eps", run.adam.eps, ctx);
  run.task.batch = optional<std::size_t>(doc, "batch", run.task.batch, ctx);
  run.seed = optional<std::uint64_t>(doc, "seed", 0, ctx);
  run.task.task = parse_task(require<std::string>(doc, "task", ctx));
  run.task.prompt_len = optional<std::size_t>(doc, "prompt_len", run.task.prompt_len, ctx);
  if (doc.contains("corpus"))
    run.task.corpus_text = read_text(resolve(base_dir, require<std::string>(doc, "corpus", ctx)));
  run.eval_batches = optional<std::size_t>(doc, "eval_batches", run.eval_batches, ctx);
  run.eval_every = optional<std::size_t>(doc, "eval_every", run.eval_every, ctx);
  out.float_mode = parse_float_mode(optional<std::string>(doc, "float_mode", "f32", ctx));

  if (doc.contains("model")) {
    const auto& m = doc["model"];
    constexpr const char* mctx = "run config model";
    reject_unknown_keys(m, {"layers", "d_model", "heads", "ffn", "vocab", "context", "causal"},
                        mctx);
    auto& c = run.model;
    c.layers = optional<std::size_t>(m, "layers", c.layers, mctx);
    c.d_model = optional<std::size_t>(m, "d_model", c.d_model, mctx);
    c.heads = optional<std::size_t>(m, "heads", c.heads, mctx);
    c.ffn = optional<std::size_t>(m, "ffn", c.ffn, mctx);
    c.vocab = optional<std::size_t>(m, "vocab", c.vocab, mctx);
    c.context = optional<std::size_t>(m, "context", c.context, mctx);
    c.causal = optional<bool>(m, "causal", c.causal, mctx);
  }
  run.task.vocab = run.model.vocab;

  if (doc.contains("backbone") == doc.contains("pretrain"))
    throw ConfigError("run config: give exactly one of 'backbone' and 'pretrain'");
  if (doc.contains("backbone")) {
    out.backbone_path = resolve(base_dir, require<std::string>(doc, "backbone", ctx));
  } else {
    const auto& p = doc["pretrain"];
    constexpr const char* pctx = "run config pretrain";
    reject_unknown_keys(p, {"task", "steps", "learning_rate", "seed"}, pctx);
    PretrainSpec spec;
    spec.task = parse_task(optional<std::string>(p, "task", "copy", pctx));
    spec.steps = optional<std::size_t>(p, "steps", spec.steps, pctx);
    spec.learning_rate = optional<double>(p, "learning_rate", spec.learning_rate, pctx);
    spec.seed = optional<std::uint64_t>(p, "seed", spec.seed, pctx);
    if (spec.steps == 0) throw ConfigError("run config pretrain: steps must be positive");
    if (spec.task == TaskId::corpus && run.task.corpus_text.empty())
      throw ConfigError("run config pretrain: corpus task needs 'corpus'");
    out.pretrain = spec;
  }
  run.validate();
  return out;
}

RunConfigFile load_run_config(const std::string& path) {
  const auto base = std::filesystem::path(path).parent_path().string();
  return parse_run_config(read_text(path), base.empty() ? "." : base);
}

ToyModel resolve_backbone(const RunConfigFile& config) {
  if (config.backbone_path)
    return model_from_container(read_container(*config.backbone_path), config.run.model);
  TrainRunConfig pre = config.run;
  pre.method = Method::full;
  pre.task.task = config.pretrain->task;
  pre.total_steps = config.pretrain->steps;
  pre.adam = AdamConfig{};
  pre.adam.learning_rate = config.pretrain->learning_rate;
  pre.seed = config.pretrain->seed;
  pre.eval_every = 0;
  return pretrain(pre);
}

}  // namespace lamda
