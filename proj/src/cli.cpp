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

#include "lamda/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "lamda/accounting.hpp"
#include "lamda/allocator.hpp"
#include "lamda/checkpoint.hpp"
#include "lamda/container.hpp"
#include "lamda/error.hpp"
#include "lamda/json_util.hpp"
#include "lamda/run_config.hpp"
#include "lamda/spectral.hpp"

namespace lamda {

namespace {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

nlohmann::json parse_json_file(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// Writes to `path`, or to `out` when the path is empty or "-".
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
  } else {
    write_file(path, text);
  }
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- analyze

struct AnalyzeArgs {
  std::string weights;
  std::string ranks;
  std::size_t target = 0;
  std::vector<std::string> modules;
  std::size_t max_rank = 32;
  std::string energy_csv;
  std::string out;
};

void analyze(const AnalyzeArgs& a, std::ostream& out) {
  RankBudget budget;
  budget = parse_rank_budget(a.ranks);
  if (a.target != 0 && a.target != budget.target) {
    throw ConfigError("--target " + std::to_string(a.target) + " is not the mean " +
                      std::to_string(budget.target) + " of --ranks");
  }
  const auto container = read_container(a.weights);
  std::map<ModuleId, Tensor> weights;
  if (a.modules.empty()) {
    for (const auto& e : container)
      if (auto id = parse_module_id(e.name)) weights[*id] = e.tensor;
    if (weights.empty()) throw ConfigError(a.weights + ": no layers.<l>.<KIND> tensors found");
  } else {
    for (const auto& name : a.modules) {
      auto id = parse_module_id(name);
      if (!id) throw ConfigError("'" + name + "' is not a module name (layers.<l>.<KIND>)");
      const ContainerEntry* hit = nullptr;
      for (const auto& e : container)
        if (parse_module_id(e.name) == id) hit = &e;
      if (hit == nullptr) throw ConfigError(a.weights + ": missing tensor for module " + name);
      weights[*id] = hit->tensor;
    }
  }

  const auto scores = score_modules(weights, budget);
  if (!a.energy_csv.empty()) {
    std::ostringstream csv;
    csv << "module,r,normalized_energy\n";
    for (const auto& [id, w] : weights) {
      const auto dec = svd(w);
      const double total = total_energy(dec.sigma);
      const std::size_t upto = std::min(a.max_rank, dec.sigma.size());
      for (std::size_t r = 1; r <= upto; ++r) {
        const double e = total > 0.0 ? energy_score(dec.sigma, r) / total : 0.0;
        csv << id.name() << ',' << r << ',' << fmt17(e) << '\n';
      }
    }
    write_file(a.energy_csv, csv.str());
  }
  nlohmann::ordered_json doc;
  doc["ranks"] = budget.ranks;
  doc["target"] = budget.target;
  auto& arr = doc["scores"] = nlohmann::ordered_json::array();
  for (const auto& s : scores) {
    arr.push_back({{"module", s.module.name()},
                   {"e_r1", s.e_r1},
                   {"e_rs", s.e_rs},
                   {"e_rt", s.e_rt},
                   {"nu", s.nu}});
  }
  emit(a.out, doc.dump(2), out);
}

// ---- plan

RankBudget budget_from_json(const nlohmann::json& doc, const std::string& path) {
  reject_unknown_keys(doc, {"ranks", "target"}, path);
  RankBudget b;
  b.ranks = require<std::vector<std::size_t>>(doc, "ranks", path);
  if (b.ranks.empty()) throw ConfigError(path + ": empty rank list");
  std::size_t total = 0;
  for (auto r : b.ranks) total += r;
  b.target = optional<std::size_t>(doc, "target", total / b.ranks.size(), path);
  b.validate();
  return b;
}

std::vector<ModuleScore> scores_from_json(const nlohmann::json& doc, const std::string& path) {
  const nlohmann::json* list = &doc;
  if (doc.is_object()) {
    reject_unknown_keys(doc, {"ranks", "target", "scores"}, path);
    if (!doc.contains("scores")) throw ConfigError(path + ": missing key 'scores'");
    list = &doc["scores"];
  }
  if (!list->is_array()) throw ConfigError(path + ": scores must be an array");
  std::vector<ModuleScore> out;
  for (const auto& item : *list) {
    reject_unknown_keys(item, {"module", "e_r1", "e_rs", "e_rt", "nu"}, path);
    ModuleScore s;
    const auto name = require<std::string>(item, "module", path);
    auto id = parse_module_id(name);
    if (!id) throw ConfigError(path + ": bad module name '" + name + "'");
    s.module = *id;
    s.e_r1 = optional<double>(item, "e_r1", 0.0, path);
    s.e_rs = optional<double>(item, "e_rs", 0.0, path);
    s.e_rt = optional<double>(item, "e_rt", 0.0, path);
    s.nu = require<double>(item, "nu", path);
    out.push_back(s);
  }
  return out;
}

// ---- count

RankMap ranks_from_plan(const std::string& path, const ModelSpec& spec) {
  const auto doc = parse_json_file(path);
  if (!doc.contains("modules") || !doc["modules"].is_array())
    throw ConfigError(path + ": missing 'modules' array");
  RankMap ranks;
  for (const auto& m : doc["modules"]) {
    const auto name = require<std::string>(m, "module", path);
    auto id = parse_module_id(name);
    if (!id) throw ConfigError(path + ": bad module name '" + name + "'");
    ranks[*id] = require<std::size_t>(m, "rank", path);
  }
  for (const auto& id : spec.modules())
    if (!ranks.count(id)) throw ConfigError(path + ": no rank for module " + id.name());
  return ranks;
}

// ---- finetune

std::string metrics_csv(const std::vector<StepMetrics>& steps) {
  std::ostringstream out;
  out << "step,loss,live_params,stored_activation_floats,optimizer_state_scalars,eval_loss\n";
  for (const auto& m : steps) {
    out << m.step << ',' << fmt17(m.loss) << ',' << m.live_params << ','
        << m.stored_activation_floats << ',' << m.optimizer_state_scalars << ','
        << (m.eval_loss ? fmt17(*m.eval_loss) : std::string()) << '\n';
  }
  return out.str();
}

void finetune(const std::string& config_path, const std::string& out_dir,
              const std::string& save_backbone, std::ostream& out) {
  const RunConfigFile cfg = load_run_config(config_path);
  ScopedFloatMode mode(float_mode_from_env(cfg.float_mode));
  const ToyModel backbone = resolve_backbone(cfg);
  if (!save_backbone.empty()) write_container(save_backbone, model_to_container(backbone));
  Trainer trainer(cfg.run, backbone);
  const TrainResult result = train(trainer);

  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "metrics.csv", metrics_csv(result.steps));
  write_container(fs::path(out_dir) / "checkpoint.ldwt", make_checkpoint(trainer, cfg.hash));
  nlohmann::ordered_json summary;
  summary["method"] = to_string(cfg.run.method);
  summary["task"] = to_string(cfg.run.task.task);
  summary["float_mode"] = std::string(to_string(float_mode()));
  summary["steps"] = result.steps.size();
  summary["initial_eval_loss"] = result.initial_eval_loss;
  summary["final_eval_loss"] = result.final_eval_loss;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(cfg.hash));
  summary["config_hash"] = hash;
  if (trainer.plan()) summary["plan"] = nlohmann::json::parse(plan_to_json(*trainer.plan()));
  write_file(fs::path(out_dir) / "summary.json", summary.dump(2) + "\n");
  out << "initial_eval_loss " << fmt17(result.initial_eval_loss) << "\nfinal_eval_loss "
      << fmt17(result.final_eval_loss) << '\n';
}

// ---- report

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string report(const std::string& runs_dir) {
  std::vector<fs::path> runs;
  if (!fs::is_directory(runs_dir)) throw ConfigError(runs_dir + " is not a directory");
  for (const auto& e : fs::directory_iterator(runs_dir))
    if (e.is_directory() && fs::exists(e.path() / "metrics.csv")) runs.push_back(e.path());
  std::sort(runs.begin(), runs.end());
  if (runs.empty()) throw ConfigError(runs_dir + ": no run directories with metrics.csv");

  const std::vector<std::string> columns{"loss", "live_params", "stored_activation_floats"};
  std::map<std::size_t, std::vector<std::string>> table;  // step -> cells
  const std::size_t width = runs.size() * columns.size();
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto rows = read_csv(runs[r] / "metrics.csv");
    if (rows.empty()) throw FormatError((runs[r] / "metrics.csv").string() + " is empty");
    std::vector<std::size_t> idx;
    for (const auto& c : columns) {
      auto it = std::find(rows[0].begin(), rows[0].end(), c);
      if (it == rows[0].end())
        throw FormatError((runs[r] / "metrics.csv").string() + ": no column " + c);
      idx.push_back(static_cast<std::size_t>(it - rows[0].begin()));
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
      std::size_t step = 0;
      try {
        step = std::stoul(rows[i].at(0));
      } catch (const std::exception&) {
        throw FormatError((runs[r] / "metrics.csv").string() + ": bad step on line " +
                          std::to_string(i + 1));
      }
      auto& cells = table[step];
      cells.resize(width);
      for (std::size_t c = 0; c < columns.size(); ++c)
        cells[r * columns.size() + c] = idx[c] < rows[i].size() ? rows[i][idx[c]] : "";
    }
  }
  std::ostringstream out;
  out << "step";
  for (const auto& run : runs)
    for (const auto& c : columns) out << ',' << run.filename().string() << '.' << c;
  out << '\n';
  for (const auto& [step, cells] : table) {
    out << step;
    for (const auto& c : cells) out << ',' << c;
    out << '\n';
  }
  return out.str();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-dimensional adapter toolkit: spectra, rank plans, cost model, toy training"};
  app.require_subcommand(1);

  AnalyzeArgs an;
  auto* analyze_cmd = app.add_subcommand("analyze", "Energy scores of the modules in a weight file");
  analyze_cmd->add_option("--weights", an.weights, "Weight container")->required();
  analyze_cmd->add_option("--ranks", an.ranks, "Candidate ranks r1,...,rS")->required();
  analyze_cmd->add_option("--target", an.target, "Target rank (mean of --ranks)");
  analyze_cmd->add_option("--modules", an.modules, "Only these modules (layers.<l>.<KIND>)")
      ->delimiter(',');
  analyze_cmd->add_option("--max-rank", an.max_rank, "Largest r in the energy table");
  analyze_cmd->add_option("--energy-csv", an.energy_csv, "Write the normalized energy table");
  analyze_cmd->add_option("--out", an.out, "Scores JSON (default stdout)");

  std::string scores_path, budget_path, plan_out;
  bool reverse = false;
  auto* plan_cmd = app.add_subcommand("plan", "Quantile rank allocation from module scores");
  plan_cmd->add_option("--scores", scores_path, "Scores JSON from analyze")->required();
  plan_cmd->add_option("--budget", budget_path, "Budget JSON {\"ranks\": [...]}")->required();
  plan_cmd->add_flag("--reverse", reverse, "Give low-score modules the small ranks");
  plan_cmd->add_option("--out", plan_out, "Plan JSON (default stdout)");

  std::string preset, method_name = "lamda", count_plan, format = "json", count_out;
  std::size_t rank = 0;
  double ti = 0.0;
  auto* count_cmd = app.add_subcommand("count", "Trainable-parameter and memory cost model");
  count_cmd->add_option("--model-preset", preset, "Preset name or JSON file")->required();
  count_cmd->add_option("--method", method_name, "full, lora, lamda or lamda++");
  count_cmd->add_option("--rank", rank, "Rank for lora / lamda");
  count_cmd->add_option("--ti", ti, "Freeze horizon as a fraction of training (lamda)");
  count_cmd->add_option("--plan", count_plan, "Rank plan JSON (lamda++)");
  count_cmd->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  count_cmd->add_option("--out", count_out, "Output file (default stdout)");

  std::string config_path, out_dir, save_backbone;
  auto* finetune_cmd = app.add_subcommand("finetune", "Train the toy model from a run config");
  finetune_cmd->add_option("--config", config_path, "Run config JSON")->required();
  finetune_cmd->add_option("--out", out_dir, "Output directory")->required();
  finetune_cmd->add_option("--save-backbone", save_backbone, "Also write the backbone weights");

  std::string runs_dir, report_out;
  auto* report_cmd = app.add_subcommand("report", "Merge metrics of several runs by step");
  report_cmd->add_option("--runs", runs_dir, "Directory of run directories")->required();
  report_cmd->add_option("--out", report_out, "Merged CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*analyze_cmd) {
      analyze(an, out);
    } else if (*plan_cmd) {
      const auto scores = scores_from_json(parse_json_file(scores_path), scores_path);
      const auto budget = budget_from_json(parse_json_file(budget_path), budget_path);
      emit(plan_out, plan_to_json(allocate(scores, budget, reverse)), out);
    } else if (*count_cmd) {
      const ModelSpec spec = load_preset(preset);
      const Method method = parse_method(method_name);
      CostReport rep;
      switch (method) {
        case Method::full: rep = count_full(spec); break;
        case Method::lora: rep = count_lora(spec, rank); break;
        case Method::lamda:
          if (rank == 0) throw ConfigError("count: --rank is required for lamda");
          rep = count_lamda_effective(spec, rank, ti);
          break;
        case Method::lamda_pp:
          if (count_plan.empty()) throw ConfigError("count: --plan is required for lamda++");
          rep = count_lamda_effective(spec, ranks_from_plan(count_plan, spec), ti);
          rep.method = Method::lamda_pp;
          break;
      }
      emit(count_out, format == "csv" ? report_to_csv(rep) : report_to_json(rep), out);
    } else if (*finetune_cmd) {
      finetune(config_path, out_dir, save_backbone, out);
    } else if (*report_cmd) {
      emit(report_out, report(runs_dir), out);
    }
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace lamda
