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

#include "lamda/allocator.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "lamda/error.hpp"
#include "lamda/spectral.hpp"

namespace lamda {

void RankBudget::validate() const {
  if (ranks.empty()) throw ConfigError("rank budget needs at least one candidate rank");
  if (ranks.front() < 1) throw ConfigError("candidate ranks must be positive");
  for (std::size_t i = 1; i < ranks.size(); ++i) {
    if (ranks[i] <= ranks[i - 1])
      throw ConfigError("candidate ranks must be strictly ascending");
  }
  const std::size_t total = std::accumulate(ranks.begin(), ranks.end(), std::size_t{0});
  if (total != target * ranks.size()) {
    throw ConfigError("candidate ranks average to " +
                      std::to_string(static_cast<double>(total) / ranks.size()) +
                      ", not the target rank " + std::to_string(target));
  }
}

RankBudget parse_rank_budget(const std::string& csv) {
  RankBudget b;
  std::stringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      b.ranks.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ConfigError("bad candidate rank '" + item + "'");
    }
  }
  if (b.ranks.empty()) throw ConfigError("empty rank budget");
  const std::size_t total = std::accumulate(b.ranks.begin(), b.ranks.end(), std::size_t{0});
  b.target = total / b.ranks.size();
  b.validate();
  return b;
}

namespace {

ModuleScore score_one(const ModuleId& id, const Tensor& w, const RankBudget& budget) {
  if (w.ndim() != 2) throw DimensionError(id.name() + ": weight must be a matrix");
  const std::size_t k = std::min(w.rows(), w.cols());
  if (budget.largest() > k) {
    throw ConfigError(id.name() + ": candidate rank " + std::to_string(budget.largest()) +
                      " exceeds min dimension " + std::to_string(k) + " of its " +
                      shape_string(w.shape()) + " weight");
  }
  const SpectralDecomposition dec = svd(w);
  ModuleScore s;
  s.module = id;
  s.e_r1 = energy_score(dec.sigma, budget.smallest());
  s.e_rs = energy_score(dec.sigma, budget.largest());
  s.e_rt = energy_score(dec.sigma, budget.target);
  s.nu = s.e_rt > 0.0 ? (s.e_rs - s.e_r1) / s.e_rt : 0.0;
  return s;
}

}  // namespace

std::vector<ModuleScore> score_modules(const std::map<ModuleId, Tensor>& weights,
                                       const RankBudget& budget) {
  budget.validate();
  std::vector<std::pair<ModuleId, const Tensor*>> jobs;
  for (const auto& [id, w] : weights) jobs.emplace_back(id, &w);
  std::vector<ModuleScore> out(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        out[i] = score_one(jobs[i].first, *jobs[i].second, budget);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads =
      std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  // Report the first failing module in id order so errors are deterministic.
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

RankPlan allocate(std::vector<ModuleScore> scores, const RankBudget& budget, bool reverse) {
  budget.validate();
  if (scores.empty()) throw ConfigError("rank allocation needs at least one module");
  std::stable_sort(scores.begin(), scores.end(), [](const ModuleScore& a, const ModuleScore& b) {
    if (a.nu != b.nu) return a.nu < b.nu;
    return a.module < b.module;
  });

  const std::size_t n = scores.size();
  const std::size_t s = budget.ranks.size();
  RankPlan plan;
  plan.target = budget.target;
  plan.reversed = reverse;
  std::size_t total = 0;
  for (std::size_t q = 0; q < s; ++q) {
    const std::size_t rank = reverse ? budget.ranks[q] : budget.ranks[s - 1 - q];
    for (std::size_t i = q * n / s; i < (q + 1) * n / s; ++i) {
      plan.ranks[scores[i].module] = rank;
      total += rank;
    }
  }
  plan.achieved_mean = static_cast<double>(total) / static_cast<double>(n);
  plan.order = std::move(scores);
  return plan;
}

std::string plan_to_json(const RankPlan& plan) {
  nlohmann::ordered_json doc;
  doc["target"] = plan.target;
  doc["achieved_mean"] = plan.achieved_mean;
  doc["reversed"] = plan.reversed;
  auto& mods = doc["modules"] = nlohmann::ordered_json::array();
  for (const auto& s : plan.order) {
    mods.push_back({{"module", s.module.name()}, {"nu", s.nu}, {"rank", plan.ranks.at(s.module)}});
  }
  return doc.dump(2);
}

}  // namespace lamda
