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

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "lamda/module_id.hpp"
#include "lamda/tensor.hpp"

namespace lamda {

// Candidate ranks r_1 < ... < r_S whose mean is the target rank.
struct RankBudget {
  std::vector<std::size_t> ranks;
  std::size_t target = 0;

  std::size_t smallest() const { return ranks.front(); }
  std::size_t largest() const { return ranks.back(); }
  void validate() const;
};

// Parses "16,24,32,40,48" and derives the target from the mean.
RankBudget parse_rank_budget(const std::string& csv);

struct ModuleScore {
  ModuleId module;
  double e_r1 = 0.0;  // top-r_1 energy of the pre-trained weight
  double e_rs = 0.0;  // top-r_S energy
  double e_rt = 0.0;  // top-r_T energy
  double nu = 0.0;    // (e_rs - e_r1) / e_rt, 0 for an all-zero weight
};

struct RankPlan {
  std::map<ModuleId, std::size_t> ranks;
  std::vector<ModuleScore> order;  // ascending nu, after tie-breaking
  double achieved_mean = 0.0;
  std::size_t target = 0;
  bool reversed = false;
};

// Scores every module from its singular values. Modules are independent, so
// the SVDs run on worker threads. Output is sorted by module id.
std::vector<ModuleScore> score_modules(const std::map<ModuleId, Tensor>& weights,
                                       const RankBudget& budget);

// Sorts by ascending nu (ties by layer, then kind order) and hands quantile q
// of L modules, i.e. positions [floor(qL/S), floor((q+1)L/S)), rank r_{S-q}.
// `reverse` gives the low-nu modules the small ranks instead.
RankPlan allocate(std::vector<ModuleScore> scores, const RankBudget& budget,
                  bool reverse = false);

// {"target": .., "achieved_mean": .., "modules": [{"module", "nu", "rank"}, ..]}
// Modules are listed in allocation order.
std::string plan_to_json(const RankPlan& plan);

}  // namespace lamda
