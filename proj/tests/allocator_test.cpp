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
#include <json.hpp>

#include "lamda/allocator.hpp"
#include "lamda/error.hpp"
#include "oracles.hpp"

using namespace lamda;

namespace {

const RankBudget kGlueBudget{{16, 24, 32, 40, 48}, 32};

ModuleScore score_of(std::size_t layer, ModuleKind kind, double nu) {
  ModuleScore s;
  s.module = {layer, kind};
  s.nu = nu;
  return s;
}

}  // namespace

TEST_CASE("RankBudget validation and parsing") {
  CHECK_NOTHROW(kGlueBudget.validate());
  CHECK_NOTHROW((RankBudget{{32, 48, 64, 80, 96}, 64}.validate()));
  CHECK_THROWS_AS((RankBudget{{16, 24, 32}, 30}.validate()), ConfigError);
  CHECK_THROWS_AS((RankBudget{{24, 16}, 20}.validate()), ConfigError);
  CHECK_THROWS_AS((RankBudget{{}, 0}.validate()), ConfigError);
  const auto b = parse_rank_budget("4,6,8,10,12");
  CHECK(b.target == 8);
  CHECK(b.ranks.size() == 5);
  CHECK_THROWS_AS(parse_rank_budget("4,x"), ConfigError);
  CHECK_THROWS_AS(parse_rank_budget("4,7"), ConfigError);  // mean 5.5
}

TEST_CASE("score_modules: concentrated and flat spectra") {
  ScopedFloatMode f64(FloatMode::f64);
  Rng rng(4);
  std::vector<double> top(48, 0.0);
  for (std::size_t i = 0; i < 16; ++i) top[i] = 5.0 - 0.1 * i;
  std::vector<double> flat(48, 2.0);
  std::map<ModuleId, Tensor> w;
  w[{0, ModuleKind::Q}] = oracle::with_spectrum(48, 56, top, rng);
  w[{0, ModuleKind::K}] = oracle::with_spectrum(56, 48, flat, rng);
  const auto scores = score_modules(w, kGlueBudget);
  REQUIRE(scores.size() == 2);
  CHECK(scores[0].module == ModuleId{0, ModuleKind::Q});
  CHECK(std::abs(scores[0].nu) <= 1e-9);
  CHECK(std::abs(scores[1].nu - 1.0) <= 1e-9);
  CHECK(scores[0].e_r1 <= scores[0].e_rt);
  CHECK(scores[1].e_rt <= scores[1].e_rs);
}

TEST_CASE("score_modules: power-law vs flat decay against direct summation") {
  ScopedFloatMode f64(FloatMode::f64);
  Rng rng(9);
  const RankBudget budget{{2, 4, 6}, 4};
  std::vector<double> power, flat(12, 1.0);
  for (int i = 1; i <= 12; ++i) power.push_back(1.0 / (i * i));
  std::map<ModuleId, Tensor> w;
  w[{0, ModuleKind::V}] = oracle::with_spectrum(12, 14, power, rng);
  w[{1, ModuleKind::V}] = oracle::with_spectrum(12, 12, flat, rng);
  const auto scores = score_modules(w, budget);
  for (const auto& s : scores) {
    const Tensor& m = w.at(s.module);
    const double nu = (oracle::direct_energy(m, 6) - oracle::direct_energy(m, 2)) / oracle::direct_energy(m, 4);
    CHECK(std::abs(s.nu - nu) <= 1e-9 * std::max(1.0, nu));
  }
  CHECK(scores[1].nu > scores[0].nu);
}

TEST_CASE("score_modules: rank above the module's dimension names the module") {
  std::map<ModuleId, Tensor> w;
  w[{3, ModuleKind::FFN2}] = Tensor::filled(40, 8, 1.0);
  try {
    score_modules(w, kGlueBudget);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("layers.3.FFN2") != std::string::npos);
  }
}

TEST_CASE("allocate: five modules in ascending order") {
  std::vector<ModuleScore> scores;
  const double nus[] = {0.9, 0.1, 0.5, 0.3, 0.7};
  for (std::size_t i = 0; i < 5; ++i) scores.push_back(score_of(0, kAllModuleKinds[i], nus[i]));
  const auto plan = allocate(scores, kGlueBudget);
  CHECK(plan.ranks.at({0, ModuleKind::K}) == 48);
  CHECK(plan.ranks.at({0, ModuleKind::O}) == 40);
  CHECK(plan.ranks.at({0, ModuleKind::V}) == 32);
  CHECK(plan.ranks.at({0, ModuleKind::FFN1}) == 24);
  CHECK(plan.ranks.at({0, ModuleKind::Q}) == 16);
  CHECK(plan.achieved_mean == 32.0);

  const auto rev = allocate(scores, kGlueBudget, true);
  CHECK(rev.ranks.at({0, ModuleKind::K}) == 16);
  CHECK(rev.ranks.at({0, ModuleKind::Q}) == 48);
  CHECK(rev.achieved_mean == 32.0);

  CHECK_THROWS_AS(allocate({}, kGlueBudget), ConfigError);
}

TEST_CASE("allocate: equal scores fall back to layer and kind order") {
  std::vector<ModuleScore> scores;
  for (std::size_t l = 2; l-- > 0;)
    for (ModuleKind k : {ModuleKind::FFN1, ModuleKind::Q, ModuleKind::V, ModuleKind::K, ModuleKind::FFN2})
      scores.push_back(score_of(l, k, 0.25));
  const auto plan = allocate(scores, kGlueBudget);
  CHECK(plan.order.front().module == ModuleId{0, ModuleKind::Q});
  CHECK(plan.ranks.at({0, ModuleKind::Q}) == 48);
  CHECK(plan.ranks.at({0, ModuleKind::K}) == 48);
  CHECK(plan.ranks.at({1, ModuleKind::FFN2}) == 16);
  CHECK(plan.achieved_mean == 32.0);
}

TEST_CASE("allocate: 160 modules with random scores match the brute-force checker") {
  Rng rng(160);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ModuleScore> scores;
    for (std::size_t l = 0; l < 32; ++l)
      for (ModuleKind k : {ModuleKind::Q, ModuleKind::K, ModuleKind::V, ModuleKind::FFN1, ModuleKind::FFN2})
        scores.push_back(score_of(l, k, std::floor(rng.uniform() * 40) / 10));  // forces ties
    const auto plan = allocate(scores, kGlueBudget);
    CHECK(plan.achieved_mean == 32.0);
    for (const auto& s : scores) {
      const std::size_t got = plan.ranks.at(s.module);
      CHECK(got == oracle::expected_rank(scores, s, kGlueBudget));
      CHECK(std::find(kGlueBudget.ranks.begin(), kGlueBudget.ranks.end(), got) !=
            kGlueBudget.ranks.end());
    }
  }
}

TEST_CASE("allocate: budget bound and monotone fairness for arbitrary L") {
  Rng rng(12);
  const RankBudget budgets[] = {kGlueBudget, {{32, 48, 64, 80, 96}, 64}, {{4, 6, 8, 10, 12}, 8}};
  for (int trial = 0; trial < 300; ++trial) {
    const RankBudget& b = budgets[rng.below(3)];
    const std::size_t n = 1 + rng.below(60);
    std::vector<ModuleScore> scores;
    for (std::size_t i = 0; i < n; ++i)
      scores.push_back(score_of(i / 6, kAllModuleKinds[i % 6], rng.uniform()));
    const auto plan = allocate(scores, b);
    const double slack = static_cast<double>(b.largest() - b.smallest()) / n;
    CHECK(std::abs(plan.achieved_mean - static_cast<double>(b.target)) <= slack + 1e-12);
    if (n % b.ranks.size() == 0) CHECK(plan.achieved_mean == static_cast<double>(b.target));
    for (const auto& x : scores)
      for (const auto& y : scores)
        if (x.nu < y.nu) CHECK(plan.ranks.at(x.module) >= plan.ranks.at(y.module));
  }
}

TEST_CASE("allocate: scaling a weight leaves the plan unchanged") {
  ScopedFloatMode f64(FloatMode::f64);
  Rng rng(33);
  const RankBudget budget{{2, 3, 4}, 3};
  std::map<ModuleId, Tensor> w;
  for (std::size_t l = 0; l < 3; ++l)
    for (ModuleKind k : {ModuleKind::Q, ModuleKind::V})
      w[{l, k}] = oracle::random_matrix(8, 6 + l, rng);
  const auto base = allocate(score_modules(w, budget), budget);
  const auto base_scores = score_modules(w, budget);
  w[{1, ModuleKind::V}] = scaled(w[{1, ModuleKind::V}], 37.5);
  w[{2, ModuleKind::Q}] = scaled(w[{2, ModuleKind::Q}], 1e-3);
  const auto scaled_scores = score_modules(w, budget);
  for (std::size_t i = 0; i < base_scores.size(); ++i)
    CHECK(std::abs(scaled_scores[i].nu - base_scores[i].nu) <= 1e-9);
  CHECK(allocate(scaled_scores, budget).ranks == base.ranks);
}

TEST_CASE("plan_to_json lists modules in allocation order") {
  std::vector<ModuleScore> scores{score_of(0, ModuleKind::Q, 0.5), score_of(0, ModuleKind::K, 0.2)};
  const auto plan = allocate(scores, {{2, 4}, 3});
  const auto doc = nlohmann::json::parse(plan_to_json(plan));
  CHECK(doc["target"] == 3);
  CHECK(doc["modules"][0]["module"] == "layers.0.K");
  CHECK(doc["modules"][0]["rank"] == 4);
  CHECK(doc["modules"][1]["rank"] == 2);
}
