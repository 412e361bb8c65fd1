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
#include <vector>

namespace lamda {

// How the number of trainable B rows decays over the freeze horizon.
enum class ScheduleVariant {
  // Linear ramp from `rank` rows at t = 0 to none at t = freeze_iters. Step t
  // keeps the ramp value at the middle of its interval, rounded to nearest
  // (ties to even):  round(rank · (freeze_iters − t − ½) / freeze_iters).
  // Averaged over a run this equals rank·freeze_iters/2 row-steps, which is
  // what the effective-parameter count assumes. Step 0 always has every row
  // live (only differs from the formula when rank > freeze_iters).
  linear,
  // int(rank − t / freeze_iters): drops by one row after t = 0 and stays there
  // until the horizon. Kept for comparison runs.
  literal,
};

struct FreezeSchedule {
  std::size_t rank = 0;
  std::size_t freeze_iters = 0;  // t_i; 0 means B is never trainable
  std::size_t total_iters = 0;   // T
  ScheduleVariant variant = ScheduleVariant::linear;

  // freeze_iters = round(fraction · total_iters).
  static FreezeSchedule from_fraction(std::size_t rank, double fraction,
                                      std::size_t total_iters,
                                      ScheduleVariant variant = ScheduleVariant::linear);

  void validate() const;
};

// Trainable rows of B at iteration t (rows [0, result) are live).
// Throws ContractError for t > total_iters.
std::size_t trainable_rows(const FreezeSchedule& schedule, std::size_t t);

// Order in which rows freeze: last row first, row 0 last.
std::vector<std::size_t> freeze_order(std::size_t rank);

// Rows that freeze when the live count drops from `before` to `after`,
// highest index first.
std::vector<std::size_t> rows_frozen_between(std::size_t before, std::size_t after);

}  // namespace lamda
