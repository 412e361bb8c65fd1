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

#include "lamda/freezing.hpp"

#include <cmath>
#include <string>

#include "lamda/error.hpp"

namespace lamda {

FreezeSchedule FreezeSchedule::from_fraction(std::size_t rank, double fraction,
                                             std::size_t total_iters,
                                             ScheduleVariant variant) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw ConfigError("freeze fraction " + std::to_string(fraction) + " outside [0, 1]");
  }
  FreezeSchedule s{rank,
                   static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total_iters))),
                   total_iters, variant};
  s.validate();
  return s;
}

void FreezeSchedule::validate() const {
  if (freeze_iters > total_iters) {
    throw ConfigError("freeze horizon " + std::to_string(freeze_iters) +
                      " exceeds total iterations " + std::to_string(total_iters));
  }
}

std::size_t trainable_rows(const FreezeSchedule& schedule, std::size_t t) {
  if (t > schedule.total_iters) {
    throw ContractError("iteration " + std::to_string(t) + " beyond schedule length " +
                        std::to_string(schedule.total_iters));
  }
  const std::size_t r = schedule.rank;
  const std::size_t ti = schedule.freeze_iters;
  if (ti == 0 || t >= ti) return 0;
  if (t == 0) return r;

  if (schedule.variant == ScheduleVariant::literal) {
    const double v = static_cast<double>(r) - static_cast<double>(t) / static_cast<double>(ti);
    return v <= 0.0 ? 0 : static_cast<std::size_t>(v);
  }
  // round(r·(2(ti − t) − 1) / (2·ti)), ties to even, in exact integer arithmetic.
  const std::size_t num = r * (2 * (ti - t) - 1);
  const std::size_t den = 2 * ti;
  std::size_t q = num / den;
  const std::size_t rem = num % den;
  if (2 * rem > den || (2 * rem == den && (q % 2 == 1))) ++q;
  return q;
}

std::vector<std::size_t> freeze_order(std::size_t rank) {
  if (rank == 0) throw ContractError("freeze_order: rank must be at least 1");
  std::vector<std::size_t> order;
  order.reserve(rank);
  for (std::size_t i = rank; i-- > 0;) order.push_back(i);
  return order;
}

std::vector<std::size_t> rows_frozen_between(std::size_t before, std::size_t after) {
  std::vector<std::size_t> rows;
  for (std::size_t i = before; i-- > after;) rows.push_back(i);
  return rows;
}

}  // namespace lamda
