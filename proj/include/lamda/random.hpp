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
#include <cstdint>
#include <random>

#include "lamda/tensor.hpp"

namespace lamda {

// Seeded generator with distribution code written out by hand so that streams
// are identical across standard-library implementations (std::mt19937_64 is
// fully specified; std::normal_distribution is not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n) by rejection sampling.
  std::uint64_t below(std::uint64_t n);

  // Standard normal via the Box–Muller transform; pairs are cached.
  double normal();

  // Derives an independent child stream, e.g. one per module.
  Rng fork(std::uint64_t salt);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Entries ~ N(0, 2 / fan_in): He/Kaiming normal with the rectifier gain √2,
// fan-in mode. Rounded to the current float mode.
Tensor kaiming_normal(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng);

// Entries ~ N(0, stddev²).
Tensor normal_tensor(std::size_t rows, std::size_t cols, double stddev, Rng& rng);

}  // namespace lamda
