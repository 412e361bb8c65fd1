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

#include "lamda/tensor.hpp"

namespace lamda {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // no weight decay

  void validate() const;
};

// Adam with row masking. A parameter updated with live_rows = k only has
// moment buffers for its first k rows; rows at or past k are never written,
// and their moments are released so optimizer state shrinks as rows freeze.
class Adam {
 public:
  struct Moments {
    std::size_t rows = 0;  // live rows covered by the buffers
    std::size_t cols = 0;
    std::vector<double> m;
    std::vector<double> v;
  };

  explicit Adam(AdamConfig config);

  // Advances the bias-correction step counter; call once per training step
  // before the updates of that step.
  void begin_step() { ++step_; }
  std::size_t step_count() const noexcept { return step_; }

  // The only mutation point for trainable tensors.
  void update(const std::string& name, Tensor& value, const Tensor& grad,
              std::size_t live_rows);
  void update(const std::string& name, Tensor& value, const Tensor& grad) {
    update(name, value, grad, value.rows());
  }

  // Drops the moments of a parameter that no longer trains.
  void release(const std::string& name) { moments_.erase(name); }

  // Scalars held across both moment buffers.
  std::size_t state_scalars() const noexcept;

  const AdamConfig& config() const noexcept { return config_; }
  const std::map<std::string, Moments>& moments() const noexcept { return moments_; }
  void restore(std::size_t step, std::map<std::string, Moments> moments);

 private:
  AdamConfig config_;
  std::size_t step_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace lamda
