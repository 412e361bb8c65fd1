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

#include "lamda/optimizer.hpp"

#include <cmath>

#include "lamda/error.hpp"

namespace lamda {

void AdamConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning rate must be finite and non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("Adam eps must be positive");
}

Adam::Adam(AdamConfig config) : config_(config) { config_.validate(); }

void Adam::update(const std::string& name, Tensor& value, const Tensor& grad,
                  std::size_t live_rows) {
  if (grad.shape() != value.shape()) {
    throw DimensionError("Adam: gradient " + shape_string(grad.shape()) + " for parameter '" +
                         name + "' of shape " + shape_string(value.shape()));
  }
  if (step_ == 0) throw ContractError("Adam::update before begin_step()");
  const std::size_t rows = value.rows();
  const std::size_t cols = value.cols();
  live_rows = std::min(live_rows, rows);
  if (live_rows == 0) {
    moments_.erase(name);
    return;
  }

  Moments& mom = moments_[name];
  if (mom.m.empty()) {
    mom.rows = live_rows;
    mom.cols = cols;
    mom.m.assign(live_rows * cols, 0.0);
    mom.v.assign(live_rows * cols, 0.0);
  } else if (live_rows < mom.rows) {
    mom.rows = live_rows;
    mom.m.resize(live_rows * cols);
    mom.v.resize(live_rows * cols);
    mom.m.shrink_to_fit();
    mom.v.shrink_to_fit();
  } else if (live_rows > mom.rows) {
    throw ContractError("Adam: parameter '" + name + "' cannot regain frozen rows");
  }

  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  const double lr = config_.learning_rate;
  const std::size_t n = live_rows * cols;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    mom.m[i] = round_to_mode(b1 * mom.m[i] + (1.0 - b1) * g);
    mom.v[i] = round_to_mode(b2 * mom.v[i] + (1.0 - b2) * g * g);
    const double mhat = mom.m[i] / c1;
    const double vhat = mom.v[i] / c2;
    value[i] = round_to_mode(value[i] - lr * mhat / (std::sqrt(vhat) + config_.eps));
  }
  value.check_finite("parameter '" + name + "' after update");
}

std::size_t Adam::state_scalars() const noexcept {
  std::size_t n = 0;
  for (const auto& [_, mom] : moments_) n += mom.m.size() + mom.v.size();
  return n;
}

void Adam::restore(std::size_t step, std::map<std::string, Moments> moments) {
  for (const auto& [name, mom] : moments) {
    if (mom.m.size() != mom.rows * mom.cols || mom.v.size() != mom.m.size()) {
      throw FormatError("Adam: inconsistent moment buffers for '" + name + "'");
    }
  }
  step_ = step;
  moments_ = std::move(moments);
}

}  // namespace lamda
