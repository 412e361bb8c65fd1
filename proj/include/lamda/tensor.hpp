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
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lamda {

// Storage precision of a run. Values are always held in doubles; in f32 mode
// every stored result is rounded to the nearest binary32 value, so tensors
// carry exactly what a float buffer would. The mode is process-global.
enum class FloatMode { f32, f64 };

FloatMode float_mode() noexcept;
void set_float_mode(FloatMode mode) noexcept;
FloatMode parse_float_mode(std::string_view text);
std::string_view to_string(FloatMode mode) noexcept;

// Rounds `v` to the storage precision of the current mode.
double round_to_mode(double v) noexcept;

// Restores the previous float mode on scope exit.
class ScopedFloatMode {
 public:
  explicit ScopedFloatMode(FloatMode mode) noexcept;
  ~ScopedFloatMode();
  ScopedFloatMode(const ScopedFloatMode&) = delete;
  ScopedFloatMode& operator=(const ScopedFloatMode&) = delete;

 private:
  FloatMode saved_;
};

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

// Dense row-major array. A default-constructed tensor is "null": no shape and
// no data. Every other tensor has positive dimensions and
// product(shape) == data.size().
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(std::size_t rows, std::size_t cols);
  static Tensor filled(std::size_t rows, std::size_t cols, double value);
  static Tensor identity(std::size_t n);
  static Tensor scalar(double value);
  static Tensor vector(std::initializer_list<double> values);
  // Row-major initializer; values.size() must equal rows * cols.
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<double> values);
  static Tensor diagonal(std::initializer_list<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t ndim() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool is_null() const noexcept { return shape_.empty(); }

  // Matrix view: a 1-D tensor of length n is treated as 1 x n.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  double operator[](std::size_t i) const noexcept { return data_[i]; }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * shape_.back() + c];
  }
  double& operator()(std::size_t r, std::size_t c) noexcept {
    return data_[r * shape_.back() + c];
  }

  // The single value of a size-1 tensor.
  double item() const;

  // Rounds every element to the storage precision of the current mode.
  Tensor& round_to_mode() noexcept;

  // Throws NumericalError naming `what` if any element is NaN or infinite.
  const Tensor& check_finite(std::string_view what) const;

  Tensor reshaped(Shape shape) const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Bitwise comparison of shape and payload (distinguishes -0.0 from 0.0).
bool bitwise_equal(const Tensor& a, const Tensor& b) noexcept;

// Dense kernels on 2-D tensors. None of these round to the float mode; the
// graph ops and the optimizer do that at their storage points.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // aᵀ·b
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a·bᵀ
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scaled(const Tensor& a, double factor);
Tensor slice(const Tensor& a, std::size_t row0, std::size_t rows, std::size_t col0,
             std::size_t cols);
Tensor column_scaled(const Tensor& a, std::span<const double> factors);

double frobenius_norm(const Tensor& a);
double max_abs(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);
// ‖a − b‖_F / max(‖b‖_F, tiny)
double relative_frobenius_error(const Tensor& a, const Tensor& b);

}  // namespace lamda
