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

#include "lamda/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "lamda/error.hpp"

namespace lamda {
namespace {

std::atomic<FloatMode> g_float_mode{FloatMode::f32};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

MutMap as_matrix(Tensor& t) {
  return MutMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

void require_matrix(const Tensor& a, const char* op) {
  if (a.is_null() || a.ndim() > 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " +
                         shape_string(a.shape()));
  }
}

}  // namespace

FloatMode float_mode() noexcept { return g_float_mode.load(std::memory_order_relaxed); }

void set_float_mode(FloatMode mode) noexcept {
  g_float_mode.store(mode, std::memory_order_relaxed);
}

FloatMode parse_float_mode(std::string_view text) {
  if (text == "f32") return FloatMode::f32;
  if (text == "f64") return FloatMode::f64;
  throw ConfigError("unknown float mode '" + std::string(text) + "' (expected f32 or f64)");
}

std::string_view to_string(FloatMode mode) noexcept {
  return mode == FloatMode::f32 ? "f32" : "f64";
}

double round_to_mode(double v) noexcept {
  if (float_mode() == FloatMode::f32) return static_cast<double>(static_cast<float>(v));
  return v;
}

ScopedFloatMode::ScopedFloatMode(FloatMode mode) noexcept : saved_(float_mode()) {
  set_float_mode(mode);
}

ScopedFloatMode::~ScopedFloatMode() { set_float_mode(saved_); }

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  if (shape_.empty()) throw DimensionError("tensor shape must have at least one dimension");
  for (auto d : shape_) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " +
                                     shape_string(shape_));
  }
  data_.assign(element_count(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : Tensor(std::move(shape)) {
  if (data.size() != data_.size()) {
    throw DimensionError("tensor payload of " + std::to_string(data.size()) +
                         " values does not match shape " + shape_string(shape_));
  }
  data_ = std::move(data);
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }

Tensor Tensor::filled(std::size_t rows, std::size_t cols, double value) {
  Tensor t({rows, cols});
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::diagonal(std::initializer_list<double> values) {
  Tensor t({values.size(), values.size()});
  std::size_t i = 0;
  for (double v : values) {
    t(i, i) = v;
    ++i;
  }
  return t;
}

std::size_t Tensor::rows() const {
  if (shape_.empty()) return 0;
  return shape_.size() == 1 ? 1 : shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.empty()) return 0;
  return shape_.back();
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ContractError("item() on a tensor of shape " + shape_string(shape_));
  }
  return data_[0];
}

Tensor& Tensor::round_to_mode() noexcept {
  if (float_mode() == FloatMode::f32) {
    for (double& v : data_) v = static_cast<double>(static_cast<float>(v));
  }
  return *this;
}

const Tensor& Tensor::check_finite(std::string_view what) const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw NumericalError("non-finite value in " + std::string(what) + " at index " +
                           std::to_string(i));
    }
  }
  return *this;
}

Tensor Tensor::reshaped(Shape shape) const {
  Tensor out(std::move(shape));
  if (out.size() != size()) {
    throw DimensionError("cannot reshape " + shape_string(shape_) + " to " +
                         shape_string(out.shape()));
  }
  out.data_ = data_;
  return out;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) noexcept {
  if (a.shape() != b.shape()) return false;
  if (a.size() == 0) return true;
  return std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(double)) == 0;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ for " + shape_string(a.shape()) +
                         " and " + shape_string(b.shape()));
  }
  Tensor out({a.rows(), b.cols()});
  as_matrix(out).noalias() = as_matrix(a) * as_matrix(b);
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_tn");
  require_matrix(b, "matmul_tn");
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: row counts differ for " + shape_string(a.shape()) +
                         " and " + shape_string(b.shape()));
  }
  Tensor out({a.cols(), b.cols()});
  as_matrix(out).noalias() = as_matrix(a).transpose() * as_matrix(b);
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: column counts differ for " + shape_string(a.shape()) +
                         " and " + shape_string(b.shape()));
  }
  Tensor out({a.rows(), b.rows()});
  as_matrix(out).noalias() = as_matrix(a) * as_matrix(b).transpose();
  return out;
}

Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose");
  Tensor out({a.cols(), a.rows()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a.data()[i * a.cols() + j];
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

Tensor scaled(const Tensor& a, double factor) {
  Tensor out = a;
  for (double& v : out.data()) v *= factor;
  return out;
}

Tensor slice(const Tensor& a, std::size_t row0, std::size_t rows, std::size_t col0,
             std::size_t cols) {
  require_matrix(a, "slice");
  if (row0 + rows > a.rows() || col0 + cols > a.cols()) {
    throw DimensionError("slice [" + std::to_string(row0) + "+" + std::to_string(rows) + ", " +
                         std::to_string(col0) + "+" + std::to_string(cols) +
                         "] out of range for " + shape_string(a.shape()));
  }
  Tensor out({rows, cols});
  for (std::size_t i = 0; i < rows; ++i) {
    const double* src = a.data().data() + (row0 + i) * a.cols() + col0;
    std::copy(src, src + cols, out.data().data() + i * cols);
  }
  return out;
}

Tensor column_scaled(const Tensor& a, std::span<const double> factors) {
  require_matrix(a, "column_scaled");
  if (factors.size() != a.cols()) {
    throw DimensionError("column_scaled: " + std::to_string(factors.size()) +
                         " factors for " + shape_string(a.shape()));
  }
  Tensor out = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) *= factors[j];
  return out;
}

double frobenius_norm(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

double max_abs(const Tensor& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double relative_frobenius_error(const Tensor& a, const Tensor& b) {
  const double denom = std::max(frobenius_norm(b), std::numeric_limits<double>::min());
  return frobenius_norm(sub(a, b)) / denom;
}

}  // namespace lamda
