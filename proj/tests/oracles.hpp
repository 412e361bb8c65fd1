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

// Independent reference implementations used only by the tests. Nothing in
// here calls the library's kernels; only plain data types are shared.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "lamda/allocator.hpp"
#include "lamda/graph.hpp"
#include "lamda/random.hpp"
#include "lamda/tensor.hpp"

namespace oracle {

using lamda::Tensor;

inline Tensor random_matrix(std::size_t rows, std::size_t cols, lamda::Rng& rng,
                            double lo = -1.0, double hi = 1.0) {
  Tensor t({rows, cols});
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Values exactly representable in binary32.
inline Tensor random_f32_matrix(std::size_t rows, std::size_t cols, lamda::Rng& rng) {
  Tensor t = random_matrix(rows, cols, rng);
  for (double& v : t.data()) v = static_cast<double>(static_cast<float>(v));
  return t;
}

inline Tensor triple_loop_matmul(const Tensor& a, const Tensor& b) {
  Tensor c({a.rows(), b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

inline Tensor naive_transpose(const Tensor& a) {
  Tensor t({a.cols(), a.rows()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

inline Tensor direct_softmax(const Tensor& a) {
  Tensor p({a.rows(), a.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += std::exp(a(i, j));
    for (std::size_t j = 0; j < a.cols(); ++j) p(i, j) = std::exp(a(i, j)) / s;
  }
  return p;
}

inline Tensor direct_layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias,
                                double eps) {
  Tensor out({a.rows(), a.cols()});
  const double d = static_cast<double>(a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) mean += a(i, j) / d;
    double var = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) var += (a(i, j) - mean) * (a(i, j) - mean) / d;
    for (std::size_t j = 0; j < a.cols(); ++j)
      out(i, j) = (a(i, j) - mean) / std::sqrt(var + eps) * gain[j] + bias[j];
  }
  return out;
}

// Eigenvalues of a symmetric matrix by the cyclic Jacobi rotation method,
// sorted descending.
inline std::vector<double> symmetric_eigenvalues(Tensor a, int max_sweeps = 100) {
  const std::size_t n = a.rows();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    double diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diag += a(i, i) * a(i, i);
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    }
    if (off <= 1e-30 * std::max(diag, 1e-300)) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

// Singular values as square roots of the eigenvalues of the smaller Gram
// matrix.
inline std::vector<double> singular_values_via_gram(const Tensor& w) {
  const Tensor wt = naive_transpose(w);
  const Tensor gram =
      w.rows() >= w.cols() ? triple_loop_matmul(wt, w) : triple_loop_matmul(w, wt);
  auto ev = symmetric_eigenvalues(gram);
  for (double& e : ev) e = std::sqrt(std::max(e, 0.0));
  return ev;
}

// Builds a loss from parameter leaves created in the order of `params`.
using LossBuilder =
    std::function<lamda::Var(lamda::Graph&, const std::vector<lamda::Var>& leaves)>;

inline double loss_value(const LossBuilder& build, const std::vector<Tensor>& params) {
  lamda::Graph g;
  std::vector<lamda::Var> leaves;
  for (std::size_t i = 0; i < params.size(); ++i)
    leaves.push_back(g.parameter(params[i], "p" + std::to_string(i)));
  return build(g, leaves).value().item();
}

// Largest per-tensor relative error ‖analytic − numeric‖ / max(‖numeric‖, ‖analytic‖, 1e-12)
// between backward() and central differences with step h.
inline double max_gradient_error(const LossBuilder& build, std::vector<Tensor> params,
                                 double h = 1e-5) {
  lamda::Graph g;
  std::vector<lamda::Var> leaves;
  for (std::size_t i = 0; i < params.size(); ++i)
    leaves.push_back(g.parameter(params[i], "p" + std::to_string(i)));
  const auto grads = g.backward(build(g, leaves));

  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const Tensor& analytic = grads.at(leaves[p]);
    Tensor numeric(params[p].shape());
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      const double saved = params[p][i];
      params[p][i] = saved + h;
      const double up = loss_value(build, params);
      params[p][i] = saved - h;
      const double down = loss_value(build, params);
      params[p][i] = saved;
      numeric[i] = (up - down) / (2.0 * h);
    }
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
      na += analytic[i] * analytic[i];
      nn += numeric[i] * numeric[i];
    }
    const double denom = std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
    worst = std::max(worst, std::sqrt(diff) / denom);
  }
  return worst;
}

// Matrix with prescribed singular values: random orthonormal frames around
// diag(sigma).
inline Tensor with_spectrum(std::size_t rows, std::size_t cols,
                            const std::vector<double>& sigma, lamda::Rng& rng) {
  auto frame = [&](std::size_t n) {
    // Gram-Schmidt on a random square matrix.
    Tensor q = random_matrix(n, n, rng);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < j; ++k) {
        double dot = 0;
        for (std::size_t i = 0; i < n; ++i) dot += q(i, j) * q(i, k);
        for (std::size_t i = 0; i < n; ++i) q(i, j) -= dot * q(i, k);
      }
      double norm = 0;
      for (std::size_t i = 0; i < n; ++i) norm += q(i, j) * q(i, j);
      norm = std::sqrt(norm);
      for (std::size_t i = 0; i < n; ++i) q(i, j) /= norm;
    }
    return q;
  };
  Tensor mid = Tensor::zeros(rows, cols);
  for (std::size_t i = 0; i < sigma.size(); ++i) mid(i, i) = sigma[i];
  return triple_loop_matmul(triple_loop_matmul(frame(rows), mid), naive_transpose(frame(cols)));
}

inline double direct_energy(const Tensor& w, std::size_t r) {
  auto sv = singular_values_via_gram(w);
  double e = 0;
  for (std::size_t i = 0; i < r && i < sv.size(); ++i) e += sv[i] * sv[i];
  return e;
}

// Independent quantile rule: position = number of modules ordered strictly
// before this one; quantile = the last q with floor(qL/S) <= position.
inline std::size_t expected_rank(const std::vector<lamda::ModuleScore>& all,
                                 const lamda::ModuleScore& m, const lamda::RankBudget& budget) {
  std::size_t pos = 0;
  for (const auto& o : all) {
    if (o.nu < m.nu || (o.nu == m.nu && o.module < m.module)) ++pos;
  }
  const std::size_t l = all.size(), s = budget.ranks.size();
  std::size_t q = 0;
  for (std::size_t c = 0; c < s; ++c)
    if (c * l / s <= pos) q = c;
  return budget.ranks[s - 1 - q];
}

}  // namespace oracle
