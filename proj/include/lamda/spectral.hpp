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
#include <span>
#include <vector>

#include "lamda/error.hpp"
#include "lamda/tensor.hpp"

namespace lamda {

// W = U·diag(sigma)·Vᵀ with k = min(d_in, d_out):
//   u      d_in × k, orthonormal columns
//   sigma  length k, non-negative, descending
//   v      d_out × k, orthonormal columns
// Sign convention: the first nonzero entry of every U column is >= 0.
struct SpectralDecomposition {
  Tensor u;
  std::vector<double> sigma;
  Tensor v;

  std::size_t rank_capacity() const noexcept { return sigma.size(); }
};

// Adapter initialization produced from a spectrum: A (d_in × r) carries the
// singular values, B (r × d_out) has orthonormal rows, and the residual holds
// the components that were not moved into the adapter.
struct SpectrumSplit {
  Tensor a;
  Tensor b;
  Tensor residual;
  std::size_t rank = 0;
};

struct SvdOptions {
  // A column pair is considered orthogonal once |gᵢ·gⱼ| <= tol·‖gᵢ‖·‖gⱼ‖.
  double tolerance = 1e-12;
  int max_sweeps = 60;
};

class SvdConvergenceError : public NumericalError {
 public:
  SvdConvergenceError(double residual, int sweeps);
  // Largest relative off-diagonal coupling left after the final sweep.
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// One-sided (Hestenes) Jacobi SVD. Runs on whichever orientation has the
// smaller Gram matrix; all arithmetic in double regardless of float mode.
SpectralDecomposition svd(const Tensor& w, const SvdOptions& options = {});

// U·diag(sigma)·Vᵀ
Tensor reconstruct(const SpectralDecomposition& dec);

// Leading r components into the adapter, the remaining k − r into the residual.
SpectrumSplit split_spectrum(const SpectralDecomposition& dec, const Tensor& w,
                             std::size_t rank);

// Trailing r components (smallest singular values) into the adapter.
SpectrumSplit split_spectrum_tail(const SpectralDecomposition& dec, const Tensor& w,
                                  std::size_t rank);

// Σ_{i<r} sigma[i]²
double energy_score(std::span<const double> sigma, std::size_t rank);
double total_energy(std::span<const double> sigma);

}  // namespace lamda
