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

#include "lamda/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace lamda {
namespace {

using Column = std::vector<double>;

double dot(const Column& a, const Column& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void rotate(Column& p, Column& q, double c, double s) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double xp = p[i];
    const double xq = q[i];
    p[i] = c * xp - s * xq;
    q[i] = s * xp + c * xq;
  }
}

// Fills the columns flagged in `missing` with unit vectors orthogonal to all
// other columns (Gram–Schmidt over the standard basis, applied twice).
void complete_basis(std::vector<Column>& cols, const std::vector<bool>& missing) {
  const std::size_t m = cols.empty() ? 0 : cols[0].size();
  std::size_t next_basis = 0;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (!missing[j]) continue;
    bool filled = false;
    while (!filled && next_basis < m) {
      Column e(m, 0.0);
      e[next_basis++] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < cols.size(); ++k) {
          if (k == j || (missing[k] && k > j)) continue;
          const double proj = dot(e, cols[k]);
          for (std::size_t i = 0; i < m; ++i) e[i] -= proj * cols[k][i];
        }
      }
      const double norm = std::sqrt(dot(e, e));
      if (norm > 1e-8) {
        for (double& x : e) x /= norm;
        cols[j] = std::move(e);
        filled = true;
      }
    }
    if (!filled) throw NumericalError("svd: could not complete an orthonormal basis");
  }
}

struct TallSvd {
  std::vector<Column> u;  // n columns of length m
  std::vector<double> sigma;
  std::vector<Column> v;  // n columns of length n
};

// SVD of an m × n matrix with m >= n, given as n columns of length m.
TallSvd tall_svd(std::vector<Column> g, const SvdOptions& options) {
  const std::size_t n = g.size();
  const std::size_t m = n ? g[0].size() : 0;
  std::vector<Column> v(n, Column(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) v[j][j] = 1.0;

  double residual = 0.0;
  bool converged = n < 2;
  int sweep = 0;
  for (; sweep < options.max_sweeps && !converged; ++sweep) {
    residual = 0.0;
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = dot(g[p], g[p]);
        const double beta = dot(g[q], g[q]);
        if (alpha == 0.0 || beta == 0.0) continue;
        const double gamma = dot(g[p], g[q]);
        const double coupling = std::abs(gamma) / std::sqrt(alpha * beta);
        residual = std::max(residual, coupling);
        if (coupling <= options.tolerance) continue;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;
        rotate(g[p], g[q], c, s);
        rotate(v[p], v[q], c, s);
        rotated = true;
      }
    }
    converged = !rotated;
  }
  if (!converged) throw SvdConvergenceError(residual, sweep);

  TallSvd out;
  out.sigma.resize(n);
  for (std::size_t j = 0; j < n; ++j) out.sigma[j] = std::sqrt(dot(g[j], g[j]));
  const double sigma_max =
      n ? *std::max_element(out.sigma.begin(), out.sigma.end()) : 0.0;
  const double zero_cut = static_cast<double>(std::max(m, n)) *
                          std::numeric_limits<double>::epsilon() * sigma_max;

  std::vector<bool> missing(n, false);
  for (std::size_t j = 0; j < n; ++j) {
    if (out.sigma[j] <= zero_cut || out.sigma[j] == 0.0) {
      out.sigma[j] = 0.0;
      missing[j] = true;
      continue;
    }
    for (double& x : g[j]) x /= out.sigma[j];
  }
  if (std::any_of(missing.begin(), missing.end(), [](bool b) { return b; })) {
    complete_basis(g, missing);
  }
  out.u = std::move(g);
  out.v = std::move(v);
  return out;
}

void check_split_args(const SpectralDecomposition& dec, const Tensor& w, std::size_t rank) {
  if (w.ndim() != 2 || dec.u.rows() != w.rows() || dec.v.rows() != w.cols()) {
    throw DimensionError("split: decomposition with U " + shape_string(dec.u.shape()) +
                         " and V " + shape_string(dec.v.shape()) +
                         " does not belong to a weight of shape " + shape_string(w.shape()));
  }
  const std::size_t k = dec.rank_capacity();
  if (rank < 1 || rank > k) {
    throw ConfigError("rank " + std::to_string(rank) + " outside [1, " + std::to_string(k) +
                      "] for a weight of shape " + shape_string(w.shape()));
  }
}

// Σ_{i in [lo, hi)} sigma_i u_i v_iᵀ
Tensor partial_product(const SpectralDecomposition& dec, std::size_t lo, std::size_t hi) {
  const std::size_t rows = dec.u.rows();
  const std::size_t cols = dec.v.rows();
  Tensor out({rows, cols});
  for (std::size_t c = lo; c < hi; ++c) {
    const double s = dec.sigma[c];
    if (s == 0.0) continue;
    for (std::size_t i = 0; i < rows; ++i) {
      const double ui = s * dec.u(i, c);
      for (std::size_t j = 0; j < cols; ++j) out(i, j) += ui * dec.v(j, c);
    }
  }
  return out;
}

SpectrumSplit split_range(const SpectralDecomposition& dec, std::size_t lo, std::size_t hi) {
  const std::size_t r = hi - lo;
  const std::size_t k = dec.rank_capacity();
  SpectrumSplit out;
  out.rank = r;
  out.a = Tensor({dec.u.rows(), r});
  out.b = Tensor({r, dec.v.rows()});
  for (std::size_t c = 0; c < r; ++c) {
    for (std::size_t i = 0; i < dec.u.rows(); ++i) out.a(i, c) = dec.u(i, lo + c) * dec.sigma[lo + c];
    for (std::size_t j = 0; j < dec.v.rows(); ++j) out.b(c, j) = dec.v(j, lo + c);
  }
  out.residual = partial_product(dec, 0, lo);
  const Tensor tail = partial_product(dec, hi, k);
  for (std::size_t i = 0; i < tail.size(); ++i) out.residual[i] += tail[i];
  return out;
}

}  // namespace

SvdConvergenceError::SvdConvergenceError(double residual, int sweeps)
    : NumericalError([&] {
        std::ostringstream os;
        os << "svd: no convergence after " << sweeps
           << " sweeps, residual off-diagonal coupling " << residual;
        return os.str();
      }()),
      residual_(residual) {}

SpectralDecomposition svd(const Tensor& w, const SvdOptions& options) {
  if (w.ndim() != 2) throw DimensionError("svd: expected a matrix, got " + shape_string(w.shape()));
  w.check_finite("svd input");
  const std::size_t rows = w.rows();
  const std::size_t cols = w.cols();
  const bool tall = rows >= cols;
  const std::size_t m = tall ? rows : cols;
  const std::size_t n = tall ? cols : rows;

  // Columns of W (tall) or of Wᵀ (wide).
  std::vector<Column> g(n, Column(m));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      if (tall)
        g[j][i] = w(i, j);
      else
        g[i][j] = w(i, j);
    }
  TallSvd t = tall_svd(std::move(g), options);
  // Wide case: Wᵀ = U'ΣV'ᵀ, so W = V'ΣU'ᵀ.
  std::vector<Column>& left = tall ? t.u : t.v;
  std::vector<Column>& right = tall ? t.v : t.u;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return t.sigma[a] > t.sigma[b]; });

  SpectralDecomposition dec;
  dec.u = Tensor({rows, n});
  dec.v = Tensor({cols, n});
  dec.sigma.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t src = order[c];
    const Column& uc = left[src];
    const Column& vc = right[src];
    double sign = 1.0;
    for (double x : uc) {
      if (std::abs(x) > 1e-12) {
        sign = x < 0.0 ? -1.0 : 1.0;
        break;
      }
    }
    dec.sigma[c] = t.sigma[src];
    for (std::size_t i = 0; i < rows; ++i) dec.u(i, c) = sign * uc[i];
    for (std::size_t j = 0; j < cols; ++j) dec.v(j, c) = sign * vc[j];
  }
  return dec;
}

Tensor reconstruct(const SpectralDecomposition& dec) {
  return partial_product(dec, 0, dec.rank_capacity());
}

SpectrumSplit split_spectrum(const SpectralDecomposition& dec, const Tensor& w,
                             std::size_t rank) {
  check_split_args(dec, w, rank);
  return split_range(dec, 0, rank);
}

SpectrumSplit split_spectrum_tail(const SpectralDecomposition& dec, const Tensor& w,
                                  std::size_t rank) {
  check_split_args(dec, w, rank);
  const std::size_t k = dec.rank_capacity();
  return split_range(dec, k - rank, k);
}

double energy_score(std::span<const double> sigma, std::size_t rank) {
  if (rank > sigma.size()) {
    throw ConfigError("energy rank " + std::to_string(rank) + " exceeds spectrum length " +
                      std::to_string(sigma.size()));
  }
  double e = 0.0;
  for (std::size_t i = 0; i < rank; ++i) e += sigma[i] * sigma[i];
  return e;
}

double total_energy(std::span<const double> sigma) { return energy_score(sigma, sigma.size()); }

}  // namespace lamda
