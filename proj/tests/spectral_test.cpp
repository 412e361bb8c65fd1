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

#include <doctest.h>

#include <cmath>

#include "lamda/spectral.hpp"
#include "oracles.hpp"

using namespace lamda;

namespace {

double orthonormality_residual(const Tensor& q) {
  const Tensor gram = oracle::triple_loop_matmul(oracle::naive_transpose(q), q);
  return max_abs_diff(gram, Tensor::identity(gram.rows()));
}

void check_invariants(const Tensor& w, const SpectralDecomposition& dec) {
  CHECK(orthonormality_residual(dec.u) <= 1e-6);
  CHECK(orthonormality_residual(dec.v) <= 1e-6);
  for (std::size_t i = 0; i < dec.sigma.size(); ++i) {
    CHECK(dec.sigma[i] >= 0.0);
    if (i) CHECK(dec.sigma[i - 1] >= dec.sigma[i]);
  }
  CHECK(relative_frobenius_error(reconstruct(dec), w) <= 1e-6);
  for (std::size_t c = 0; c < dec.u.cols(); ++c) {
    for (std::size_t i = 0; i < dec.u.rows(); ++i) {
      if (std::abs(dec.u(i, c)) > 1e-12) {
        CHECK(dec.u(i, c) > 0.0);
        break;
      }
    }
  }
}

}  // namespace

TEST_CASE("svd: identity and sorting") {
  auto dec = svd(Tensor::identity(3));
  CHECK(dec.sigma == std::vector<double>{1.0, 1.0, 1.0});
  check_invariants(Tensor::identity(3), dec);

  auto d2 = svd(Tensor::diagonal({3, 4}));
  REQUIRE(d2.sigma.size() == 2);
  CHECK(d2.sigma[0] == doctest::Approx(4.0));
  CHECK(d2.sigma[1] == doctest::Approx(3.0));
}

TEST_CASE("svd: singular values match the symmetric eigensolver oracle") {
  Rng rng(81);
  const Tensor w = oracle::random_matrix(8, 8, rng);
  auto dec = svd(w);
  const auto expected = oracle::singular_values_via_gram(w);
  for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(dec.sigma[i] - expected[i]) <= 1e-9);
  check_invariants(w, dec);
}

TEST_CASE("svd: rectangular, rank-deficient and zero inputs") {
  Rng rng(4);
  for (auto [r, c] : {std::pair<std::size_t, std::size_t>{4, 6}, {6, 4}, {1, 5}, {5, 1}}) {
    const Tensor w = oracle::random_matrix(r, c, rng);
    auto dec = svd(w);
    CHECK(dec.u.shape() == Shape{r, std::min(r, c)});
    CHECK(dec.v.shape() == Shape{c, std::min(r, c)});
    check_invariants(w, dec);
  }
  // Rank 1 outer product: completion must still give orthonormal factors.
  Tensor rank1({5, 4});
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j) rank1(i, j) = (i + 1.0) * (j - 1.5);
  auto d1 = svd(rank1);
  check_invariants(rank1, d1);
  CHECK(d1.sigma[1] == 0.0);

  auto dz = svd(Tensor::zeros(3, 2));
  CHECK(dz.sigma == std::vector<double>{0.0, 0.0});
  CHECK(orthonormality_residual(dz.u) <= 1e-12);
}

TEST_CASE("svd: non-convergence reports the residual") {
  Rng rng(12);
  const Tensor w = oracle::random_matrix(6, 6, rng);
  SvdOptions opts;
  opts.max_sweeps = 1;
  try {
    svd(w, opts);
    FAIL("expected SvdConvergenceError");
  } catch (const SvdConvergenceError& e) {
    CHECK(e.residual() > opts.tolerance);
  }
}

TEST_CASE("split_spectrum on a diagonal weight") {
  const Tensor w = Tensor::diagonal({5, 3, 1});
  auto dec = svd(w);
  auto top = split_spectrum(dec, w, 1);
  CHECK(max_abs_diff(top.a, Tensor::matrix(3, 1, {5, 0, 0})) <= 1e-12);
  CHECK(max_abs_diff(top.b, Tensor::matrix(1, 3, {1, 0, 0})) <= 1e-12);
  CHECK(max_abs_diff(top.residual, Tensor::diagonal({0, 3, 1})) <= 1e-12);

  auto tail = split_spectrum_tail(dec, w, 1);
  CHECK(max_abs_diff(tail.a, Tensor::matrix(3, 1, {0, 0, 1})) <= 1e-12);
  CHECK(max_abs_diff(tail.b, Tensor::matrix(1, 3, {0, 0, 1})) <= 1e-12);
  CHECK(max_abs_diff(tail.residual, Tensor::diagonal({5, 3, 0})) <= 1e-12);

  CHECK_THROWS_AS(split_spectrum(dec, w, 0), ConfigError);
  CHECK_THROWS_AS(split_spectrum(dec, w, 4), ConfigError);
  CHECK_THROWS_AS(split_spectrum_tail(dec, w, 4), ConfigError);
}

TEST_CASE("split completeness against the oracle reconstruction") {
  Rng rng(99);
  for (auto [r, c, k] : {std::tuple<std::size_t, std::size_t, std::size_t>{4, 6, 2}, {6, 4, 2}}) {
    const Tensor w = oracle::random_matrix(r, c, rng);
    auto dec = svd(w);
    for (const auto& split : {split_spectrum(dec, w, k), split_spectrum_tail(dec, w, k)}) {
      const Tensor rebuilt = add(split.residual, oracle::triple_loop_matmul(split.a, split.b));
      CHECK(relative_frobenius_error(rebuilt, w) <= 1e-5);
      CHECK(split.a.shape() == Shape{r, k});
      CHECK(split.b.shape() == Shape{k, c});
    }
    // Top-k and tail-(min−k) partition the same spectrum.
    const std::size_t kmax = std::min(r, c);
    auto top = split_spectrum(dec, w, k);
    auto rest = split_spectrum_tail(dec, w, kmax - k);
    const Tensor both = add(oracle::triple_loop_matmul(top.a, top.b),
                            oracle::triple_loop_matmul(rest.a, rest.b));
    CHECK(max_abs_diff(both, reconstruct(dec)) <= 1e-12);
  }
}

TEST_CASE("Eckart–Young spot check") {
  Rng rng(1234);
  const Tensor w = oracle::random_matrix(10, 8, rng);
  auto dec = svd(w);
  const std::size_t r = 3;
  auto split = split_spectrum(dec, w, r);
  const double best = frobenius_norm(sub(w, matmul(split.a, split.b)));
  const double scale = frobenius_norm(split.a) / std::sqrt(10.0 * r);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor a = scaled(oracle::random_matrix(10, r, rng), scale * std::sqrt(3.0));
    const Tensor b = oracle::random_matrix(r, 8, rng);
    CHECK(best <= frobenius_norm(sub(w, matmul(a, b))));
  }
}

TEST_CASE("energy_score") {
  const std::vector<double> s{2.0, 1.0};
  CHECK(energy_score(s, 1) == 4.0);
  CHECK(energy_score(s, 2) == 5.0);
  CHECK(total_energy(s) == 5.0);
  CHECK_THROWS_AS(energy_score(s, 3), ConfigError);

  std::vector<double> decay(64);
  for (std::size_t i = 0; i < 64; ++i) decay[i] = 1.0 / static_cast<double>(i + 1);
  double direct = 0.0;
  for (int i = 1; i <= 32; ++i) direct += 1.0 / (static_cast<double>(i) * i);
  CHECK(energy_score(decay, 32) == doctest::Approx(direct).epsilon(1e-15));

  double prev = 0.0;
  const double et = total_energy(decay);
  for (std::size_t r = 0; r <= 64; ++r) {
    const double e = energy_score(decay, r);
    CHECK(e >= prev);
    CHECK(e / et >= 0.0);
    CHECK(e / et <= 1.0);
    prev = e;
  }
}
