// Copyright 2026 The coembed Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "coembed/contrastive.hpp"
#include "coembed/errors.hpp"
#include "fd_oracle.hpp"

using namespace coembed;
using coembed::testing::central_difference;
using coembed::testing::random_matrix;
using coembed::testing::rel_error;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> init) {
  Matrix m(static_cast<Eigen::Index>(init.size()),
           static_cast<Eigen::Index>(init.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : init) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

double loss_of(const Matrix& a, const Matrix& b, double tau) {
  return symmetric_contrastive_loss(a, b, tau).loss;
}

}  // namespace

TEST_CASE("l2_normalize") {
  CHECK(l2_normalize(rows({{3, 4}})).isApprox(rows({{0.6, 0.8}})));
  CHECK(l2_normalize(rows({{0, 0}})).isZero(0.0));
  Rng rng(1);
  const Matrix x = random_matrix(rng, 6, 5);
  for (double c : {1e-3, 0.5, 7.0, 1e4}) {
    CHECK(l2_normalize(c * x).isApprox(l2_normalize(x), 1e-14));
  }
  CHECK(l2_normalize(x).rowwise().norm().isApproxToConstant(1.0, 1e-14));
}

TEST_CASE("similarity examples") {
  CHECK(similarity(rows({{1, 0}}), rows({{1, 0}}), 1.0).scores(0, 0) == doctest::Approx(1.0));
  CHECK(similarity(rows({{1, 0}}), rows({{0, 1}}), 1.0).scores(0, 0) == 0.0);
  CHECK(similarity(rows({{1, 0}}), rows({{1, 0}}), 0.07).scores(0, 0) ==
        doctest::Approx(14.285714285714286).epsilon(1e-14));
  CHECK_THROWS_AS(similarity(rows({{1, 0}}), rows({{1, 0, 0}}), 1.0), DataError);
  CHECK_THROWS_AS(similarity(rows({{1, 0}}), rows({{1, 0}, {0, 1}}), 1.0), DataError);
  CHECK_THROWS_AS(similarity(rows({{1, 0}}), rows({{1, 0}}), 0.0), DataError);
  CHECK_THROWS_AS(similarity(rows({{1, 0}}), rows({{1, 0}}), -0.5), DataError);
}

TEST_CASE("similarity entries are bounded cosines") {
  Rng rng(2);
  const Matrix a = random_matrix(rng, 7, 3);
  const Matrix b = random_matrix(rng, 7, 3);
  const auto s = similarity(a, b, 0.2);
  CHECK((s.scores * s.tau).cwiseAbs().maxCoeff() <= 1.0 + 1e-9);
}

TEST_CASE("loss examples") {
  Rng rng(3);
  CHECK(loss_of(random_matrix(rng, 1, 4), random_matrix(rng, 1, 4), 0.07) == 0.0);

  const Matrix a = rows({{1, 2, 3}}).replicate(4, 1);
  const Matrix b = rows({{-1, 0, 5}}).replicate(4, 1);
  CHECK(std::abs(loss_of(a, b, 0.07) - std::log(4.0)) <= 1e-12);

  const Matrix eye = Matrix::Identity(2, 2);
  const double expect = std::log(1.0 + std::exp(-1.0));
  CHECK(loss_of(eye, eye, 1.0) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(expect == doctest::Approx(0.313262).epsilon(1e-6));
}

TEST_CASE("loss input validation") {
  CHECK_THROWS_AS(loss_of(Matrix::Zero(2, 3), Matrix::Zero(3, 3), 1.0), DataError);
  CHECK_THROWS_AS(loss_of(Matrix::Zero(0, 3), Matrix::Zero(0, 3), 1.0), DataError);
  Matrix nan = Matrix::Ones(2, 2);
  nan(1, 1) = NAN;
  CHECK_THROWS_AS(loss_of(nan, Matrix::Ones(2, 2), 1.0), DataError);
}

TEST_CASE("small temperature stays finite and zero rows are legal") {
  Rng rng(4);
  const Matrix a = random_matrix(rng, 16, 8);
  const auto out = symmetric_contrastive_loss(a, a, 0.01);
  CHECK(std::isfinite(out.loss));
  CHECK(out.grad_a.allFinite());

  Matrix with_zero = random_matrix(rng, 3, 2);
  with_zero.row(1).setZero();
  const auto s = similarity(with_zero, random_matrix(rng, 3, 2), 0.5);
  CHECK(s.scores.row(1).isZero(0.0));
  const auto l = symmetric_contrastive_loss(with_zero, random_matrix(rng, 3, 2), 0.5);
  CHECK(std::isfinite(l.loss));
  CHECK(l.grad_a.allFinite());
}

TEST_CASE("loss gradients match central finite differences") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto batch = static_cast<Eigen::Index>(1 + rng.below(5));
    const auto dim = static_cast<Eigen::Index>(1 + rng.below(6));
    Matrix a = random_matrix(rng, batch, dim);
    Matrix b = random_matrix(rng, batch, dim);
    double log_tau = std::log(rng.uniform(0.05, 1.5));

    const auto out = symmetric_contrastive_loss(a, b, std::exp(log_tau));
    auto f = [&] { return loss_of(a, b, std::exp(log_tau)); };
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      REQUIRE(rel_error(out.grad_a.data()[i], central_difference(a.data()[i], f)) <= 1e-4);
      REQUIRE(rel_error(out.grad_b.data()[i], central_difference(b.data()[i], f)) <= 1e-4);
    }
    REQUIRE(rel_error(out.grad_log_tau, central_difference(log_tau, f)) <= 1e-4);
  }
}

TEST_CASE("loss invariants on randomized instances") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto batch = static_cast<Eigen::Index>(2 + rng.below(8));
    const auto dim = static_cast<Eigen::Index>(1 + rng.below(6));
    const double tau = rng.uniform(0.02, 1.0);
    Matrix a = random_matrix(rng, batch, dim);
    Matrix b = random_matrix(rng, batch, dim);
    const double base = loss_of(a, b, tau);
    CHECK(base >= 0.0);

    // Positive row scaling.
    Matrix a2 = a, b2 = b;
    a2.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(batch)))) *= rng.uniform(0.1, 10);
    b2.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(batch)))) *= rng.uniform(0.1, 10);
    CHECK(std::abs(loss_of(a2, b2, tau) - base) <= 1e-12);

    // Joint row permutation.
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(batch));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    rng.shuffle(std::span<Eigen::Index>(perm));
    Matrix ap(batch, dim), bp(batch, dim);
    for (Eigen::Index i = 0; i < batch; ++i) {
      ap.row(i) = a.row(perm[static_cast<std::size_t>(i)]);
      bp.row(i) = b.row(perm[static_cast<std::size_t>(i)]);
    }
    CHECK(std::abs(loss_of(ap, bp, tau) - base) <= 1e-12);

    // Role swap.
    CHECK(std::abs(loss_of(b, a, tau) - base) <= 1e-12);
  }
}

TEST_CASE("uniform similarity gives ln B exactly") {
  for (Eigen::Index batch = 1; batch <= 64; batch *= 2) {
    const Matrix a = Matrix::Ones(batch, 3);
    const Matrix b = Matrix::Ones(batch, 3) * 2.0;
    CHECK(std::abs(loss_of(a, b, 0.07) - std::log(static_cast<double>(batch))) <= 1e-12);
  }
}

TEST_CASE("gradient descent decreases the loss at every accepted step") {
  Rng rng(7);
  Matrix a = random_matrix(rng, 8, 4);
  Matrix b = random_matrix(rng, 8, 4);
  const double tau = 0.5;
  double step = 0.1;
  double loss = loss_of(a, b, tau);
  const double initial = loss;
  int accepted = 0;
  for (int it = 0; it < 200; ++it) {
    const auto out = symmetric_contrastive_loss(a, b, tau);
    Matrix a_next = a - step * out.grad_a;
    Matrix b_next = b - step * out.grad_b;
    const double next = loss_of(a_next, b_next, tau);
    if (next < loss) {
      a = std::move(a_next);
      b = std::move(b_next);
      loss = next;
      ++accepted;
    } else {
      step *= 0.5;
    }
  }
  CHECK(accepted >= 190);
  CHECK(loss < 0.5 * initial);
}

TEST_CASE("very small temperatures fall back to per-direction shifts") {
  Rng rng(8);
  const Matrix a = random_matrix(rng, 6, 3);
  const Matrix b = random_matrix(rng, 6, 3);
  const auto out = symmetric_contrastive_loss(a, b, 1e-3);
  CHECK(std::isfinite(out.loss));
  CHECK(out.grad_a.allFinite());
  // Close to the temperature-free limit where only the argmax survives.
  const auto hot = symmetric_contrastive_loss(a, b, 2e-3);
  CHECK(out.loss == doctest::Approx(2.0 * hot.loss).epsilon(0.05));
}
