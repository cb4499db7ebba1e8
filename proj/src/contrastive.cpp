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

#include "coembed/contrastive.hpp"

#include <cmath>
#include <string>

#include "coembed/errors.hpp"

namespace coembed {

namespace {

void check_pair_shapes(const Matrix& a, const Matrix& b, double tau) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DataError("contrastive: shape mismatch " + std::to_string(a.rows()) +
                    "x" + std::to_string(a.cols()) + " vs " +
                    std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw DataError("contrastive: temperature must be positive");
  }
}

Vector row_norms(const Matrix& m) {
  return m.rowwise().norm().cwiseMax(kNormEpsilon);
}

// Backpropagates through x / max(||x||, eps).
Matrix normalize_backward(const Matrix& raw, const Matrix& unit,
                          const Vector& norms, const Matrix& grad_unit) {
  // Rows clamped by the epsilon guard are a plain scaling, so the radial
  // component is kept for them.
  Vector radial = unit.cwiseProduct(grad_unit).rowwise().sum();
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    if (!(raw.row(i).norm() > kNormEpsilon)) radial(i) = 0.0;
  }
  const Matrix radial_part = unit.array().colwise() * radial.array();
  Matrix out = grad_unit - radial_part;
  out.array().colwise() /= norms.array();
  return out;
}

}  // namespace

Matrix l2_normalize(const Matrix& rows) {
  return rows.array().colwise() / row_norms(rows).array();
}

SimilarityMatrix similarity(const Matrix& a, const Matrix& b, double tau) {
  check_pair_shapes(a, b, tau);
  SimilarityMatrix s;
  s.tau = tau;
  s.scores = (l2_normalize(a) * l2_normalize(b).transpose()) / tau;
  return s;
}

LossOutput symmetric_contrastive_loss(const Matrix& a, const Matrix& b,
                                      double tau) {
  check_pair_shapes(a, b, tau);
  if (a.rows() < 1) throw DataError("contrastive: empty batch");
  if (!a.allFinite() || !b.allFinite()) {
    throw DataError("contrastive: non-finite embedding");
  }

  const Eigen::Index batch = a.rows();
  const double inv_batch = 1.0 / static_cast<double>(batch);
  const Vector norm_a = row_norms(a);
  const Vector norm_b = row_norms(b);
  const Matrix unit_a = a.array().colwise() / norm_a.array();
  const Matrix unit_b = b.array().colwise() / norm_b.array();
  const Matrix scores = (unit_a * unit_b.transpose()) / tau;

  // Max-subtracted softmax in both directions. While the score spread is
  // within exp's range a single global shift serves rows and columns alike
  // (always the case for 1/tau <= 100); otherwise each direction is shifted by
  // its own maxima.
  Vector row_shift;
  Eigen::RowVectorXd col_shift;
  Matrix row_soft;
  Matrix col_soft;
  if (scores.maxCoeff() - scores.minCoeff() < 600.0) {
    const double shift = scores.maxCoeff();
    row_shift = Vector::Constant(batch, shift);
    col_shift = Eigen::RowVectorXd::Constant(batch, shift);
    row_soft = (scores.array() - shift).exp().matrix();
    col_soft = row_soft;
  } else {
    row_shift = scores.rowwise().maxCoeff();
    col_shift = scores.colwise().maxCoeff();
    row_soft = (scores.colwise() - row_shift).array().exp().matrix();
    col_soft = (scores.rowwise() - col_shift).array().exp().matrix();
  }
  const Vector row_z = row_soft.rowwise().sum();
  const Eigen::RowVectorXd col_z = col_soft.colwise().sum();
  row_soft.array().colwise() /= row_z.array();
  col_soft.array().rowwise() /= col_z.array();

  double row_ce = 0.0;
  double col_ce = 0.0;
  for (Eigen::Index i = 0; i < batch; ++i) {
    row_ce -= scores(i, i) - row_shift(i) - std::log(row_z(i));
    col_ce -= scores(i, i) - col_shift(i) - std::log(col_z(i));
  }

  LossOutput out;
  out.loss = 0.5 * inv_batch * (row_ce + col_ce);

  // d loss / d scores.
  Matrix grad_scores = 0.5 * inv_batch * (row_soft + col_soft);
  grad_scores.diagonal().array() -= inv_batch;

  const Matrix grad_unit_a = grad_scores * unit_b / tau;
  const Matrix grad_unit_b = grad_scores.transpose() * unit_a / tau;
  out.grad_a = normalize_backward(a, unit_a, norm_a, grad_unit_a);
  out.grad_b = normalize_backward(b, unit_b, norm_b, grad_unit_b);
  // scores = cos / exp(ln tau), so d scores / d ln tau = -scores.
  out.grad_log_tau = -(grad_scores.cwiseProduct(scores)).sum();

  if (!std::isfinite(out.loss) || !out.grad_a.allFinite() ||
      !out.grad_b.allFinite() || !std::isfinite(out.grad_log_tau)) {
    throw NumericError("contrastive: non-finite loss or gradient");
  }
  // Rounding can leave a tiny negative value at the exact optimum.
  out.loss = std::max(out.loss, 0.0);
  return out;
}

}  // namespace coembed
