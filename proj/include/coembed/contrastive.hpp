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

#pragma once

#include "coembed/projhead.hpp"

namespace coembed {

inline constexpr double kNormEpsilon = 1e-12;

struct SimilarityMatrix {
  Matrix scores;  // scores(i, j) = cos(a_i, b_j) / tau
  double tau = 1.0;
};

struct LossOutput {
  double loss = 0.0;
  Matrix grad_a;
  Matrix grad_b;
  double grad_log_tau = 0.0;  // d loss / d ln(tau)
};

// Divides each row by max(||row||, 1e-12).
Matrix l2_normalize(const Matrix& rows);

SimilarityMatrix similarity(const Matrix& a, const Matrix& b, double tau);

// Symmetric in-batch InfoNCE. Row i of `a` and row i of `b` form the positive
// pair; every other combination in the batch is a negative. Gradients are
// taken with respect to the unnormalized inputs.
LossOutput symmetric_contrastive_loss(const Matrix& a, const Matrix& b,
                                      double tau);

}  // namespace coembed
