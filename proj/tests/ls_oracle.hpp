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

// Least-squares oracle for linear a -> b maps. Independent of the generator's
// own pseudo-inverse construction.

#include "coembed/embedstore.hpp"
#include "coembed/projhead.hpp"

namespace coembed::testing {

inline Matrix as_matrix(const PairDataset& ds, bool side_a) {
  const auto dim = side_a ? ds.dim_a : ds.dim_b;
  Matrix m(static_cast<Eigen::Index>(ds.size()), dim);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& v = side_a ? ds.records[i].vec_a : ds.records[i].vec_b;
    for (std::uint32_t j = 0; j < dim; ++j) m(static_cast<Eigen::Index>(i), j) = v[j];
  }
  return m;
}

// Least-squares map T minimizing sum ||T x_i - y_i||^2, solved on the design
// matrix with a complete orthogonal decomposition (X is rank-deficient when
// dim_a > latent_dim, so the plain normal equations are singular). Returns
// the largest absolute residual.
inline double max_ls_residual(const Matrix& x, const Matrix& y) {
  const Matrix t_transposed = x.completeOrthogonalDecomposition().solve(y);
  return (x * t_transposed - y).cwiseAbs().maxCoeff();
}

}  // namespace coembed::testing
