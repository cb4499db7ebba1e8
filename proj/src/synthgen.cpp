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

#include "coembed/synthgen.hpp"

#include <cmath>
#include <string>

#include "coembed/errors.hpp"
#include "coembed/rng.hpp"

namespace coembed {

namespace {

Matrix gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  }
  return m;
}

}  // namespace

void SynthConfig::validate() const {
  if (latent_dim == 0 || n_classes == 0 || n_pairs == 0) {
    throw DataError("synth: latent_dim, classes and pairs must be positive");
  }
  if (dim_a < latent_dim || dim_b < latent_dim) {
    throw DataError("synth: dim_a and dim_b must be >= latent_dim");
  }
  if (!(within_class_sigma >= 0.0) || !(noise_sigma >= 0.0) ||
      !std::isfinite(within_class_sigma) || !std::isfinite(noise_sigma)) {
    throw DataError("synth: sigmas must be finite and non-negative");
  }
  if (n_classes > static_cast<std::size_t>(INT32_MAX)) {
    throw DataError("synth: too many classes for 32-bit labels");
  }
}

SynthResult generate(const SynthConfig& config) {
  config.validate();
  const auto latent = static_cast<Eigen::Index>(config.latent_dim);
  const auto dim_a = static_cast<Eigen::Index>(config.dim_a);
  const auto dim_b = static_cast<Eigen::Index>(config.dim_b);
  const double mix_scale = 1.0 / std::sqrt(static_cast<double>(config.latent_dim));

  // Separate streams so that, e.g., changing n_pairs leaves the maps intact.
  Rng structure = Rng::keyed(config.seed, 0);
  Rng samples = Rng::keyed(config.seed, 1);

  SynthResult out;
  SynthGroundTruth& gt = out.truth;
  gt.centers = gaussian(structure, static_cast<Eigen::Index>(config.n_classes), latent, 1.0);
  gt.mix_a = gaussian(structure, dim_a, latent, mix_scale);
  gt.mix_b = gaussian(structure, dim_b, latent, mix_scale);
  gt.latents.resize(static_cast<Eigen::Index>(config.n_pairs), latent);

  PairDataset& ds = out.dataset;
  ds.dim_a = static_cast<std::uint32_t>(config.dim_a);
  ds.dim_b = static_cast<std::uint32_t>(config.dim_b);
  ds.labeled = true;
  ds.records.reserve(config.n_pairs);

  Vector z(latent);
  for (std::size_t p = 0; p < config.n_pairs; ++p) {
    const auto label = static_cast<Eigen::Index>(samples.below(config.n_classes));
    for (Eigen::Index j = 0; j < latent; ++j) {
      z(j) = gt.centers(label, j) + config.within_class_sigma * samples.normal();
    }
    gt.latents.row(static_cast<Eigen::Index>(p)) = z.transpose();

    Vector a = gt.mix_a * z;
    if (config.nonlinear) a = a.array().tanh();
    Vector b = gt.mix_b * z;
    if (config.noise_sigma > 0.0) {
      for (Eigen::Index i = 0; i < dim_a; ++i) a(i) += config.noise_sigma * samples.normal();
      for (Eigen::Index i = 0; i < dim_b; ++i) b(i) += config.noise_sigma * samples.normal();
    }

    PairRecord rec;
    rec.pair_id = p;
    rec.label = static_cast<std::int32_t>(label);
    rec.vec_a.assign(a.data(), a.data() + a.size());
    rec.vec_b.assign(b.data(), b.data() + b.size());
    ds.records.push_back(std::move(rec));
  }
  return out;
}

ProjectionHead ground_truth_head(const SynthGroundTruth& truth) {
  AffineLayer layer;
  layer.weights = truth.mix_b * truth.mix_a.completeOrthogonalDecomposition().pseudoInverse();
  layer.bias = Vector::Zero(layer.weights.rows());
  ProjectionHead head;
  head.layers.push_back(std::move(layer));
  head.set_temperature(kDefaultTemperature);
  return head;
}

}  // namespace coembed
