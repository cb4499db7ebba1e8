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

#include <cstddef>
#include <cstdint>

#include "coembed/embedstore.hpp"
#include "coembed/projhead.hpp"

namespace coembed {

// Paired embeddings drawn from a shared Gaussian class-mixture latent space
// through two fixed random linear maps.
struct SynthConfig {
  std::size_t latent_dim = 16;
  std::size_t dim_a = 32;
  std::size_t dim_b = 64;
  std::size_t n_classes = 8;
  std::size_t n_pairs = 2000;
  double within_class_sigma = 0.3;
  double noise_sigma = 0.0;
  bool nonlinear = false;  // vec_a = tanh(A1 z) + noise
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthGroundTruth {
  Matrix centers;  // n_classes x latent_dim
  Matrix mix_a;    // dim_a x latent_dim
  Matrix mix_b;    // dim_b x latent_dim
  Matrix latents;  // n_pairs x latent_dim, the z behind each record
};

struct SynthResult {
  PairDataset dataset;
  SynthGroundTruth truth;
};

SynthResult generate(const SynthConfig& config);

// Single-layer head implementing mix_b * pinv(mix_a), the exact a -> b map of
// a noiseless linear instance.
ProjectionHead ground_truth_head(const SynthGroundTruth& truth);

}  // namespace coembed
