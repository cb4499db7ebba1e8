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
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace coembed {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation : std::uint8_t { kIdentity = 0, kRelu = 1 };

std::string_view to_string(Activation act);
Activation parse_activation(std::string_view name);

struct AffineLayer {
  Matrix weights;  // out_dim x in_dim
  Vector bias;     // out_dim
  Activation activation = Activation::kIdentity;

  std::size_t in_dim() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weights.rows()); }
};

// Upper bound on the logit scale 1/tau.
inline constexpr double kMaxLogitScale = 100.0;
inline constexpr double kDefaultTemperature = 0.07;

// The learnable transform from one frozen space into the shared space.
//
// Temperature is stored as log_inv_tau = ln(1/tau), the log of the logit
// scale, and is clamped so that 1/tau <= kMaxLogitScale.
struct ProjectionHead {
  std::vector<AffineLayer> layers;
  double log_inv_tau = 0.0;
  bool learnable_tau = false;

  std::size_t in_dim() const { return layers.front().in_dim(); }
  std::size_t out_dim() const { return layers.back().out_dim(); }
  double temperature() const;
  void set_temperature(double tau);
  std::size_t parameter_count() const;

  // Throws DataError when layers are empty, chained dims disagree, the last
  // activation is not identity, a value is non-finite or the logit scale is
  // out of range.
  void validate() const;
};

struct HeadGradients {
  std::vector<Matrix> weights;
  std::vector<Vector> bias;
  double log_inv_tau = 0.0;

  static HeadGradients zeros_like(const ProjectionHead& head);
  bool all_finite() const;
};

// Per-layer inputs and pre-activations retained by forward for backward.
struct ForwardTape {
  std::vector<Matrix> inputs;
  std::vector<Matrix> pre_activations;
};

struct ForwardResult {
  Matrix outputs;
  ForwardTape tape;
};

struct BackwardResult {
  HeadGradients grads;
  Matrix input_grads;
};

// Glorot-uniform weights, zero biases, tau = 0.07. `hidden_activation` is
// applied after every layer but the last, which is always identity.
ProjectionHead init_head(std::span<const std::size_t> layer_dims,
                         Activation hidden_activation, std::uint64_t seed);

// Rows of `inputs` are batch items.
ForwardResult forward(const ProjectionHead& head, const Matrix& inputs);

// Forward without retaining the tape.
Matrix apply(const ProjectionHead& head, const Matrix& inputs);

BackwardResult backward(const ProjectionHead& head, const ForwardTape& tape,
                        const Matrix& output_grads);

inline constexpr std::uint16_t kPrjwVersion = 1;

std::size_t save_head(const ProjectionHead& head, std::ostream& sink);
ProjectionHead load_head(std::istream& source);
std::size_t save_head(const ProjectionHead& head,
                      const std::filesystem::path& path);
ProjectionHead load_head(const std::filesystem::path& path);

// FNV-1a over the PRJW serialization.
std::uint64_t head_checksum(const ProjectionHead& head);

}  // namespace coembed
