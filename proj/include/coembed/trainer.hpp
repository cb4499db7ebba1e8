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
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coembed/embedstore.hpp"
#include "coembed/optim.hpp"
#include "coembed/projhead.hpp"

namespace coembed {

struct TrainConfig {
  std::size_t epochs = 300;
  std::size_t batch_size = 4096;
  double lr = 1e-4;
  double train_fraction = 0.67;
  double tau = kDefaultTemperature;
  bool learnable_tau = false;
  // Hidden widths between the input and output dims; empty = single affine
  // layer.
  std::vector<std::size_t> hidden;
  Activation activation = Activation::kRelu;  // hidden layers only
  std::uint64_t seed = 0;
  bool two_sided = false;
  // Output dim of the shared space. 0 = dim_b of the dataset; must be 0 or
  // dim_b when one-sided.
  std::size_t out_dim = 0;
  std::size_t checkpoint_every = 0;

  // Flag-style echo, e.g. "--epochs 300 --batch 4096 ...".
  std::string to_flags() const;
};

// Head for modality A and, when two-sided, a head for modality B. The
// temperature lives on head_a.
struct Heads {
  ProjectionHead head_a;
  std::optional<ProjectionHead> head_b;

  double temperature() const { return head_a.temperature(); }
};

struct TrainState {
  Heads heads;
  AdamState adam_a;
  std::optional<AdamState> adam_b;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  TrainConfig config;
  std::vector<std::uint32_t> layer_dims_a;
  std::vector<std::uint32_t> layer_dims_b;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::vector<EpochStats> epochs;
  std::uint64_t final_checksum_a = 0;
  std::optional<std::uint64_t> final_checksum_b;
};

struct FitResult {
  Heads heads;
  TrainReport report;
};

struct FitOptions {
  // When set and config.checkpoint_every > 0, writes
  // "<prefix>.epoch<N>" (and "<prefix>.b.epoch<N>" for two-sided runs).
  std::optional<std::filesystem::path> checkpoint_prefix;
  std::function<void(const EpochStats&)> on_epoch;
};

// Cached encoder outputs promoted to 64-bit, one row per record. Built once
// per run; never written to during training.
struct EmbeddingTable {
  Matrix a;
  Matrix b;

  static EmbeddingTable from(const PairDataset& dataset);
  Matrix gather_a(std::span<const std::size_t> rows) const;
  Matrix gather_b(std::span<const std::size_t> rows) const;
};

// Fisher-Yates shuffle keyed by (seed, epoch), cut into consecutive batches.
// A trailing singleton batch is dropped.
std::vector<std::vector<std::size_t>> make_batches(
    std::span<const std::size_t> indices, std::size_t batch_size,
    std::uint64_t seed, std::uint64_t epoch);

// Loss of one batch of raw encoder vectors pushed through the heads, with
// gradients for every trainable parameter written to grads_a / grads_b when
// non-null (grads_b only when two-sided).
double batch_step(const Heads& heads, const Matrix& raw_a, const Matrix& raw_b,
                  HeadGradients* grads_a, HeadGradients* grads_b);

TrainState init_training(const PairDataset& dataset, const TrainConfig& config);

// Returns the batch-size-weighted mean training loss.
double train_epoch(TrainState& state, const EmbeddingTable& table,
                   const SplitIndices& split, const TrainConfig& config,
                   std::size_t epoch);

// Mean contrastive loss over in-order batches of `indices`; no parameters
// change.
double evaluate_loss(const Heads& heads, const EmbeddingTable& table,
                     std::span<const std::size_t> indices,
                     std::size_t batch_size);

// Projects through head(s); the B side passes through unchanged when
// one-sided.
Matrix project_a(const Heads& heads, const Matrix& a);
Matrix project_b(const Heads& heads, const Matrix& b);

FitResult fit(const PairDataset& dataset, const TrainConfig& config,
              const FitOptions& options = {});

void write_report(const TrainReport& report, std::ostream& out);

}  // namespace coembed
