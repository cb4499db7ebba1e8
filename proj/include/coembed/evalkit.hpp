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
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "coembed/embedstore.hpp"
#include "coembed/projhead.hpp"
#include "coembed/trainer.hpp"

namespace coembed {

struct DirectionalRate {
  double a_to_b = 0.0;
  double b_to_a = 0.0;

  bool operator==(const DirectionalRate&) const = default;
};

using RecallMap = std::map<std::size_t, DirectionalRate>;

struct EvalReport {
  RecallMap recall_at_k;
  std::optional<DirectionalRate> class_match_accuracy;
  std::optional<double> silhouette;
  std::size_t n_queries = 0;
};

enum class Modality : char { kA = 'A', kB = 'B' };

struct ProjectedPoint {
  std::uint64_t pair_id = 0;
  Modality modality = Modality::kA;
  std::int32_t label = -1;
  double x = 0.0;
  double y = 0.0;
};

using ProjectedPoints = std::vector<ProjectedPoint>;

// Row i of a_emb and b_emb is a ground-truth pair. Ranking is by cosine
// similarity, descending, ties to the lower row index.
RecallMap recall_at_k(const Matrix& a_emb, const Matrix& b_emb,
                      std::span<const std::size_t> ks);

// Fraction of queries whose nearest cross-modal neighbour shares their label.
DirectionalRate class_match_accuracy(const Matrix& a_emb, const Matrix& b_emb,
                                     std::span<const std::int32_t> labels);

// Mean silhouette under cosine distance; singleton-class points score 0.
double silhouette(const Matrix& embeddings, std::span<const std::int32_t> labels);

// Rows projected onto the top two principal axes of the centered data.
// Each axis is signed so its largest-magnitude entry is positive.
Matrix pca_project_2d(const Matrix& embeddings);

struct EvalResult {
  EvalReport report;
  ProjectedPoints points;
};

// Projects the given records through the heads and scores them.
EvalResult evaluate(const PairDataset& dataset, const Heads& heads,
                    std::span<const std::size_t> indices,
                    std::span<const std::size_t> ks);

// Convenience overload evaluating split.val.
EvalResult evaluate(const PairDataset& dataset, const Heads& heads,
                    const SplitIndices& split, std::span<const std::size_t> ks);

void write_eval_report(const EvalReport& report, std::ostream& out);
void write_points_csv(const ProjectedPoints& points, std::ostream& out);

}  // namespace coembed
