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

#include "coembed/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>

#include "coembed/contrastive.hpp"
#include "coembed/errors.hpp"
#include "coembed/text.hpp"

namespace coembed {

namespace {

// Position of `target` in row `query` of `sims` when sorted descending with
// ties to the lower index: the count of entries that outrank it.
std::size_t rank_of(const Matrix& sims, Eigen::Index query, Eigen::Index target) {
  const double s = sims(query, target);
  std::size_t rank = 0;
  for (Eigen::Index j = 0; j < sims.cols(); ++j) {
    const double v = sims(query, j);
    if (v > s || (v == s && j < target)) ++rank;
  }
  return rank;
}

Eigen::Index nearest(const Matrix& sims, Eigen::Index query) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < sims.cols(); ++j) {
    if (sims(query, j) > sims(query, best)) best = j;
  }
  return best;
}

void check_paired(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DataError("eval: a and b embeddings differ in shape");
  }
}

}  // namespace

RecallMap recall_at_k(const Matrix& a_emb, const Matrix& b_emb,
                      std::span<const std::size_t> ks) {
  check_paired(a_emb, b_emb);
  const auto n = static_cast<std::size_t>(a_emb.rows());
  if (n < 2) throw DataError("recall@k needs at least 2 pairs");
  for (std::size_t k : ks) {
    if (k < 1 || k > n) {
      throw DataError("k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
    }
  }
  const Matrix sims = l2_normalize(a_emb) * l2_normalize(b_emb).transpose();
  const Matrix sims_t = sims.transpose();

  std::vector<std::size_t> rank_ab(n);
  std::vector<std::size_t> rank_ba(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto q = static_cast<Eigen::Index>(i);
    rank_ab[i] = rank_of(sims, q, q);
    rank_ba[i] = rank_of(sims_t, q, q);
  }
  RecallMap out;
  for (std::size_t k : ks) {
    const auto hits_ab = std::count_if(rank_ab.begin(), rank_ab.end(), [k](std::size_t r) { return r < k; });
    const auto hits_ba = std::count_if(rank_ba.begin(), rank_ba.end(), [k](std::size_t r) { return r < k; });
    out[k] = {static_cast<double>(hits_ab) / static_cast<double>(n),
              static_cast<double>(hits_ba) / static_cast<double>(n)};
  }
  return out;
}

DirectionalRate class_match_accuracy(const Matrix& a_emb, const Matrix& b_emb,
                                     std::span<const std::int32_t> labels) {
  check_paired(a_emb, b_emb);
  const auto n = static_cast<std::size_t>(a_emb.rows());
  if (labels.size() != n) throw DataError("class match: label count mismatch");
  if (n == 0) throw DataError("class match: no queries");
  if (std::set<std::int32_t>(labels.begin(), labels.end()).size() < 2) {
    throw DataError("class match: needs at least 2 distinct labels");
  }
  const Matrix sims = l2_normalize(a_emb) * l2_normalize(b_emb).transpose();
  const Matrix sims_t = sims.transpose();
  std::size_t hits_ab = 0;
  std::size_t hits_ba = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto q = static_cast<Eigen::Index>(i);
    hits_ab += labels[static_cast<std::size_t>(nearest(sims, q))] == labels[i];
    hits_ba += labels[static_cast<std::size_t>(nearest(sims_t, q))] == labels[i];
  }
  return {static_cast<double>(hits_ab) / static_cast<double>(n),
          static_cast<double>(hits_ba) / static_cast<double>(n)};
}

double silhouette(const Matrix& embeddings, std::span<const std::int32_t> labels) {
  const auto m = static_cast<std::size_t>(embeddings.rows());
  if (labels.size() != m) throw DataError("silhouette: label count mismatch");
  if (m < 3) throw DataError("silhouette: needs at least 3 points");

  // Dense class ids.
  std::unordered_map<std::int32_t, std::size_t> class_of;
  std::vector<std::size_t> cls(m);
  for (std::size_t i = 0; i < m; ++i) {
    cls[i] = class_of.try_emplace(labels[i], class_of.size()).first->second;
  }
  const std::size_t n_classes = class_of.size();
  if (n_classes < 2) throw DataError("silhouette: needs at least 2 classes");
  std::vector<std::size_t> class_size(n_classes, 0);
  for (std::size_t c : cls) ++class_size[c];

  const Matrix unit = l2_normalize(embeddings);
  const Matrix dist = (1.0 - (unit * unit.transpose()).array()).matrix();

  double total = 0.0;
  std::vector<double> sum_to(n_classes);
  for (std::size_t i = 0; i < m; ++i) {
    if (class_size[cls[i]] == 1) continue;
    std::fill(sum_to.begin(), sum_to.end(), 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      if (j != i) sum_to[cls[j]] += dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    const double a = sum_to[cls[i]] / static_cast<double>(class_size[cls[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n_classes; ++c) {
      if (c != cls[i]) b = std::min(b, sum_to[c] / static_cast<double>(class_size[c]));
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(m);
}

Matrix pca_project_2d(const Matrix& embeddings) {
  if (embeddings.rows() < 2 || embeddings.cols() < 2) {
    throw DataError("pca: needs at least 2 rows and 2 columns");
  }
  const Matrix centered = embeddings.rowwise() - embeddings.colwise().mean();
  const double scale = embeddings.cwiseAbs().maxCoeff();
  if (centered.cwiseAbs().maxCoeff() <= 1e-14 * std::max(scale, 1.0)) {
    throw DataError("pca: rank-0 input, all rows are equal");
  }
  Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  Matrix axes = svd.matrixV().leftCols(2);
  for (Eigen::Index c = 0; c < 2; ++c) {
    Eigen::Index arg = 0;
    for (Eigen::Index r = 1; r < axes.rows(); ++r) {
      if (std::abs(axes(r, c)) > std::abs(axes(arg, c))) arg = r;
    }
    if (axes(arg, c) < 0.0) axes.col(c) *= -1.0;
  }
  return centered * axes;
}

EvalResult evaluate(const PairDataset& dataset, const Heads& heads,
                    std::span<const std::size_t> indices,
                    std::span<const std::size_t> ks) {
  for (std::size_t i : indices) {
    if (i >= dataset.size()) throw DataError("eval: record index out of range");
  }
  EmbeddingTable table = EmbeddingTable::from(dataset);
  const Matrix emb_a = l2_normalize(project_a(heads, table.gather_a(indices)));
  const Matrix emb_b = l2_normalize(project_b(heads, table.gather_b(indices)));
  if (emb_a.cols() != emb_b.cols()) {
    throw DataError("eval: projected dims differ between modalities");
  }

  std::vector<std::int32_t> labels;
  labels.reserve(indices.size());
  for (std::size_t i : indices) labels.push_back(dataset.records[i].label);

  EvalResult result;
  EvalReport& rep = result.report;
  rep.n_queries = indices.size();
  rep.recall_at_k = recall_at_k(emb_a, emb_b, ks);

  const bool class_metrics =
      dataset.labeled && std::set<std::int32_t>(labels.begin(), labels.end()).size() >= 2;
  Matrix joint(emb_a.rows() + emb_b.rows(), emb_a.cols());
  joint << emb_a, emb_b;
  if (class_metrics) {
    rep.class_match_accuracy = class_match_accuracy(emb_a, emb_b, labels);
    std::vector<std::int32_t> joint_labels = labels;
    joint_labels.insert(joint_labels.end(), labels.begin(), labels.end());
    rep.silhouette = silhouette(joint, joint_labels);
  }

  const Matrix coords = pca_project_2d(joint);
  const auto n = static_cast<Eigen::Index>(indices.size());
  result.points.reserve(2 * indices.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const PairRecord& r = dataset.records[indices[static_cast<std::size_t>(i)]];
    result.points.push_back({r.pair_id, Modality::kA, r.label, coords(i, 0), coords(i, 1)});
    result.points.push_back({r.pair_id, Modality::kB, r.label, coords(n + i, 0), coords(n + i, 1)});
  }
  return result;
}

EvalResult evaluate(const PairDataset& dataset, const Heads& heads,
                    const SplitIndices& split, std::span<const std::size_t> ks) {
  return evaluate(dataset, heads, split.val, ks);
}

void write_eval_report(const EvalReport& report, std::ostream& out) {
  out << "# coembed eval report\n";
  out << "n_queries=" << report.n_queries << '\n';
  for (const auto& [k, rate] : report.recall_at_k) {
    out << "recall@" << k << ".a_to_b=" << format_double(rate.a_to_b) << '\n';
    out << "recall@" << k << ".b_to_a=" << format_double(rate.b_to_a) << '\n';
  }
  if (report.class_match_accuracy) {
    out << "class_match.a_to_b=" << format_double(report.class_match_accuracy->a_to_b) << '\n';
    out << "class_match.b_to_a=" << format_double(report.class_match_accuracy->b_to_a) << '\n';
  }
  if (report.silhouette) out << "silhouette=" << format_double(*report.silhouette) << '\n';
}

void write_points_csv(const ProjectedPoints& points, std::ostream& out) {
  out << "pair_id,modality,label,x,y\n";
  for (const ProjectedPoint& p : points) {
    out << p.pair_id << ',' << static_cast<char>(p.modality) << ',' << p.label << ','
        << format_double(p.x) << ',' << format_double(p.y) << '\n';
  }
}

}  // namespace coembed
