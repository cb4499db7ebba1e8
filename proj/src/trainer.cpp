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

#include "coembed/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include "coembed/contrastive.hpp"
#include "coembed/errors.hpp"
#include "coembed/rng.hpp"
#include "coembed/text.hpp"

namespace coembed {

namespace {

constexpr std::uint64_t kHeadAStream = 0x100;
constexpr std::uint64_t kHeadBStream = 0x101;

std::vector<std::size_t> head_dims(std::size_t in, const TrainConfig& config,
                                   std::size_t out) {
  std::vector<std::size_t> dims{in};
  dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
  dims.push_back(out);
  return dims;
}

std::vector<std::uint32_t> dims_of(const ProjectionHead& head) {
  std::vector<std::uint32_t> dims{static_cast<std::uint32_t>(head.in_dim())};
  for (const auto& l : head.layers) dims.push_back(static_cast<std::uint32_t>(l.out_dim()));
  return dims;
}

std::string join(const std::vector<std::uint32_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

std::string hex64(std::uint64_t x) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

}  // namespace

double batch_step(const Heads& heads, const Matrix& raw_a, const Matrix& raw_b,
                  HeadGradients* grads_a, HeadGradients* grads_b) {
  const ForwardResult fa = forward(heads.head_a, raw_a);
  std::optional<ForwardResult> fb;
  if (heads.head_b) fb = forward(*heads.head_b, raw_b);
  const Matrix& emb_b = fb ? fb->outputs : raw_b;
  if (!fa.outputs.allFinite() || !emb_b.allFinite()) {
    throw NumericError("head produced non-finite outputs");
  }

  const LossOutput loss =
      symmetric_contrastive_loss(fa.outputs, emb_b, heads.temperature());
  if (grads_a) {
    *grads_a = backward(heads.head_a, fa.tape, loss.grad_a).grads;
    // Stored parameter is ln(1/tau) = -ln(tau).
    grads_a->log_inv_tau = heads.head_a.learnable_tau ? -loss.grad_log_tau : 0.0;
  }
  if (grads_b && fb) {
    *grads_b = backward(*heads.head_b, fb->tape, loss.grad_b).grads;
  }
  return loss.loss;
}

std::string TrainConfig::to_flags() const {
  std::ostringstream s;
  s << "--epochs " << epochs << " --batch " << batch_size << " --lr "
    << format_double(lr) << " --split " << format_double(train_fraction)
    << " --tau " << format_double(tau);
  if (learnable_tau) s << " --learnable-tau";
  for (std::size_t h : hidden) s << " --hidden " << h;
  if (!hidden.empty()) s << " --activation " << to_string(activation);
  if (two_sided) s << " --two-sided";
  if (out_dim != 0) s << " --out-dim " << out_dim;
  s << " --seed " << seed << " --checkpoint-every " << checkpoint_every;
  return s.str();
}

EmbeddingTable EmbeddingTable::from(const PairDataset& dataset) {
  const auto n = static_cast<Eigen::Index>(dataset.size());
  EmbeddingTable t;
  t.a.resize(n, dataset.dim_a);
  t.b.resize(n, dataset.dim_b);
  for (Eigen::Index i = 0; i < n; ++i) {
    const PairRecord& r = dataset.records[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < t.a.cols(); ++j) t.a(i, j) = r.vec_a[static_cast<std::size_t>(j)];
    for (Eigen::Index j = 0; j < t.b.cols(); ++j) t.b(i, j) = r.vec_b[static_cast<std::size_t>(j)];
  }
  return t;
}

Matrix EmbeddingTable::gather_a(std::span<const std::size_t> rows) const {
  Matrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = a.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

Matrix EmbeddingTable::gather_b(std::span<const std::size_t> rows) const {
  Matrix out(static_cast<Eigen::Index>(rows.size()), b.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = b.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

std::vector<std::vector<std::size_t>> make_batches(
    std::span<const std::size_t> indices, std::size_t batch_size,
    std::uint64_t seed, std::uint64_t epoch) {
  if (batch_size < 2) throw DataError("batch size must be at least 2");
  std::vector<std::size_t> order(indices.begin(), indices.end());
  Rng rng = Rng::keyed(seed, epoch);
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    if (end - start < 2) break;
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

TrainState init_training(const PairDataset& dataset, const TrainConfig& config) {
  if (config.out_dim != 0 && !config.two_sided && config.out_dim != dataset.dim_b) {
    throw DataError("one-sided training maps into modality B; out_dim must equal dim_b");
  }
  const std::size_t out = config.out_dim != 0 ? config.out_dim : dataset.dim_b;
  const AdamHyperparams hyper{.lr = config.lr};

  TrainState state{.heads = {}, .adam_a = {}, .adam_b = std::nullopt};
  const auto dims_a = head_dims(dataset.dim_a, config, out);
  state.heads.head_a = init_head(dims_a, config.activation,
                                 Rng::keyed(config.seed, kHeadAStream).next_u64());
  state.heads.head_a.set_temperature(config.tau);
  state.heads.head_a.learnable_tau = config.learnable_tau;
  state.adam_a = adam_init(state.heads.head_a, hyper);
  if (config.two_sided) {
    const auto dims_b = head_dims(dataset.dim_b, config, out);
    state.heads.head_b = init_head(dims_b, config.activation,
                                   Rng::keyed(config.seed, kHeadBStream).next_u64());
    state.heads.head_b->set_temperature(config.tau);
    state.adam_b = adam_init(*state.heads.head_b, hyper);
  }
  return state;
}

double train_epoch(TrainState& state, const EmbeddingTable& table,
                   const SplitIndices& split, const TrainConfig& config,
                   std::size_t epoch) {
  if (static_cast<std::size_t>(table.a.cols()) != state.heads.head_a.in_dim() ||
      (state.heads.head_b &&
       static_cast<std::size_t>(table.b.cols()) != state.heads.head_b->in_dim())) {
    throw DataError("dataset dims do not match head input dims");
  }
  const auto batches = make_batches(split.train, config.batch_size, config.seed, epoch);
  double weighted = 0.0;
  std::size_t count = 0;
  for (std::size_t bi = 0; bi < batches.size(); ++bi) {
    const auto& batch = batches[bi];
    try {
      HeadGradients ga;
      HeadGradients gb;
      const double loss =
          batch_step(state.heads, table.gather_a(batch), table.gather_b(batch),
                     &ga, state.heads.head_b ? &gb : nullptr);
      adam_step(state.adam_a, state.heads.head_a, ga);
      if (state.heads.head_b) adam_step(*state.adam_b, *state.heads.head_b, gb);
      weighted += loss * static_cast<double>(batch.size());
      count += batch.size();
    } catch (const NumericError& e) {
      throw NumericError("epoch " + std::to_string(epoch) + " batch " +
                         std::to_string(bi) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("epoch " + std::to_string(epoch) + " batch " +
                      std::to_string(bi) + ": " + e.what());
    }
  }
  return count ? weighted / static_cast<double>(count) : 0.0;
}

double evaluate_loss(const Heads& heads, const EmbeddingTable& table,
                     std::span<const std::size_t> indices,
                     std::size_t batch_size) {
  double weighted = 0.0;
  std::size_t count = 0;
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const std::size_t end = std::min(indices.size(), start + batch_size);
    if (end - start < 2) break;
    const auto rows = indices.subspan(start, end - start);
    const double loss =
        batch_step(heads, table.gather_a(rows), table.gather_b(rows), nullptr, nullptr);
    weighted += loss * static_cast<double>(rows.size());
    count += rows.size();
  }
  return count ? weighted / static_cast<double>(count) : 0.0;
}

Matrix project_a(const Heads& heads, const Matrix& a) { return apply(heads.head_a, a); }

Matrix project_b(const Heads& heads, const Matrix& b) {
  return heads.head_b ? apply(*heads.head_b, b) : b;
}

FitResult fit(const PairDataset& dataset, const TrainConfig& config,
              const FitOptions& options) {
  if (config.batch_size < 2) throw DataError("batch size must be at least 2");
  const SplitIndices split = split_dataset(dataset, config.train_fraction, config.seed);
  if (split.train.size() < 2 || split.val.size() < 2) {
    throw DataError("split leaves fewer than 2 records on one side");
  }
  const EmbeddingTable table = EmbeddingTable::from(dataset);
  TrainState state = init_training(dataset, config);

  FitResult result;
  TrainReport& report = result.report;
  report.config = config;
  report.n_train = split.train.size();
  report.n_val = split.val.size();
  report.layer_dims_a = dims_of(state.heads.head_a);
  if (state.heads.head_b) report.layer_dims_b = dims_of(*state.heads.head_b);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = train_epoch(state, table, split, config, epoch);
    stats.val_loss = evaluate_loss(state.heads, table, split.val, config.batch_size);
    if (!std::isfinite(stats.train_loss) || !std::isfinite(stats.val_loss)) {
      throw NumericError("epoch " + std::to_string(epoch) + ": non-finite loss");
    }
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.epochs.push_back(stats);

    if (options.checkpoint_prefix && config.checkpoint_every > 0 &&
        epoch % config.checkpoint_every == 0) {
      const std::string suffix = ".epoch" + std::to_string(epoch);
      save_head(state.heads.head_a, options.checkpoint_prefix->string() + suffix);
      if (state.heads.head_b) {
        save_head(*state.heads.head_b, options.checkpoint_prefix->string() + ".b" + suffix);
      }
    }
    if (options.on_epoch) options.on_epoch(stats);
  }

  report.final_checksum_a = head_checksum(state.heads.head_a);
  if (state.heads.head_b) report.final_checksum_b = head_checksum(*state.heads.head_b);
  result.heads = std::move(state.heads);
  return result;
}

void write_report(const TrainReport& report, std::ostream& out) {
  const TrainConfig& c = report.config;
  out << "# coembed train report\n";
  out << "epochs=" << c.epochs << '\n';
  out << "batch=" << c.batch_size << '\n';
  out << "lr=" << format_double(c.lr) << '\n';
  out << "split=" << format_double(c.train_fraction) << '\n';
  out << "tau=" << format_double(c.tau) << '\n';
  out << "learnable_tau=" << format_bool(c.learnable_tau) << '\n';
  out << "two_sided=" << format_bool(c.two_sided) << '\n';
  out << "seed=" << c.seed << '\n';
  out << "checkpoint_every=" << c.checkpoint_every << '\n';
  out << "layer_dims_a=" << join(report.layer_dims_a) << '\n';
  if (!report.layer_dims_b.empty()) out << "layer_dims_b=" << join(report.layer_dims_b) << '\n';
  out << "activation=" << to_string(c.activation) << '\n';
  out << "n_train=" << report.n_train << '\n';
  out << "n_val=" << report.n_val << '\n';
  out << "completed_epochs=" << report.epochs.size() << '\n';
  out << "final_head_checksum=" << hex64(report.final_checksum_a) << '\n';
  if (report.final_checksum_b) {
    out << "final_head_b_checksum=" << hex64(*report.final_checksum_b) << '\n';
  }
  out << "config_flags=" << c.to_flags() << '\n';
  out << "[per_epoch]\n";
  out << "epoch,train_loss,val_loss,seconds\n";
  for (const EpochStats& e : report.epochs) {
    out << e.epoch << ',' << format_double(e.train_loss) << ','
        << format_double(e.val_loss) << ',' << format_double(e.seconds) << '\n';
  }
}

}  // namespace coembed
