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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <vector>

#include "coembed/errors.hpp"
#include "coembed/rng.hpp"
#include "coembed/synthgen.hpp"
#include "coembed/trainer.hpp"
#include "temp_dir.hpp"

using namespace coembed;
using coembed::testing::TempDir;
using coembed::testing::read_file;

namespace {

std::vector<std::size_t> iota_n(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

std::vector<std::size_t> sizes(const std::vector<std::vector<std::size_t>>& batches) {
  std::vector<std::size_t> s;
  for (const auto& b : batches) s.push_back(b.size());
  return s;
}

PairDataset small_synth(std::size_t n = 200, std::uint64_t seed = 3) {
  SynthConfig c;
  c.latent_dim = 6;
  c.dim_a = 8;
  c.dim_b = 10;
  c.n_classes = 4;
  c.n_pairs = n;
  c.seed = seed;
  return generate(c).dataset;
}

TrainConfig quick_config() {
  TrainConfig c;
  c.epochs = 5;
  c.batch_size = 32;
  c.lr = 1e-3;
  c.seed = 11;
  return c;
}

std::string head_bytes(const ProjectionHead& h) {
  std::ostringstream s(std::ios::binary);
  save_head(h, s);
  return s.str();
}

}  // namespace

TEST_CASE("make_batches partitions with the trailing-batch rule") {
  const auto ten = iota_n(10);
  CHECK(sizes(make_batches(ten, 4, 0, 1)) == std::vector<std::size_t>{4, 4, 2});
  const auto nine = iota_n(9);
  CHECK(sizes(make_batches(nine, 4, 0, 1)) == std::vector<std::size_t>{4, 4});

  // Oversized batch: the whole set is one batch.
  CHECK(sizes(make_batches(ten, 4096, 0, 1)) == std::vector<std::size_t>{10});

  CHECK_THROWS_AS(make_batches(ten, 1, 0, 1), DataError);
  CHECK_THROWS_AS(make_batches(ten, 0, 0, 1), DataError);
}

TEST_CASE("make_batches is a deterministic, epoch-keyed permutation") {
  const auto idx = iota_n(100);
  const auto first = make_batches(idx, 7, 5, 3);
  CHECK(first == make_batches(idx, 7, 5, 3));
  CHECK(first != make_batches(idx, 7, 5, 4));
  CHECK(first != make_batches(idx, 7, 6, 3));

  // 100 = 14*7 + 2: nothing dropped, every index exactly once.
  std::vector<std::size_t> flat;
  for (const auto& b : first) flat.insert(flat.end(), b.begin(), b.end());
  std::sort(flat.begin(), flat.end());
  CHECK(flat == idx);

  // Works on arbitrary index sets, not just 0..n-1.
  const std::vector<std::size_t> sparse{40, 7, 19, 3, 88};
  std::set<std::size_t> seen;
  for (const auto& b : make_batches(sparse, 2, 1, 1)) seen.insert(b.begin(), b.end());
  CHECK(seen.size() == 4);  // one singleton dropped
  for (std::size_t i : seen) CHECK(std::count(sparse.begin(), sparse.end(), i) == 1);
}

TEST_CASE("aligned data with an identity head starts below chance") {
  const std::size_t n = 64;
  const std::size_t d = 6;
  Rng rng(4);
  PairDataset ds;
  ds.dim_a = ds.dim_b = d;
  for (std::size_t i = 0; i < n; ++i) {
    PairRecord r;
    r.pair_id = i;
    for (std::size_t j = 0; j < d; ++j) r.vec_a.push_back(static_cast<float>(rng.normal()));
    r.vec_b = r.vec_a;
    ds.records.push_back(std::move(r));
  }
  TrainConfig config;
  config.batch_size = 16;
  config.lr = 1e-4;
  TrainState state = init_training(ds, config);
  state.heads.head_a.layers[0].weights = Matrix::Identity(d, d);

  const EmbeddingTable table = EmbeddingTable::from(ds);
  const SplitIndices split = split_dataset(ds, 0.5, 0);
  const double loss = train_epoch(state, table, split, config, 1);
  CHECK(loss < std::log(16.0));
  CHECK(loss >= 0.0);
}

TEST_CASE("zero learning rate leaves the head untouched") {
  const PairDataset ds = small_synth();
  TrainConfig config = quick_config();
  config.learnable_tau = true;
  config.hidden = {12};
  config.two_sided = true;
  config.out_dim = 5;
  TrainState state = init_training(ds, config);
  state.adam_a.hyper.lr = 0.0;
  state.adam_b->hyper.lr = 0.0;
  const std::string before_a = head_bytes(state.heads.head_a);
  const std::string before_b = head_bytes(*state.heads.head_b);

  const EmbeddingTable table = EmbeddingTable::from(ds);
  const SplitIndices split = split_dataset(ds, config.train_fraction, config.seed);
  train_epoch(state, table, split, config, 1);
  CHECK(head_bytes(state.heads.head_a) == before_a);
  CHECK(head_bytes(*state.heads.head_b) == before_b);
  CHECK(state.adam_a.t > 0);
}

TEST_CASE("train loss decreases over 50 epochs on a linear instance") {
  const PairDataset ds = small_synth(400);
  TrainConfig config = quick_config();
  config.epochs = 50;
  config.batch_size = 64;
  const FitResult r = fit(ds, config);
  REQUIRE(r.report.epochs.size() == 50);
  CHECK(r.report.epochs.back().train_loss < r.report.epochs.front().train_loss);
  CHECK(r.report.epochs.back().val_loss < r.report.epochs.front().val_loss);
}

TEST_CASE("default config echoes the reference regime") {
  const TrainConfig c;
  CHECK(c.epochs == 300);
  CHECK(c.batch_size == 4096);
  CHECK(c.lr == 1e-4);
  CHECK(c.train_fraction == 0.67);
  CHECK(c.tau == 0.07);
  CHECK_FALSE(c.learnable_tau);
  CHECK_FALSE(c.two_sided);
  CHECK(c.hidden.empty());
  CHECK(c.to_flags() ==
        "--epochs 300 --batch 4096 --lr 0.0001 --split 0.67 --tau 0.07 --seed 0 "
        "--checkpoint-every 0");
}

TEST_CASE("epochs = 0 returns the initialized head") {
  const PairDataset ds = small_synth();
  TrainConfig config = quick_config();
  config.epochs = 0;
  const FitResult r = fit(ds, config);
  CHECK(r.report.epochs.empty());
  const TrainState init = init_training(ds, config);
  CHECK(head_bytes(r.heads.head_a) == head_bytes(init.heads.head_a));
  CHECK(r.report.final_checksum_a == head_checksum(init.heads.head_a));
  CHECK(r.heads.temperature() == doctest::Approx(0.07).epsilon(1e-15));
}

TEST_CASE("fit is bitwise deterministic and seed-sensitive") {
  const PairDataset ds = small_synth();
  TrainConfig config = quick_config();
  config.hidden = {9};
  config.learnable_tau = true;
  const FitResult r1 = fit(ds, config);
  const FitResult r2 = fit(ds, config);
  CHECK(head_bytes(r1.heads.head_a) == head_bytes(r2.heads.head_a));
  for (std::size_t e = 0; e < r1.report.epochs.size(); ++e) {
    CHECK(r1.report.epochs[e].train_loss == r2.report.epochs[e].train_loss);
    CHECK(r1.report.epochs[e].val_loss == r2.report.epochs[e].val_loss);
  }
  config.seed = 12;
  CHECK(head_bytes(fit(ds, config).heads.head_a) != head_bytes(r1.heads.head_a));
}

TEST_CASE("dataset vectors are never written") {
  const PairDataset ds = small_synth();
  const PairDataset copy = ds;
  TrainConfig config = quick_config();
  config.two_sided = true;
  config.out_dim = 4;
  fit(ds, config);
  CHECK(ds == copy);
}

TEST_CASE("validation loss computation performs no update") {
  const PairDataset ds = small_synth();
  TrainConfig config = quick_config();
  config.two_sided = true;
  config.out_dim = 4;
  const TrainState state = init_training(ds, config);
  const auto before_a = head_checksum(state.heads.head_a);
  const auto before_b = head_checksum(*state.heads.head_b);
  const EmbeddingTable table = EmbeddingTable::from(ds);
  const auto val = split_dataset(ds, 0.67, 0).val;
  const double l1 = evaluate_loss(state.heads, table, val, 16);
  const double l2 = evaluate_loss(state.heads, table, val, 16);
  CHECK(l1 == l2);
  CHECK(std::isfinite(l1));
  CHECK(head_checksum(state.heads.head_a) == before_a);
  CHECK(head_checksum(*state.heads.head_b) == before_b);
}

TEST_CASE("report has one finite non-negative entry per epoch") {
  const PairDataset ds = small_synth();
  TrainConfig config = quick_config();
  std::vector<std::size_t> seen;
  FitOptions opts;
  opts.on_epoch = [&](const EpochStats& s) { seen.push_back(s.epoch); };
  const FitResult r = fit(ds, config, opts);
  REQUIRE(r.report.epochs.size() == config.epochs);
  CHECK(seen == std::vector<std::size_t>{1, 2, 3, 4, 5});
  for (const EpochStats& e : r.report.epochs) {
    CHECK(std::isfinite(e.train_loss));
    CHECK(e.train_loss >= 0.0);
    CHECK(std::isfinite(e.val_loss));
    CHECK(e.val_loss >= 0.0);
    CHECK(e.seconds >= 0.0);
  }
  CHECK(r.report.n_train == 134);
  CHECK(r.report.n_val == 66);
  CHECK(r.report.layer_dims_a == std::vector<std::uint32_t>{8, 10});
  CHECK(r.report.final_checksum_a == head_checksum(r.heads.head_a));

  std::ostringstream out;
  write_report(r.report, out);
  const std::string text = out.str();
  for (const char* key :
       {"epochs=5\n", "batch=32\n", "lr=0.001\n", "split=0.67\n", "tau=0.07\n",
        "learnable_tau=false\n", "seed=11\n", "layer_dims_a=8,10\n", "n_train=134\n",
        "n_val=66\n", "completed_epochs=5\n", "final_head_checksum=",
        "config_flags=--epochs 5 --batch 32 --lr 0.001", "[per_epoch]\n",
        "epoch,train_loss,val_loss,seconds\n"}) {
    CHECK_MESSAGE(text.find(key) != std::string::npos, key);
  }
  // header + 5 rows after the marker
  const auto tail = text.substr(text.find("[per_epoch]\n"));
  CHECK(std::count(tail.begin(), tail.end(), '\n') == 7);
}

TEST_CASE("checkpoints are written every N epochs") {
  const PairDataset ds = small_synth();
  TrainConfig config = quick_config();
  config.checkpoint_every = 2;
  config.two_sided = true;
  config.out_dim = 6;
  TempDir dir;
  FitOptions opts;
  opts.checkpoint_prefix = dir.path() / "ck";
  const FitResult r = fit(ds, config, opts);
  for (int e : {2, 4}) {
    CHECK(std::filesystem::exists(dir / ("ck.epoch" + std::to_string(e))));
    CHECK(std::filesystem::exists(dir / ("ck.b.epoch" + std::to_string(e))));
  }
  CHECK_FALSE(std::filesystem::exists(dir / "ck.epoch1"));
  CHECK_FALSE(std::filesystem::exists(dir / "ck.epoch5"));
  const ProjectionHead ck4 = load_head(dir.path() / "ck.epoch4");
  CHECK(ck4.out_dim() == 6);
  CHECK(head_checksum(ck4) != r.report.final_checksum_a);
}

TEST_CASE("two-sided and hidden-layer variants") {
  const PairDataset ds = small_synth();
  TrainConfig config = quick_config();
  config.two_sided = true;
  config.hidden = {16, 12};
  config.out_dim = 7;
  const FitResult r = fit(ds, config);
  REQUIRE(r.heads.head_b);
  CHECK(r.report.layer_dims_a == std::vector<std::uint32_t>{8, 16, 12, 7});
  CHECK(r.report.layer_dims_b == std::vector<std::uint32_t>{10, 16, 12, 7});
  CHECK(r.heads.head_a.layers[0].activation == Activation::kRelu);
  CHECK(r.heads.head_a.layers.back().activation == Activation::kIdentity);
  CHECK(r.report.final_checksum_b == head_checksum(*r.heads.head_b));
  const Matrix pa = project_a(r.heads, EmbeddingTable::from(ds).a);
  const Matrix pb = project_b(r.heads, EmbeddingTable::from(ds).b);
  CHECK(pa.cols() == 7);
  CHECK(pb.cols() == 7);
}

TEST_CASE("learnable temperature moves, fixed does not") {
  const PairDataset ds = small_synth();
  TrainConfig config = quick_config();
  config.lr = 1e-2;
  CHECK(fit(ds, config).heads.temperature() == doctest::Approx(0.07).epsilon(1e-15));
  config.learnable_tau = true;
  const double tau = fit(ds, config).heads.temperature();
  CHECK(tau != doctest::Approx(0.07).epsilon(1e-6));
  CHECK(1.0 / tau <= 100.0 * (1 + 1e-12));
}

TEST_CASE("fit rejects bad configurations with data errors") {
  const PairDataset ds = small_synth();
  TrainConfig config = quick_config();
  config.out_dim = 3;  // one-sided must map into dim_b
  CHECK_THROWS_AS(fit(ds, config), DataError);

  config = quick_config();
  config.batch_size = 1;
  CHECK_THROWS_AS(fit(ds, config), DataError);

  config = quick_config();
  config.train_fraction = 1.0;
  CHECK_THROWS_AS(fit(ds, config), DataError);

  config = quick_config();
  config.tau = 0.001;
  CHECK_THROWS_AS(fit(ds, config), DataError);

  config = quick_config();
  CHECK_THROWS_AS(fit(small_synth(3), config), DataError);  // val side < 2

  PairDataset empty;
  empty.dim_a = empty.dim_b = 2;
  CHECK_THROWS_AS(fit(empty, config), DataError);
}

TEST_CASE("epoch errors carry epoch and batch context") {
  const PairDataset ds = small_synth();
  TrainConfig config = quick_config();
  TrainState state = init_training(ds, config);
  // A corrupted weight poisons the first batch.
  state.heads.head_a.layers[0].weights(0, 0) = std::nan("");
  const EmbeddingTable table = EmbeddingTable::from(ds);
  const SplitIndices split = split_dataset(ds, 0.67, 0);
  try {
    train_epoch(state, table, split, config, 7);
    FAIL("expected an error");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).rfind("epoch 7 batch 0: ", 0) == 0);
  }
}

TEST_CASE("loss progress on the default synthetic instance") {
  // 100 epochs of batch 256 at lr 1e-3; the reference lr of 1e-4 with batch
  // 4096 takes far more than 300 epochs to halve the loss.
  const PairDataset ds = generate(SynthConfig{}).dataset;
  TrainConfig config;
  config.epochs = 100;
  config.batch_size = 256;
  config.lr = 1e-3;
  const FitResult r = fit(ds, config);
  const double first = r.report.epochs.front().train_loss;
  const double last = r.report.epochs.back().train_loss;
  MESSAGE("train loss " << first << " -> " << last);
  CHECK(last < 0.5 * first);
}
