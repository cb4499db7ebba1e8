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

#include "coembed/embedstore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <unordered_set>

#include "coembed/binary_io.hpp"
#include "coembed/errors.hpp"
#include "coembed/rng.hpp"

namespace coembed {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', 'D'};
constexpr std::uint16_t kFlagLabeled = 0x1;

bool all_finite(const std::vector<float>& v) {
  for (float x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

const char* to_string(FormatErrc code) {
  switch (code) {
    case FormatErrc::kIo: return "io error";
    case FormatErrc::kBadMagic: return "bad magic";
    case FormatErrc::kUnsupportedVersion: return "unsupported version";
    case FormatErrc::kTruncated: return "truncated";
    case FormatErrc::kTrailingBytes: return "trailing bytes";
    case FormatErrc::kNonFinite: return "non-finite value";
    case FormatErrc::kDuplicateId: return "duplicate pair_id";
    case FormatErrc::kDimMismatch: return "dimension mismatch";
    case FormatErrc::kInvalidLayout: return "invalid layout";
  }
  return "format error";
}

void PairDataset::validate() const {
  if (dim_a == 0 || dim_b == 0) {
    throw FormatError(FormatErrc::kDimMismatch, "dimensions must be positive");
  }
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const PairRecord& r = records[i];
    const std::string where = "record " + std::to_string(i);
    if (r.vec_a.size() != dim_a || r.vec_b.size() != dim_b) {
      throw FormatError(FormatErrc::kDimMismatch,
                        where + " vector lengths do not match dataset dims");
    }
    if (!all_finite(r.vec_a) || !all_finite(r.vec_b)) {
      throw FormatError(FormatErrc::kNonFinite, where);
    }
    if (!seen.insert(r.pair_id).second) {
      throw FormatError(FormatErrc::kDuplicateId,
                        where + " repeats pair_id " + std::to_string(r.pair_id));
    }
  }
}

std::size_t write_dataset(const PairDataset& dataset, std::ostream& sink) {
  dataset.validate();
  io::LeWriter w(sink);
  w.bytes({kMagic, 4});
  w.u16(kEmbdVersion);
  w.u16(dataset.labeled ? kFlagLabeled : 0);
  w.u32(dataset.dim_a);
  w.u32(dataset.dim_b);
  w.u64(dataset.records.size());
  for (const PairRecord& r : dataset.records) {
    w.u64(r.pair_id);
    w.i32(r.label);
    for (float x : r.vec_a) w.f32(x);
    for (float x : r.vec_b) w.f32(x);
  }
  return w.count();
}

PairDataset read_dataset(std::istream& source) {
  io::LeReader r(source);
  char magic[4];
  r.bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) {
    throw FormatError(FormatErrc::kBadMagic, "expected \"EMBD\"");
  }
  const std::uint16_t version = r.u16();
  if (version != kEmbdVersion) {
    throw FormatError(FormatErrc::kUnsupportedVersion,
                      "EMBD version " + std::to_string(version));
  }
  const std::uint16_t flags = r.u16();

  PairDataset ds;
  ds.labeled = (flags & kFlagLabeled) != 0;
  ds.dim_a = r.u32();
  ds.dim_b = r.u32();
  if (ds.dim_a == 0 || ds.dim_b == 0) {
    throw FormatError(FormatErrc::kDimMismatch, "zero dimension in header");
  }
  const std::uint64_t count = r.u64();

  // Reserve conservatively; a corrupt count must not trigger a huge
  // allocation before truncation is detected.
  ds.records.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1 << 16)));
  for (std::uint64_t i = 0; i < count; ++i) {
    r.set_context("record " + std::to_string(i));
    PairRecord rec;
    rec.pair_id = r.u64();
    rec.label = r.i32();
    rec.vec_a.resize(ds.dim_a);
    rec.vec_b.resize(ds.dim_b);
    for (float& x : rec.vec_a) x = r.f32();
    for (float& x : rec.vec_b) x = r.f32();
    ds.records.push_back(std::move(rec));
  }
  if (!r.at_end()) {
    throw FormatError(FormatErrc::kTrailingBytes,
                      "data follows the declared " + std::to_string(count) +
                          " records");
  }
  ds.validate();
  return ds;
}

std::size_t save_dataset(const PairDataset& dataset,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw FormatError(FormatErrc::kIo, "cannot open " + path.string());
  }
  const std::size_t n = write_dataset(dataset, out);
  out.flush();
  if (!out) throw FormatError(FormatErrc::kIo, "flush failed: " + path.string());
  return n;
}

PairDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError(FormatErrc::kIo, "cannot open " + path.string());
  }
  return read_dataset(in);
}

SplitIndices split_indices(std::size_t n, double train_fraction,
                           std::uint64_t seed) {
  if (n < 2) {
    throw DataError("split requires at least 2 records, got " +
                    std::to_string(n));
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw DataError("train fraction must lie in (0, 1)");
  }
  // std::round is half-away-from-zero.
  auto train_count = static_cast<std::size_t>(
      std::round(train_fraction * static_cast<double>(n)));
  train_count = std::clamp<std::size_t>(train_count, 1, n - 1);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  SplitIndices split;
  split.seed = seed;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_count));
  split.val.assign(order.begin() + static_cast<std::ptrdiff_t>(train_count), order.end());
  return split;
}

SplitIndices split_dataset(const PairDataset& dataset, double train_fraction,
                           std::uint64_t seed) {
  return split_indices(dataset.size(), train_fraction, seed);
}

}  // namespace coembed
