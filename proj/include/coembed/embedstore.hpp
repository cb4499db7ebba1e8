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
#include <vector>

namespace coembed {

// One cached pair of frozen-encoder outputs.
struct PairRecord {
  std::uint64_t pair_id = 0;
  std::int32_t label = -1;  // -1 = unlabeled
  std::vector<float> vec_a;
  std::vector<float> vec_b;

  bool operator==(const PairRecord&) const = default;
};

struct PairDataset {
  std::uint32_t dim_a = 0;
  std::uint32_t dim_b = 0;
  bool labeled = false;
  std::vector<PairRecord> records;

  std::size_t size() const { return records.size(); }

  // Throws FormatError on dim mismatch, non-finite components or duplicate
  // pair ids. Does not require records to be non-empty.
  void validate() const;

  bool operator==(const PairDataset&) const = default;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::uint64_t seed = 0;

  bool operator==(const SplitIndices&) const = default;
};

inline constexpr std::uint16_t kEmbdVersion = 1;
inline constexpr std::size_t kEmbdHeaderBytes = 24;

// Serializes in the EMBD layout. Returns bytes written.
std::size_t write_dataset(const PairDataset& dataset, std::ostream& sink);

// Parses and validates an EMBD stream. Trailing bytes after the declared
// record count are rejected.
PairDataset read_dataset(std::istream& source);

std::size_t save_dataset(const PairDataset& dataset,
                         const std::filesystem::path& path);
PairDataset load_dataset(const std::filesystem::path& path);

// Seeded shuffle of 0..n-1 split into train/val with
// |train| = clamp(round(train_fraction * n), 1, n - 1).
SplitIndices split_dataset(const PairDataset& dataset, double train_fraction,
                           std::uint64_t seed);

// Same split computed from the record count alone.
SplitIndices split_indices(std::size_t n, double train_fraction,
                           std::uint64_t seed);

}  // namespace coembed
