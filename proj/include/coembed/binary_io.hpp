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

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "coembed/errors.hpp"

namespace coembed::io {

// Little-endian primitive writer over an ostream. Tracks bytes written and
// turns stream failure into FormatError(kIo).
class LeWriter {
 public:
  explicit LeWriter(std::ostream& out) : out_(out) {}

  void bytes(std::string_view raw) {
    out_.write(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!out_) throw FormatError(FormatErrc::kIo, "write to sink failed");
    count_ += raw.size();
  }

  template <typename U>
  void uint(U value) {
    std::array<char, sizeof(U)> buf{};
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      buf[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
    }
    bytes({buf.data(), buf.size()});
  }

  void u8(std::uint8_t v) { uint(v); }
  void u16(std::uint16_t v) { uint(v); }
  void u32(std::uint32_t v) { uint(v); }
  void u64(std::uint64_t v) { uint(v); }
  void i32(std::int32_t v) { uint(std::bit_cast<std::uint32_t>(v)); }
  void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }

  std::size_t count() const { return count_; }

 private:
  std::ostream& out_;
  std::size_t count_ = 0;
};

// Little-endian primitive reader. Any short read raises kTruncated with the
// caller-supplied context so errors can name the record being decoded.
class LeReader {
 public:
  explicit LeReader(std::istream& in) : in_(in) {}

  void set_context(std::string context) { context_ = std::move(context); }

  void bytes(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError(FormatErrc::kTruncated,
                        "stream ended inside " + context_);
    }
  }

  template <typename U>
  U uint() {
    std::array<unsigned char, sizeof(U)> buf{};
    bytes(reinterpret_cast<char*>(buf.data()), buf.size());
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      value |= static_cast<U>(static_cast<U>(buf[i]) << (8 * i));
    }
    return value;
  }

  std::uint8_t u8() { return uint<std::uint8_t>(); }
  std::uint16_t u16() { return uint<std::uint16_t>(); }
  std::uint32_t u32() { return uint<std::uint32_t>(); }
  std::uint64_t u64() { return uint<std::uint64_t>(); }
  std::int32_t i32() { return std::bit_cast<std::int32_t>(u32()); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  // True when no bytes remain.
  bool at_end() {
    return in_.peek() == std::char_traits<char>::eof();
  }

 private:
  std::istream& in_;
  std::string context_ = "header";
};

}  // namespace coembed::io
