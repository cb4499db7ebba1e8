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

#include <stdexcept>
#include <string>

namespace coembed {

// Root of the library's exception hierarchy. The CLI maps the two direct
// subclasses onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data: bad files, shape mismatches, invariant violations.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values arising during computation (loss, gradients).
class NumericError : public Error {
 public:
  using Error::Error;
};

enum class FormatErrc {
  kIo,
  kBadMagic,
  kUnsupportedVersion,
  kTruncated,
  kTrailingBytes,
  kNonFinite,
  kDuplicateId,
  kDimMismatch,
  kInvalidLayout,
};

const char* to_string(FormatErrc code);

// Raised by the EMBD/PRJW readers and writers.
class FormatError : public DataError {
 public:
  FormatError(FormatErrc code, const std::string& what)
      : DataError(std::string(to_string(code)) + ": " + what), code_(code) {}

  FormatErrc code() const noexcept { return code_; }

 private:
  FormatErrc code_;
};

}  // namespace coembed
