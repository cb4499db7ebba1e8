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

#include <charconv>
#include <cmath>
#include <string>

namespace coembed {

// Shortest decimal form that round-trips to the same double, in fixed
// notation for everyday magnitudes and scientific outside that range.
inline std::string format_double(double x) {
  char buf[64];
  const double mag = std::abs(x);
  const bool fixed = mag == 0.0 || (mag >= 1e-5 && mag < 1e15);
  const auto res = std::to_chars(buf, buf + sizeof(buf), x,
                                 fixed ? std::chars_format::fixed
                                       : std::chars_format::scientific);
  return std::string(buf, res.ptr);
}

inline const char* format_bool(bool b) { return b ? "true" : "false"; }

}  // namespace coembed
