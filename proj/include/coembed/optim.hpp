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

#include <cstdint>

#include "coembed/projhead.hpp"

namespace coembed {

struct AdamHyperparams {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Moment buffers mirror the head's parameter shapes. The temperature moments
// are tracked even when the head's temperature is frozen; they stay zero.
struct AdamState {
  HeadGradients m;
  HeadGradients v;
  std::uint64_t t = 0;
  AdamHyperparams hyper;
};

AdamState adam_init(const ProjectionHead& head, const AdamHyperparams& hyper = {});

// Bias-corrected Adam update, in place. A non-finite gradient component
// throws NumericError before anything is modified.
void adam_step(AdamState& state, ProjectionHead& head, const HeadGradients& grads);

}  // namespace coembed
