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

#include "coembed/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coembed/errors.hpp"

namespace coembed {

namespace {

bool same_shapes(const HeadGradients& g, const ProjectionHead& head) {
  if (g.weights.size() != head.layers.size() || g.bias.size() != head.layers.size()) {
    return false;
  }
  for (std::size_t k = 0; k < head.layers.size(); ++k) {
    const auto& l = head.layers[k];
    if (g.weights[k].rows() != l.weights.rows() ||
        g.weights[k].cols() != l.weights.cols() ||
        g.bias[k].size() != l.bias.size()) {
      return false;
    }
  }
  return true;
}

template <typename Param>
void update(Param& theta, Param& m, Param& v, const Param& g,
            const AdamHyperparams& h, double corr1, double corr2) {
  m.array() = h.beta1 * m.array() + (1.0 - h.beta1) * g.array();
  v.array() = h.beta2 * v.array() + (1.0 - h.beta2) * g.array().square();
  theta.array() -= h.lr * (m.array() / corr1) /
                   ((v.array() / corr2).sqrt() + h.eps);
}

}  // namespace

AdamState adam_init(const ProjectionHead& head, const AdamHyperparams& hyper) {
  auto in_open_unit = [](double x) { return x > 0.0 && x < 1.0; };
  if (!(hyper.lr > 0.0) || !(hyper.eps > 0.0) || !in_open_unit(hyper.beta1) ||
      !in_open_unit(hyper.beta2)) {
    throw DataError("adam: lr, eps must be positive and betas in (0, 1)");
  }
  AdamState s;
  s.m = HeadGradients::zeros_like(head);
  s.v = HeadGradients::zeros_like(head);
  s.hyper = hyper;
  return s;
}

void adam_step(AdamState& state, ProjectionHead& head, const HeadGradients& grads) {
  if (!same_shapes(grads, head) || !same_shapes(state.m, head)) {
    throw DataError("adam: gradient shapes do not mirror the head");
  }
  if (!grads.all_finite()) {
    throw NumericError("adam: non-finite gradient, step refused");
  }

  // Work on copies so a step that would overflow leaves everything intact.
  AdamState next_state = state;
  ProjectionHead next = head;
  next_state.t += 1;
  const AdamHyperparams& h = next_state.hyper;
  const double t = static_cast<double>(next_state.t);
  const double corr1 = 1.0 - std::pow(h.beta1, t);
  const double corr2 = 1.0 - std::pow(h.beta2, t);

  for (std::size_t k = 0; k < next.layers.size(); ++k) {
    update(next.layers[k].weights, next_state.m.weights[k], next_state.v.weights[k],
           grads.weights[k], h, corr1, corr2);
    update(next.layers[k].bias, next_state.m.bias[k], next_state.v.bias[k],
           grads.bias[k], h, corr1, corr2);
  }

  if (next.learnable_tau) {
    double& m = next_state.m.log_inv_tau;
    double& v = next_state.v.log_inv_tau;
    const double g = grads.log_inv_tau;
    m = h.beta1 * m + (1.0 - h.beta1) * g;
    v = h.beta2 * v + (1.0 - h.beta2) * g * g;
    next.log_inv_tau -= h.lr * (m / corr1) / (std::sqrt(v / corr2) + h.eps);
    next.log_inv_tau = std::min(next.log_inv_tau, std::log(kMaxLogitScale));
  }

  for (const auto& l : next.layers) {
    if (!l.weights.allFinite() || !l.bias.allFinite()) {
      throw NumericError("adam: update overflows a parameter, step refused");
    }
  }
  if (!std::isfinite(next.log_inv_tau)) {
    throw NumericError("adam: update overflows the temperature, step refused");
  }
  state = std::move(next_state);
  head = std::move(next);
}

}  // namespace coembed
