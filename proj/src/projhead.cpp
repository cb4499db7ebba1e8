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

#include "coembed/projhead.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "coembed/binary_io.hpp"
#include "coembed/errors.hpp"
#include "coembed/rng.hpp"

namespace coembed {

namespace {

constexpr char kMagic[4] = {'P', 'R', 'J', 'W'};
constexpr std::uint16_t kFlagLearnableTau = 0x1;

void check_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw DataError(std::string("non-finite ") + what);
}

}  // namespace

std::string_view to_string(Activation act) {
  return act == Activation::kRelu ? "relu" : "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  throw DataError("unknown activation '" + std::string(name) + "'");
}

double ProjectionHead::temperature() const { return std::exp(-log_inv_tau); }

void ProjectionHead::set_temperature(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau) || 1.0 / tau > kMaxLogitScale) {
    throw DataError("temperature must satisfy 1/tau in (0, 100], got tau=" +
                    std::to_string(tau));
  }
  log_inv_tau = std::log(1.0 / tau);
}

std::size_t ProjectionHead::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n + (learnable_tau ? 1 : 0);
}

void ProjectionHead::validate() const {
  if (layers.empty()) throw DataError("projection head has no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const AffineLayer& l = layers[k];
    if (l.in_dim() == 0 || l.out_dim() == 0) {
      throw DataError("layer " + std::to_string(k) + " has a zero dimension");
    }
    if (static_cast<std::size_t>(l.bias.size()) != l.out_dim()) {
      throw DataError("layer " + std::to_string(k) + " bias length mismatch");
    }
    if (k + 1 < layers.size() && l.out_dim() != layers[k + 1].in_dim()) {
      throw DataError("layer " + std::to_string(k) + " out_dim " +
                      std::to_string(l.out_dim()) + " does not match layer " +
                      std::to_string(k + 1) + " in_dim " +
                      std::to_string(layers[k + 1].in_dim()));
    }
    check_finite(l.weights, "weights");
    check_finite(l.bias, "bias");
  }
  if (layers.back().activation != Activation::kIdentity) {
    throw DataError("final layer activation must be identity");
  }
  if (!std::isfinite(log_inv_tau) || std::exp(log_inv_tau) > kMaxLogitScale * (1 + 1e-12)) {
    throw DataError("logit scale exp(log_inv_tau) outside (0, 100]");
  }
}

HeadGradients HeadGradients::zeros_like(const ProjectionHead& head) {
  HeadGradients g;
  for (const auto& l : head.layers) {
    g.weights.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    g.bias.push_back(Vector::Zero(l.bias.size()));
  }
  return g;
}

bool HeadGradients::all_finite() const {
  for (const auto& w : weights) if (!w.allFinite()) return false;
  for (const auto& b : bias) if (!b.allFinite()) return false;
  return std::isfinite(log_inv_tau);
}

ProjectionHead init_head(std::span<const std::size_t> layer_dims,
                         Activation hidden_activation, std::uint64_t seed) {
  if (layer_dims.size() < 2) {
    throw DataError("a projection head needs at least two layer dims");
  }
  for (std::size_t d : layer_dims) {
    if (d == 0) throw DataError("layer dims must be positive");
  }
  Rng rng(seed);
  ProjectionHead head;
  for (std::size_t k = 0; k + 1 < layer_dims.size(); ++k) {
    const auto in = static_cast<Eigen::Index>(layer_dims[k]);
    const auto out = static_cast<Eigen::Index>(layer_dims[k + 1]);
    const double s = std::sqrt(6.0 / static_cast<double>(in + out));
    AffineLayer layer;
    layer.weights.resize(out, in);
    for (Eigen::Index i = 0; i < out; ++i) {
      for (Eigen::Index j = 0; j < in; ++j) layer.weights(i, j) = rng.uniform(-s, s);
    }
    layer.bias = Vector::Zero(out);
    const bool last = k + 2 == layer_dims.size();
    layer.activation = last ? Activation::kIdentity : hidden_activation;
    head.layers.push_back(std::move(layer));
  }
  head.set_temperature(kDefaultTemperature);
  return head;
}

ForwardResult forward(const ProjectionHead& head, const Matrix& inputs) {
  if (static_cast<std::size_t>(inputs.cols()) != head.in_dim()) {
    throw DataError("forward: input has " + std::to_string(inputs.cols()) +
                    " columns, head expects " + std::to_string(head.in_dim()));
  }
  if (!inputs.allFinite()) throw DataError("forward: non-finite input");

  ForwardResult result;
  result.tape.inputs.reserve(head.layers.size());
  result.tape.pre_activations.reserve(head.layers.size());
  Matrix x = inputs;
  for (const AffineLayer& l : head.layers) {
    Matrix z = x * l.weights.transpose();
    z.rowwise() += l.bias.transpose();
    result.tape.inputs.push_back(std::move(x));
    x = l.activation == Activation::kRelu ? Matrix(z.cwiseMax(0.0)) : z;
    result.tape.pre_activations.push_back(std::move(z));
  }
  result.outputs = std::move(x);
  return result;
}

Matrix apply(const ProjectionHead& head, const Matrix& inputs) {
  return forward(head, inputs).outputs;
}

BackwardResult backward(const ProjectionHead& head, const ForwardTape& tape,
                        const Matrix& output_grads) {
  const std::size_t n_layers = head.layers.size();
  if (tape.inputs.size() != n_layers || tape.pre_activations.size() != n_layers) {
    throw DataError("backward: tape does not match head depth");
  }
  if (output_grads.rows() != tape.inputs.front().rows() ||
      static_cast<std::size_t>(output_grads.cols()) != head.out_dim()) {
    throw DataError("backward: output gradient shape mismatch");
  }

  BackwardResult result;
  result.grads = HeadGradients::zeros_like(head);
  Matrix g = output_grads;
  for (std::size_t k = n_layers; k-- > 0;) {
    const AffineLayer& l = head.layers[k];
    if (l.activation == Activation::kRelu) {
      // Subgradient at 0 is 0.
      g = g.cwiseProduct((tape.pre_activations[k].array() > 0.0).cast<double>().matrix());
    }
    result.grads.weights[k] = g.transpose() * tape.inputs[k];
    result.grads.bias[k] = g.colwise().sum().transpose();
    g = g * l.weights;
  }
  result.input_grads = std::move(g);
  return result;
}

std::size_t save_head(const ProjectionHead& head, std::ostream& sink) {
  head.validate();
  io::LeWriter w(sink);
  w.bytes({kMagic, 4});
  w.u16(kPrjwVersion);
  w.u16(head.learnable_tau ? kFlagLearnableTau : 0);
  w.u32(static_cast<std::uint32_t>(head.layers.size()));
  w.f64(head.log_inv_tau);
  for (const AffineLayer& l : head.layers) {
    w.u32(static_cast<std::uint32_t>(l.in_dim()));
    w.u32(static_cast<std::uint32_t>(l.out_dim()));
    w.u8(static_cast<std::uint8_t>(l.activation));
    for (Eigen::Index i = 0; i < l.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.weights.cols(); ++j) w.f64(l.weights(i, j));
    }
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) w.f64(l.bias(i));
  }
  return w.count();
}

ProjectionHead load_head(std::istream& source) {
  io::LeReader r(source);
  char magic[4];
  r.bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) {
    throw FormatError(FormatErrc::kBadMagic, "expected \"PRJW\"");
  }
  const std::uint16_t version = r.u16();
  if (version != kPrjwVersion) {
    throw FormatError(FormatErrc::kUnsupportedVersion,
                      "PRJW version " + std::to_string(version));
  }
  const std::uint16_t flags = r.u16();
  const std::uint32_t layer_count = r.u32();
  if (layer_count == 0) {
    throw FormatError(FormatErrc::kInvalidLayout, "PRJW with zero layers");
  }

  ProjectionHead head;
  head.learnable_tau = (flags & kFlagLearnableTau) != 0;
  head.log_inv_tau = r.f64();
  for (std::uint32_t k = 0; k < layer_count; ++k) {
    r.set_context("layer " + std::to_string(k));
    const std::uint32_t in = r.u32();
    const std::uint32_t out = r.u32();
    const std::uint8_t act = r.u8();
    if (in == 0 || out == 0) {
      throw FormatError(FormatErrc::kDimMismatch,
                        "layer " + std::to_string(k) + " has a zero dimension");
    }
    if (act > 1) {
      throw FormatError(FormatErrc::kInvalidLayout,
                        "layer " + std::to_string(k) + " activation code " +
                            std::to_string(act));
    }
    if (!head.layers.empty() && head.layers.back().out_dim() != in) {
      throw FormatError(FormatErrc::kDimMismatch,
                        "layer " + std::to_string(k) + " in_dim " +
                            std::to_string(in) + " does not chain from " +
                            std::to_string(head.layers.back().out_dim()));
    }
    AffineLayer l;
    l.activation = static_cast<Activation>(act);
    l.weights.resize(out, in);
    l.bias.resize(out);
    for (Eigen::Index i = 0; i < l.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.weights.cols(); ++j) l.weights(i, j) = r.f64();
    }
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = r.f64();
    head.layers.push_back(std::move(l));
  }
  if (!r.at_end()) {
    throw FormatError(FormatErrc::kTrailingBytes, "data follows the last layer");
  }
  try {
    head.validate();
  } catch (const FormatError&) {
    throw;
  } catch (const DataError& e) {
    throw FormatError(FormatErrc::kInvalidLayout, e.what());
  }
  return head;
}

std::size_t save_head(const ProjectionHead& head,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatErrc::kIo, "cannot open " + path.string());
  const std::size_t n = save_head(head, out);
  out.flush();
  if (!out) throw FormatError(FormatErrc::kIo, "flush failed: " + path.string());
  return n;
}

ProjectionHead load_head(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatErrc::kIo, "cannot open " + path.string());
  return load_head(in);
}

std::uint64_t head_checksum(const ProjectionHead& head) {
  std::ostringstream buf(std::ios::binary);
  save_head(head, buf);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : buf.str()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace coembed
