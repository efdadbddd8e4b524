/* Copyright 2026 The epicon Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "epicon/attention.hpp"

namespace epicon {

/// L x C token matrix of one batch element.
using TokenMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Low-rank update dW = (alpha / r) * up * down on a C x C projection.
struct LoraAdapter {
  Eigen::MatrixXd down;  // r x C
  Eigen::MatrixXd up;    // C x r
  double alpha = 1.0;

  int rank() const { return static_cast<int>(down.rows()); }
  int channels() const { return static_cast<int>(down.cols()); }
  double scale() const { return alpha / rank(); }

  Eigen::MatrixXd delta_weight() const { return scale() * up * down; }
  /// Adapter path on row tokens: scale * (x down^T) up^T.
  TokenMatrix apply(const TokenMatrix& x) const;

  /// Throws InvalidArgument unless 1 <= r < C and the shapes agree.
  void validate() const;

  /// Down-projection ~ U(-1/sqrt(C), 1/sqrt(C)), up-projection zero, alpha
  /// defaulting to r (unit scale).
  static LoraAdapter init(int channels, int rank, std::mt19937_64& rng,
                          std::optional<double> alpha = std::nullopt);
};

/// Toy transformer block with a linear skip projection:
///   T(x) = x W0^T + Attn(x) + FFN(x + Attn(x))
/// with single-head softmax attention and a tanh MLP. The adapter attaches to
/// W0, so merging it is exact for the whole block.
class ToyDitBlock {
 public:
  struct Weights {
    Eigen::MatrixXd w0;  // C x C input projection
    Eigen::MatrixXd wq, wk, wv;  // C x C
    Eigen::MatrixXd w1;  // hidden x C
    Eigen::MatrixXd w2;  // C x hidden
  };

  explicit ToyDitBlock(Weights weights);
  static ToyDitBlock random(int channels, int hidden, std::mt19937_64& rng);

  int channels() const { return static_cast<int>(weights_.w0.rows()); }
  const Weights& weights() const { return weights_; }

  TokenMatrix forward(const TokenMatrix& x) const;
  /// x W0^T alone.
  TokenMatrix linear_path(const TokenMatrix& x) const;

  /// FNV-1a over the raw bytes of every weight, for freeze checks.
  std::uint64_t checksum() const;

 private:
  Weights weights_;
};

/// h_out = T(h_in + h_pose) + B(h_in + h_pose), per batch element.
/// Throws DimensionMismatch on shape disagreement.
TokenTensor bml_forward(const TokenTensor& h_in, const TokenTensor& h_pose,
                        const ToyDitBlock& block, const LoraAdapter& adapter);
/// Same without pose features.
TokenTensor bml_forward(const TokenTensor& h_in, const ToyDitBlock& block,
                        const LoraAdapter& adapter);

/// Block with W0 replaced by W0 + dW.
ToyDitBlock merge_adapter(const ToyDitBlock& block, const LoraAdapter& adapter);

/// One gradient step on the adapter only, minimizing the mean squared error
/// between bml_forward(h_in, h_pose) and `target`. The block is untouched.
/// Returns the loss before the step.
double fit_adapter_step(LoraAdapter& adapter, const ToyDitBlock& block,
                        const TokenTensor& h_in, const TokenTensor& h_pose,
                        const TokenTensor& target, double lr);

/// LORA1 wire format: "LORA1", C, r (u32 LE), alpha (f64 LE), down (r x C)
/// then up (C x r), both row-major f64 LE.
std::vector<std::uint8_t> encode_adapter(const LoraAdapter& adapter);
LoraAdapter decode_adapter(std::span<const std::uint8_t> bytes);
void save_adapter(const std::filesystem::path& path, const LoraAdapter& adapter);
LoraAdapter load_adapter(const std::filesystem::path& path);

}  // namespace epicon
