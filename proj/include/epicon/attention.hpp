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
#include <span>
#include <vector>

#include <Eigen/Core>

#include "epicon/types.hpp"

namespace epicon {

/// Default percentile for the low-confidence threshold.
inline constexpr double kDefaultPercentile = 30.0;
/// VAE compression factors between video pixels/frames and latents.
inline constexpr int kSpatialCompression = 8;
inline constexpr int kTemporalCompression = 4;

/// Video latent of shape (B, F, C, H, W), row-major.
struct VideoLatent {
  int batch = 0;
  int frames = 0;
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  VideoLatent() = default;
  VideoLatent(int b, int f, int c, int h, int w);

  LatentDims dims() const { return {frames, height, width}; }
  std::size_t index(int b, int f, int c, int y, int x) const {
    return ((((static_cast<std::size_t>(b) * frames + f) * channels + c) * height + y) *
                width) +
           x;
  }
  double& at(int b, int f, int c, int y, int x) { return data[index(b, f, c, y, x)]; }
  double at(int b, int f, int c, int y, int x) const { return data[index(b, f, c, y, x)]; }
};

/// Token sequence of shape (B, L, C), row-major.
struct TokenTensor {
  int batch = 0;
  int tokens = 0;
  int channels = 0;
  std::vector<double> data;

  TokenTensor() = default;
  TokenTensor(int b, int l, int c)
      : batch(b), tokens(l), channels(c),
        data(static_cast<std::size_t>(b) * l * c, 0.0) {}

  std::span<double> token(int b, int t) {
    return {data.data() + (static_cast<std::size_t>(b) * tokens + t) * channels,
            static_cast<std::size_t>(channels)};
  }
  std::span<const double> token(int b, int t) const {
    return {data.data() + (static_cast<std::size_t>(b) * tokens + t) * channels,
            static_cast<std::size_t>(channels)};
  }
  bool same_shape(const TokenTensor& o) const {
    return batch == o.batch && tokens == o.tokens && channels == o.channels;
  }
};

/// Reshapes (B, F, C, H, W) into (B, H*W*F, C) using the LatentDims token
/// order (frame-major, then row, then column).
TokenTensor flatten_latent(const VideoLatent& latent);
/// Inverse of flatten_latent. Throws DimensionMismatch on size disagreement.
VideoLatent unflatten_latent(const TokenTensor& tokens, const LatentDims& dims);

/// Query/key projections of the toy single-head attention: q = q_proj * x,
/// k = k_proj * x, both C x C.
struct ProjectionWeights {
  Eigen::MatrixXd q_proj;
  Eigen::MatrixXd k_proj;
};

/// Row-stochastic attention of shape (B, L, L): row = query, column = key.
class AttentionMap {
 public:
  AttentionMap() = default;
  AttentionMap(int batch, int tokens, std::vector<double> values);

  /// Applies a max-subtracted softmax to every row of (B, L, L) logits.
  /// Throws NonFiniteInput on NaN/Inf.
  static AttentionMap from_logits(int batch, int tokens, std::span<const double> logits);

  int batch() const { return batch_; }
  int tokens() const { return tokens_; }

  std::span<const double> row(int b, int q) const {
    return {values_.data() + row_offset(b, q), static_cast<std::size_t>(tokens_)};
  }
  /// The L x L slice of one batch element.
  std::span<const double> matrix(int b) const {
    return {values_.data() + row_offset(b, 0),
            static_cast<std::size_t>(tokens_) * static_cast<std::size_t>(tokens_)};
  }
  double at(int b, int q, int k) const { return values_[row_offset(b, q) + k]; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t row_offset(int b, int q) const {
    return (static_cast<std::size_t>(b) * tokens_ + q) * static_cast<std::size_t>(tokens_);
  }

  int batch_ = 0;
  int tokens_ = 0;
  std::vector<double> values_;
};

/// Softmax over one row with max subtraction; writes into `out`.
void softmax_row(std::span<const double> logits, std::span<double> out);

/// Softmax(Q K^T / sqrt(d)) for every batch element.
/// Throws InvalidArgument unless d > 0; NonFiniteInput on NaN/Inf tokens.
AttentionMap attention_map(const TokenTensor& tokens, const ProjectionWeights& proj,
                           double d);

/// Nearest-rank percentile: sorted(row)[ceil(p/100 * n) - 1].
/// Throws EmptyRow for an empty row, InvalidArgument unless 0 < p < 100.
double percentile_threshold(std::span<const double> row, double percent);

/// Latent tokens whose receptive field (factor x factor video pixels) is less
/// than half human. `human` is at video resolution with one frame per latent
/// frame. Returns sorted token indices.
/// Throws DimensionMismatch unless human is (F, H*factor, W*factor).
std::vector<int> background_token_set(const MaskSequence& human, const LatentDims& dims,
                                      int spatial_factor = kSpatialCompression);

/// ATTN1 wire format: "ATTN1", B, L (u32 LE), then B*L*L f64 LE row-major.
std::vector<std::uint8_t> encode_attention(const AttentionMap& map);
AttentionMap decode_attention(std::span<const std::uint8_t> bytes);
void save_attention(const std::filesystem::path& path, const AttentionMap& map);
AttentionMap load_attention(const std::filesystem::path& path);

}  // namespace epicon
