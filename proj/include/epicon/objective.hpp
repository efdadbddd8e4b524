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
#include <span>
#include <vector>

#include "epicon/types.hpp"

namespace epicon {

/// Loss weights of the training objective.
struct LossWeights {
  double vgg = 0.2;
  double epipolar = 0.005;
};

/// Mean squared error over all elements.
/// Throws DimensionMismatch on size disagreement, InvalidArgument when empty.
double latent_loss(std::span<const double> eps_pred, std::span<const double> eps_true);

/// z_t = sqrt(alpha_bar) z0 + sqrt(1 - alpha_bar) epsilon.
struct NoisySample {
  std::vector<double> z_t;
  int timestep = 0;
  double alpha_bar = 1.0;
  std::vector<double> epsilon;

  static NoisySample make(std::span<const double> z0, std::span<const double> epsilon,
                          double alpha_bar, int timestep);
};

/// z0_hat = (z_t - sqrt(1 - alpha_bar) eps_pred) / sqrt(alpha_bar).
/// Throws DegenerateSchedule when alpha_bar <= 1e-12.
std::vector<double> one_step_x0(const NoisySample& sample, std::span<const double> eps_pred);

/// Cumulative products of (1 - beta_t) for betas linear in t.
std::vector<double> linear_alpha_bar_schedule(int steps, double beta_start = 1e-4,
                                              double beta_end = 0.02);

/// Video frames (N, C, H, W), values in [0, 1].
struct FrameSequence {
  int frames = 0;
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  FrameSequence() = default;
  FrameSequence(int n, int c, int h, int w)
      : frames(n), channels(c), height(h), width(w),
        data(static_cast<std::size_t>(n) * c * h * w, 0.0) {}

  std::size_t index(int f, int c, int y, int x) const {
    return ((static_cast<std::size_t>(f) * channels + c) * height + y) * width + x;
  }
  double& at(int f, int c, int y, int x) { return data[index(f, c, y, x)]; }
  double at(int f, int c, int y, int x) const { return data[index(f, c, y, x)]; }
};

/// One feature map of a multi-scale extractor; `stride` video pixels per cell.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  int stride = 1;
  std::vector<double> data;  // (C, H, W)

  double at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
};

/// Deterministic multi-scale feature extractor used by the perceptual loss.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::vector<FeatureMap> extract(const FrameSequence& video, int frame) const = 0;
};

/// Stand-in for pretrained perceptual features: at each scale s the frame is
/// average-pooled by 2^s and passed through a fixed-seed random 3x3
/// convolution followed by tanh. Outputs are 1-Lipschitz in the sup norm.
class StubFeatureExtractor final : public FeatureExtractor {
 public:
  StubFeatureExtractor(std::uint64_t seed, int in_channels, int feature_channels = 4,
                       int scales = 3);

  std::vector<FeatureMap> extract(const FrameSequence& video, int frame) const override;

  int scales() const { return scales_; }

 private:
  struct Layer {
    std::vector<double> kernel;  // (out, in, 3, 3)
    std::vector<double> bias;    // out
  };

  int in_channels_;
  int feature_channels_;
  int scales_;
  std::vector<Layer> layers_;
};

/// Single-scale extractor returning the pixels themselves.
class IdentityFeatureExtractor final : public FeatureExtractor {
 public:
  std::vector<FeatureMap> extract(const FrameSequence& video, int frame) const override;
};

/// Hand-weighted perceptual loss. Per scale, the squared L2 feature distance
/// of each cell is spread back to the video pixels it covers, weighted by
/// (1 + m), and averaged over pixels; the result is averaged over scales and
/// frames.
/// Throws DimensionMismatch on shape disagreement, InvalidArgument for pixels
/// outside [0, 1].
double perceptual_loss(const FrameSequence& v_hat, const FrameSequence& v,
                       const MaskSequence& hand, const FeatureExtractor& extractor);

/// latent + w.vgg * vgg + w.epipolar * epipolar.
double total_loss(double latent, double vgg, double epipolar, const LossWeights& w = {});

/// True iff t falls in the last 30% of denoising (t counts down to 0):
/// t < 0.3 * schedule_len, evaluated exactly in integers.
bool vgg_gate(int timestep, int schedule_len);

}  // namespace epicon
