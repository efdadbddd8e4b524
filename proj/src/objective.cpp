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

#include "epicon/objective.hpp"

#include <cmath>
#include <random>

#include "epicon/errors.hpp"

namespace epicon {
namespace {

void same_size(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    throw DimensionMismatch(std::string(what) + ": sizes " + std::to_string(a.size()) +
                            " and " + std::to_string(b.size()) + " differ");
  }
}

// Average pooling by `factor`, edge cells average the pixels they cover.
std::vector<double> average_pool(const FrameSequence& video, int frame, int factor,
                                 int& out_h, int& out_w) {
  out_h = (video.height + factor - 1) / factor;
  out_w = (video.width + factor - 1) / factor;
  std::vector<double> out(static_cast<std::size_t>(video.channels) * out_h * out_w, 0.0);
  for (int c = 0; c < video.channels; ++c) {
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        double sum = 0.0;
        int n = 0;
        for (int yy = y * factor; yy < std::min(video.height, (y + 1) * factor); ++yy) {
          for (int xx = x * factor; xx < std::min(video.width, (x + 1) * factor); ++xx) {
            sum += video.at(frame, c, yy, xx);
            ++n;
          }
        }
        out[(static_cast<std::size_t>(c) * out_h + y) * out_w + x] = sum / n;
      }
    }
  }
  return out;
}

}  // namespace

double latent_loss(std::span<const double> eps_pred, std::span<const double> eps_true) {
  same_size(eps_pred, eps_true, "latent_loss");
  if (eps_pred.empty()) throw InvalidArgument("latent_loss of empty tensors");
  double sum = 0.0;
  for (std::size_t i = 0; i < eps_pred.size(); ++i) {
    const double d = eps_pred[i] - eps_true[i];
    sum += d * d;
  }
  return sum / static_cast<double>(eps_pred.size());
}

NoisySample NoisySample::make(std::span<const double> z0, std::span<const double> epsilon,
                              double alpha_bar, int timestep) {
  same_size(z0, epsilon, "NoisySample");
  if (!(alpha_bar > 0.0 && alpha_bar <= 1.0)) {
    throw InvalidArgument("alpha_bar must lie in (0, 1]");
  }
  NoisySample s;
  s.timestep = timestep;
  s.alpha_bar = alpha_bar;
  s.epsilon.assign(epsilon.begin(), epsilon.end());
  s.z_t.resize(z0.size());
  const double signal = std::sqrt(alpha_bar);
  const double noise = std::sqrt(1.0 - alpha_bar);
  for (std::size_t i = 0; i < z0.size(); ++i) s.z_t[i] = signal * z0[i] + noise * epsilon[i];
  return s;
}

std::vector<double> one_step_x0(const NoisySample& sample, std::span<const double> eps_pred) {
  same_size(sample.z_t, eps_pred, "one_step_x0");
  if (!(sample.alpha_bar > 1e-12)) {
    throw DegenerateSchedule("alpha_bar " + std::to_string(sample.alpha_bar) +
                             " too small to invert");
  }
  if (sample.alpha_bar > 1.0) throw InvalidArgument("alpha_bar must not exceed 1");
  const double signal = std::sqrt(sample.alpha_bar);
  const double noise = std::sqrt(1.0 - sample.alpha_bar);
  std::vector<double> z0(sample.z_t.size());
  for (std::size_t i = 0; i < z0.size(); ++i) {
    z0[i] = (sample.z_t[i] - noise * eps_pred[i]) / signal;
  }
  return z0;
}

std::vector<double> linear_alpha_bar_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw InvalidArgument("schedule needs at least one step");
  std::vector<double> alpha_bar(static_cast<std::size_t>(steps));
  double running = 1.0;
  for (int t = 0; t < steps; ++t) {
    const double beta =
        steps == 1 ? beta_start
                   : beta_start + (beta_end - beta_start) * t / static_cast<double>(steps - 1);
    running *= 1.0 - beta;
    alpha_bar[t] = running;
  }
  return alpha_bar;
}

StubFeatureExtractor::StubFeatureExtractor(std::uint64_t seed, int in_channels,
                                           int feature_channels, int scales)
    : in_channels_(in_channels), feature_channels_(feature_channels), scales_(scales) {
  if (in_channels < 1 || feature_channels < 1 || scales < 1) {
    throw InvalidArgument("feature extractor sizes must be >= 1");
  }
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / (9.0 * in_channels);
  std::uniform_real_distribution<double> weight(-bound, bound);
  std::uniform_real_distribution<double> bias(-0.1, 0.1);
  for (int s = 0; s < scales; ++s) {
    Layer layer;
    layer.kernel.resize(static_cast<std::size_t>(feature_channels) * in_channels * 9);
    for (double& w : layer.kernel) w = weight(rng);
    layer.bias.resize(static_cast<std::size_t>(feature_channels));
    for (double& b : layer.bias) b = bias(rng);
    layers_.push_back(std::move(layer));
  }
}

std::vector<FeatureMap> StubFeatureExtractor::extract(const FrameSequence& video,
                                                      int frame) const {
  if (video.channels != in_channels_) {
    throw DimensionMismatch("extractor expects " + std::to_string(in_channels_) +
                            " channels, got " + std::to_string(video.channels));
  }
  std::vector<FeatureMap> maps;
  for (int s = 0; s < scales_; ++s) {
    const int stride = 1 << s;
    int h = 0;
    int w = 0;
    const std::vector<double> pooled = average_pool(video, frame, stride, h, w);
    const Layer& layer = layers_[s];
    FeatureMap map{feature_channels_, h, w, stride,
                   std::vector<double>(static_cast<std::size_t>(feature_channels_) * h * w)};
    for (int o = 0; o < feature_channels_; ++o) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          double acc = layer.bias[o];
          for (int c = 0; c < in_channels_; ++c) {
            for (int ky = 0; ky < 3; ++ky) {
              for (int kx = 0; kx < 3; ++kx) {
                const int yy = y + ky - 1;
                const int xx = x + kx - 1;
                if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                acc += layer.kernel[((static_cast<std::size_t>(o) * in_channels_ + c) * 3 +
                                     ky) * 3 + kx] *
                       pooled[(static_cast<std::size_t>(c) * h + yy) * w + xx];
              }
            }
          }
          map.data[(static_cast<std::size_t>(o) * h + y) * w + x] = std::tanh(acc);
        }
      }
    }
    maps.push_back(std::move(map));
  }
  return maps;
}

std::vector<FeatureMap> IdentityFeatureExtractor::extract(const FrameSequence& video,
                                                          int frame) const {
  FeatureMap map{video.channels, video.height, video.width, 1, {}};
  const auto begin = video.data.begin() +
                     static_cast<std::ptrdiff_t>(video.index(frame, 0, 0, 0));
  map.data.assign(begin, begin + static_cast<std::ptrdiff_t>(video.channels) *
                                     video.height * video.width);
  return {map};
}

double perceptual_loss(const FrameSequence& v_hat, const FrameSequence& v,
                       const MaskSequence& hand, const FeatureExtractor& extractor) {
  if (v_hat.frames != v.frames || v_hat.channels != v.channels ||
      v_hat.height != v.height || v_hat.width != v.width) {
    throw DimensionMismatch("generated and target frames differ in shape");
  }
  if (hand.frames != v.frames || hand.height != v.height || hand.width != v.width) {
    throw DimensionMismatch("hand mask does not match frame dims");
  }
  if (v.frames < 1) throw InvalidArgument("perceptual loss needs at least one frame");
  for (const auto* video : {&v_hat, &v}) {
    for (double x : video->data) {
      if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("pixel values must lie in [0, 1]");
    }
  }

  const double pixels = static_cast<double>(v.height) * v.width;
  double total = 0.0;
  int terms = 0;
  for (int f = 0; f < v.frames; ++f) {
    const auto gen = extractor.extract(v_hat, f);
    const auto ref = extractor.extract(v, f);
    if (gen.size() != ref.size()) throw DimensionMismatch("extractor scale count varies");
    for (std::size_t s = 0; s < gen.size(); ++s) {
      const FeatureMap& a = gen[s];
      const FeatureMap& b = ref[s];
      double weighted = 0.0;
      for (int y = 0; y < v.height; ++y) {
        for (int x = 0; x < v.width; ++x) {
          const int cy = y / a.stride;
          const int cx = x / a.stride;
          double dist = 0.0;
          for (int c = 0; c < a.channels; ++c) {
            const double d = a.at(c, cy, cx) - b.at(c, cy, cx);
            dist += d * d;
          }
          weighted += (hand.at(f, y, x) ? 2.0 : 1.0) * dist;
        }
      }
      total += weighted / pixels;
      ++terms;
    }
  }
  return total / terms;
}

double total_loss(double latent, double vgg, double epipolar, const LossWeights& w) {
  return latent + w.vgg * vgg + w.epipolar * epipolar;
}

bool vgg_gate(int timestep, int schedule_len) {
  if (schedule_len < 1 || timestep < 0 || timestep >= schedule_len) {
    throw InvalidArgument("timestep must satisfy 0 <= t < schedule_len");
  }
  return 10LL * timestep < 3LL * schedule_len;
}

}  // namespace epicon
