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

#include "epicon/training.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "epicon/errors.hpp"
#include "epicon/scene.hpp"

namespace epicon {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double row_loss(std::span<const double> logits, std::span<const std::uint8_t> omega,
                std::vector<double>& scratch) {
  scratch.resize(logits.size());
  softmax_row(logits, scratch);
  double loss = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) loss += omega[k] ? scratch[k] : 0.0;
  return loss;
}

LatentDims random_dims(std::mt19937_64& rng, int max_tokens) {
  std::uniform_int_distribution<int> frames(2, 3);
  std::uniform_int_distribution<int> side(2, 4);
  for (;;) {
    const LatentDims d{frames(rng), side(rng), side(rng)};
    if (d.tokens() <= max_tokens) return d;
  }
}

}  // namespace

std::vector<double> central_difference_grad(std::span<const double> logits,
                                            const SuppressionMask& omega, double step) {
  const int l = omega.tokens();
  if (logits.size() != static_cast<std::size_t>(l) * l) {
    throw DimensionMismatch("logits and suppression mask sizes differ");
  }
  std::vector<double> grad(logits.size(), 0.0);
  std::vector<double> row(static_cast<std::size_t>(l));
  std::vector<double> scratch;
  for (int q = 0; q < l; ++q) {
    const auto base = logits.subspan(static_cast<std::size_t>(q) * l, l);
    const auto bits = omega.row(q);
    for (int k = 0; k < l; ++k) {
      std::copy(base.begin(), base.end(), row.begin());
      row[k] = base[k] + step;
      const double up = row_loss(row, bits, scratch);
      row[k] = base[k] - step;
      const double down = row_loss(row, bits, scratch);
      grad[static_cast<std::size_t>(q) * l + k] = (up - down) / (2.0 * step);
    }
  }
  return grad;
}

double max_relative_error(std::span<const double> analytic, std::span<const double> numeric,
                          double floor) {
  if (analytic.size() != numeric.size()) throw DimensionMismatch("gradient sizes differ");
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / scale);
  }
  return worst;
}

GradCheckResult run_gradient_check(const GradCheckOptions& options) {
  if (options.instances < 1) throw InvalidArgument("gradient check needs >= 1 instance");
  GradCheckResult result;
  for (int i = 0; i < options.instances; ++i) {
    GradCheckInstance inst;
    inst.seed = splitmix64(splitmix64(options.seed) + static_cast<std::uint64_t>(i));
    std::mt19937_64 rng(inst.seed);
    inst.dims = options.dims ? *options.dims : random_dims(rng, options.max_tokens);
    const int l = inst.dims.tokens();

    const EpipolarMaskVolume mask =
        inst.dims.frames >= 2
            ? mask_volume(random_rig(rng, inst.dims.frames, inst.dims.grid()),
                          inst.dims.grid())
            : EpipolarMaskVolume(inst.dims, kDefaultBandThreshold, true);

    std::normal_distribution<double> logit(0.0, 1.5);
    std::vector<double> logits(static_cast<std::size_t>(l) * l);
    for (double& z : logits) z = logit(rng);
    std::bernoulli_distribution is_background(0.7);
    std::vector<int> background;
    for (int t = 0; t < l; ++t) {
      if (is_background(rng)) background.push_back(t);
    }

    const AttentionMap a = AttentionMap::from_logits(1, l, logits);
    const SuppressionMask omega =
        suppression_mask(a.matrix(0), mask, background, options.percent);
    inst.suppressed = omega.count();

    std::vector<double> analytic = epipolar_loss_grad(logits, omega);
    if (options.corrupt_analytic) {
      for (double& g : analytic) g *= 1.01;
      analytic[0] += 1e-3;
    }
    const std::vector<double> numeric = central_difference_grad(logits, omega, options.step);
    inst.max_relative_error = max_relative_error(analytic, numeric);

    if (result.instances.empty() || inst.max_relative_error > result.max_relative_error) {
      result.max_relative_error = inst.max_relative_error;
      result.worst = result.instances.size();
    }
    result.instances.push_back(inst);
  }
  result.passed = result.max_relative_error < options.tolerance;
  return result;
}

double out_of_epipolar_mass(std::span<const double> attention,
                            const EpipolarMaskVolume& mask,
                            std::span<const int> background) {
  const int l = mask.dims().tokens();
  if (attention.size() != static_cast<std::size_t>(l) * l) {
    throw DimensionMismatch("attention does not match mask volume");
  }
  double mass = 0.0;
  for (int q : background) {
    if (q < 0 || q >= l) throw DimensionMismatch("background token out of range");
    for (int k = 0; k < l; ++k) {
      if (!mask.get(q, k)) mass += attention[static_cast<std::size_t>(q) * l + k];
    }
  }
  return mass;
}

DemoResult run_demo_training(const EpipolarMaskVolume& mask, std::span<const int> background,
                             const DemoOptions& options) {
  if (options.steps < 0) throw InvalidArgument("steps must be >= 0");
  if (!(options.lr > 0.0)) throw InvalidArgument("learning rate must be positive");
  const int l = mask.dims().tokens();
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> init(0.0, 1.0);
  std::vector<double> logits(static_cast<std::size_t>(l) * l);
  for (double& z : logits) z = init(rng);

  DemoResult result;
  std::size_t nonincreasing = 0;
  for (int step = 0;; ++step) {
    const AttentionMap a = AttentionMap::from_logits(1, l, logits);
    const SuppressionMask omega =
        suppression_mask(a.matrix(0), mask, background, options.percent, options.scope);
    const EpipolarLossReport report = epipolar_loss(a.matrix(0), omega);

    DemoStep entry{step, report.loss, out_of_epipolar_mass(a.matrix(0), mask, background),
                   report.suppressed_count};
    if (!result.log.empty() && entry.loss <= result.log.back().loss) ++nonincreasing;
    result.log.push_back(entry);

    if (step == options.steps) {
      double in_mask = 0.0;
      for (int q : omega.active_queries()) {
        for (int k = 0; k < l; ++k) {
          if (mask.get(q, k)) in_mask += a.at(0, q, k);
        }
      }
      result.final_in_mask_mass = in_mask;
      const auto values = a.matrix(0);
      result.final_max_attention = *std::max_element(values.begin(), values.end());
      break;
    }

    const std::vector<double> grad = epipolar_loss_grad(logits, omega);
    for (std::size_t i = 0; i < logits.size(); ++i) logits[i] -= options.lr * grad[i];
  }
  result.initial_mass = result.log.front().out_of_epipolar_mass;
  result.final_mass = result.log.back().out_of_epipolar_mass;
  if (options.steps > 0) {
    result.nonincreasing_fraction = static_cast<double>(nonincreasing) / options.steps;
  }
  return result;
}

}  // namespace epicon
