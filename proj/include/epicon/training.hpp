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
#include <optional>
#include <span>
#include <vector>

#include "epicon/constraint.hpp"
#include "epicon/epipolar.hpp"

namespace epicon {

/// Central differences of frozen_epipolar_loss. Each entry only perturbs its
/// own row, so the difference is taken on that row's loss term.
std::vector<double> central_difference_grad(std::span<const double> logits,
                                            const SuppressionMask& omega, double step);

/// max_i |a_i - n_i| / max(|a_i|, |n_i|, floor). The floor keeps entries that
/// are zero up to round-off from dominating.
double max_relative_error(std::span<const double> analytic, std::span<const double> numeric,
                          double floor = 1e-8);

struct GradCheckOptions {
  std::uint64_t seed = 0;
  int instances = 20;
  int max_tokens = 48;
  std::optional<LatentDims> dims;  // fixed size for every instance when set
  double step = 1e-5;
  double tolerance = 1e-6;
  double percent = kDefaultPercentile;
  bool corrupt_analytic = false;  // negative control: perturbs the analytic grad
};

struct GradCheckInstance {
  std::uint64_t seed = 0;
  LatentDims dims;
  std::size_t suppressed = 0;
  double max_relative_error = 0.0;
};

struct GradCheckResult {
  std::vector<GradCheckInstance> instances;
  double max_relative_error = 0.0;
  std::size_t worst = 0;
  bool passed = false;
};

/// Analytic vs. central-difference gradients on random rigs, logits and
/// background sets, with omega built by the real pipeline.
GradCheckResult run_gradient_check(const GradCheckOptions& options);

/// Attention mass of background query rows that falls outside the epipolar
/// mask: sum over q in background, k with M(q, k) false, of A(q, k).
double out_of_epipolar_mass(std::span<const double> attention,
                            const EpipolarMaskVolume& mask,
                            std::span<const int> background);

struct DemoOptions {
  int steps = 200;
  double lr = 0.05;
  std::uint64_t seed = 7;
  double percent = kDefaultPercentile;
  DeltaScope scope = DeltaScope::kPerRow;
};

struct DemoStep {
  int step = 0;
  double loss = 0.0;
  double out_of_epipolar_mass = 0.0;
  std::size_t suppressed = 0;
};

struct DemoResult {
  std::vector<DemoStep> log;  // step 0 is the initial state
  double initial_mass = 0.0;
  double final_mass = 0.0;
  /// Fraction of steps t >= 1 with loss(t) <= loss(t - 1); 1 when steps = 0.
  double nonincreasing_fraction = 1.0;
  double final_in_mask_mass = 0.0;  // background rows, inside the mask
  double final_max_attention = 0.0;
};

/// Gradient descent on L x L logits (initialized ~ N(0, 1) from the seed)
/// against the epipolar loss. Omega is rebuilt from the current attention at
/// every step and held fixed for that step's gradient.
DemoResult run_demo_training(const EpipolarMaskVolume& mask, std::span<const int> background,
                             const DemoOptions& options);

}  // namespace epicon
