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
#include <string>
#include <vector>

#include "epicon/attention.hpp"
#include "epicon/epipolar.hpp"
#include "epicon/types.hpp"

namespace epicon {

/// Population over which the low-confidence threshold delta is taken.
enum class DeltaScope {
  kPerRow,         // all L keys of a query row (default)
  kPerFrameBlock,  // the H*W keys of one (query, key frame) block
};

DeltaScope parse_delta_scope(const std::string& name);
std::string to_string(DeltaScope scope);

/// Adaptive suppression set for one batch element.
///
/// omega(q, k) holds iff q is a background query, the epipolar bit (q, k) is
/// false, and A(q, k) < delta_q. Rows of non-background queries are empty.
class SuppressionMask {
 public:
  SuppressionMask(LatentDims dims, std::vector<int> active_queries);

  const LatentDims& dims() const { return dims_; }
  int tokens() const { return tokens_; }
  const std::vector<int>& active_queries() const { return active_; }

  bool at(int q, int k) const { return omega_[offset(q) + k] != 0; }
  void set(int q, int k, bool value) { omega_[offset(q) + k] = value ? 1 : 0; }
  std::span<const std::uint8_t> row(int q) const {
    return {omega_.data() + offset(q), static_cast<std::size_t>(tokens_)};
  }
  std::size_t count() const;

 private:
  std::size_t offset(int q) const {
    return static_cast<std::size_t>(q) * static_cast<std::size_t>(tokens_);
  }

  LatentDims dims_;
  int tokens_;
  std::vector<int> active_;
  std::vector<std::uint8_t> omega_;
};

/// Omega from an L x L attention slice. delta is computed with the strict
/// comparison A < delta, so ties at delta survive.
/// Throws DimensionMismatch when the attention size, mask dims or background
/// tokens disagree.
SuppressionMask suppression_mask(std::span<const double> attention,
                                 const EpipolarMaskVolume& mask,
                                 std::span<const int> background,
                                 double percent = kDefaultPercentile,
                                 DeltaScope scope = DeltaScope::kPerRow);

SuppressionMask suppression_mask(const AttentionMap& attention, int batch_index,
                                 const EpipolarMaskVolume& mask,
                                 std::span<const int> background,
                                 double percent = kDefaultPercentile,
                                 DeltaScope scope = DeltaScope::kPerRow);

struct EpipolarLossReport {
  double loss = 0.0;
  std::vector<double> suppressed_mass_per_query;  // length L
  std::size_t suppressed_count = 0;
};

/// sum over (q, k) of omega(q, k) * A(q, k), accumulated row by row.
EpipolarLossReport epipolar_loss(std::span<const double> attention,
                                 const SuppressionMask& omega);
EpipolarLossReport epipolar_loss(const AttentionMap& attention, int batch_index,
                                 const SuppressionMask& omega);

/// A with the suppressed entries zeroed.
std::vector<double> target_attention_map(std::span<const double> attention,
                                         const SuppressionMask& omega);

/// Entrywise L1 distance of two L x L matrices, accumulated row by row in the
/// same order as epipolar_loss.
double l1_distance(std::span<const double> lhs, std::span<const double> rhs, int tokens);

/// F x F table of suppressed mass per (query frame, key frame), row-major.
std::vector<double> pair_breakdown(std::span<const double> attention,
                                   const SuppressionMask& omega);

/// Loss summed over the batch, one omega per batch element.
struct BatchLossReport {
  double loss = 0.0;
  std::size_t suppressed_count = 0;
  std::size_t active_queries = 0;
  std::vector<double> pair_loss;  // F x F, summed over the batch
};

BatchLossReport epipolar_loss_batch(const AttentionMap& attention,
                                    const EpipolarMaskVolume& mask,
                                    std::span<const int> background,
                                    double percent = kDefaultPercentile,
                                    DeltaScope scope = DeltaScope::kPerRow);

/// Loss of softmax(logits) under a fixed omega (logits are L x L).
double frozen_epipolar_loss(std::span<const double> logits, const SuppressionMask& omega);

/// d loss / d logits with omega held fixed:
///   g(q, k) = A(q, k) * (omega(q, k) - sum_m omega(q, m) A(q, m)).
/// Throws NonFiniteInput on NaN/Inf logits.
std::vector<double> epipolar_loss_grad(std::span<const double> logits,
                                       const SuppressionMask& omega);

}  // namespace epicon
