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

#include "epicon/constraint.hpp"

#include <algorithm>
#include <cmath>

#include "epicon/errors.hpp"

namespace epicon {
namespace {

std::vector<int> checked_background(std::span<const int> background, int tokens) {
  std::vector<int> active(background.begin(), background.end());
  std::sort(active.begin(), active.end());
  active.erase(std::unique(active.begin(), active.end()), active.end());
  if (!active.empty() && (active.front() < 0 || active.back() >= tokens)) {
    throw DimensionMismatch("background token outside [0, " + std::to_string(tokens) + ")");
  }
  return active;
}

std::size_t square(int tokens) {
  return static_cast<std::size_t>(tokens) * static_cast<std::size_t>(tokens);
}

int tokens_of(std::span<const double> matrix) {
  const auto l = static_cast<int>(std::lround(std::sqrt(static_cast<double>(matrix.size()))));
  if (square(l) != matrix.size()) throw DimensionMismatch("matrix is not square");
  return l;
}

}  // namespace

DeltaScope parse_delta_scope(const std::string& name) {
  if (name == "row") return DeltaScope::kPerRow;
  if (name == "block") return DeltaScope::kPerFrameBlock;
  throw InvalidArgument("delta scope must be \"row\" or \"block\", got \"" + name + "\"");
}

std::string to_string(DeltaScope scope) {
  return scope == DeltaScope::kPerRow ? "row" : "block";
}

SuppressionMask::SuppressionMask(LatentDims dims, std::vector<int> active_queries)
    : dims_(dims),
      tokens_(dims.tokens()),
      active_(checked_background(active_queries, dims.tokens())),
      omega_(square(dims.tokens()), 0) {}

std::size_t SuppressionMask::count() const {
  return static_cast<std::size_t>(std::count(omega_.begin(), omega_.end(), std::uint8_t{1}));
}

SuppressionMask suppression_mask(std::span<const double> attention,
                                 const EpipolarMaskVolume& mask,
                                 std::span<const int> background, double percent,
                                 DeltaScope scope) {
  const LatentDims& dims = mask.dims();
  const int l = dims.tokens();
  if (attention.size() != square(l)) {
    throw DimensionMismatch("attention is " + std::to_string(tokens_of(attention)) +
                            " tokens, mask volume " + dims.to_string() + " has " +
                            std::to_string(l));
  }
  SuppressionMask omega(dims, std::vector<int>(background.begin(), background.end()));
  const int area = dims.frame_area();

  for (int q : omega.active_queries()) {
    const auto row = attention.subspan(static_cast<std::size_t>(q) * l, l);
    if (scope == DeltaScope::kPerRow) {
      const double delta = percentile_threshold(row, percent);
      for (int k = 0; k < l; ++k) {
        if (!mask.get(q, k) && row[k] < delta) omega.set(q, k, true);
      }
    } else {
      for (int j = 0; j < dims.frames; ++j) {
        const auto block = row.subspan(static_cast<std::size_t>(j) * area, area);
        const double delta = percentile_threshold(block, percent);
        for (int k = j * area; k < (j + 1) * area; ++k) {
          if (!mask.get(q, k) && row[k] < delta) omega.set(q, k, true);
        }
      }
    }
  }
  return omega;
}

SuppressionMask suppression_mask(const AttentionMap& attention, int batch_index,
                                 const EpipolarMaskVolume& mask,
                                 std::span<const int> background, double percent,
                                 DeltaScope scope) {
  return suppression_mask(attention.matrix(batch_index), mask, background, percent, scope);
}

EpipolarLossReport epipolar_loss(std::span<const double> attention,
                                 const SuppressionMask& omega) {
  const int l = omega.tokens();
  if (attention.size() != square(l)) {
    throw DimensionMismatch("attention and suppression mask sizes differ");
  }
  EpipolarLossReport report;
  report.suppressed_mass_per_query.assign(static_cast<std::size_t>(l), 0.0);
  for (int q = 0; q < l; ++q) {
    const auto row = attention.subspan(static_cast<std::size_t>(q) * l, l);
    const auto bits = omega.row(q);
    double mass = 0.0;
    for (int k = 0; k < l; ++k) {
      mass += bits[k] ? row[k] : 0.0;
      report.suppressed_count += bits[k];
    }
    report.suppressed_mass_per_query[q] = mass;
    report.loss += mass;
  }
  return report;
}

EpipolarLossReport epipolar_loss(const AttentionMap& attention, int batch_index,
                                 const SuppressionMask& omega) {
  return epipolar_loss(attention.matrix(batch_index), omega);
}

std::vector<double> target_attention_map(std::span<const double> attention,
                                         const SuppressionMask& omega) {
  const int l = omega.tokens();
  if (attention.size() != square(l)) {
    throw DimensionMismatch("attention and suppression mask sizes differ");
  }
  std::vector<double> target(attention.begin(), attention.end());
  for (int q = 0; q < l; ++q) {
    const auto bits = omega.row(q);
    for (int k = 0; k < l; ++k) {
      if (bits[k]) target[static_cast<std::size_t>(q) * l + k] = 0.0;
    }
  }
  return target;
}

double l1_distance(std::span<const double> lhs, std::span<const double> rhs, int tokens) {
  if (lhs.size() != square(tokens) || rhs.size() != square(tokens)) {
    throw DimensionMismatch("l1_distance operands must be L x L");
  }
  double total = 0.0;
  for (int q = 0; q < tokens; ++q) {
    double row = 0.0;
    for (int k = 0; k < tokens; ++k) {
      const std::size_t i = static_cast<std::size_t>(q) * tokens + k;
      row += std::abs(lhs[i] - rhs[i]);
    }
    total += row;
  }
  return total;
}

std::vector<double> pair_breakdown(std::span<const double> attention,
                                   const SuppressionMask& omega) {
  const LatentDims& dims = omega.dims();
  const int l = dims.tokens();
  if (attention.size() != square(l)) {
    throw DimensionMismatch("attention and suppression mask sizes differ");
  }
  const int area = dims.frame_area();
  std::vector<double> table(static_cast<std::size_t>(dims.frames) * dims.frames, 0.0);
  for (int q : omega.active_queries()) {
    const int i = q / area;
    for (int k = 0; k < l; ++k) {
      if (omega.at(q, k)) {
        table[static_cast<std::size_t>(i) * dims.frames + k / area] +=
            attention[static_cast<std::size_t>(q) * l + k];
      }
    }
  }
  return table;
}

BatchLossReport epipolar_loss_batch(const AttentionMap& attention,
                                    const EpipolarMaskVolume& mask,
                                    std::span<const int> background, double percent,
                                    DeltaScope scope) {
  const LatentDims& dims = mask.dims();
  if (attention.tokens() != dims.tokens()) {
    throw DimensionMismatch("attention has " + std::to_string(attention.tokens()) +
                            " tokens, mask volume " + dims.to_string() + " has " +
                            std::to_string(dims.tokens()));
  }
  BatchLossReport out;
  out.pair_loss.assign(static_cast<std::size_t>(dims.frames) * dims.frames, 0.0);
  for (int b = 0; b < attention.batch(); ++b) {
    const auto a = attention.matrix(b);
    const SuppressionMask omega = suppression_mask(a, mask, background, percent, scope);
    const EpipolarLossReport report = epipolar_loss(a, omega);
    out.loss += report.loss;
    out.suppressed_count += report.suppressed_count;
    out.active_queries += omega.active_queries().size();
    const auto pairs = pair_breakdown(a, omega);
    for (std::size_t i = 0; i < pairs.size(); ++i) out.pair_loss[i] += pairs[i];
  }
  return out;
}

double frozen_epipolar_loss(std::span<const double> logits, const SuppressionMask& omega) {
  const AttentionMap a = AttentionMap::from_logits(1, omega.tokens(), logits);
  return epipolar_loss(a.matrix(0), omega).loss;
}

std::vector<double> epipolar_loss_grad(std::span<const double> logits,
                                       const SuppressionMask& omega) {
  const int l = omega.tokens();
  if (logits.size() != square(l)) {
    throw DimensionMismatch("logits and suppression mask sizes differ");
  }
  const AttentionMap a = AttentionMap::from_logits(1, l, logits);
  std::vector<double> grad(logits.size(), 0.0);
  for (int q = 0; q < l; ++q) {
    const auto row = a.row(0, q);
    const auto bits = omega.row(q);
    double suppressed = 0.0;
    for (int k = 0; k < l; ++k) suppressed += bits[k] ? row[k] : 0.0;
    for (int k = 0; k < l; ++k) {
      const double w = bits[k] ? 1.0 : 0.0;
      grad[static_cast<std::size_t>(q) * l + k] = row[k] * (w - suppressed);
    }
  }
  return grad;
}

}  // namespace epicon
