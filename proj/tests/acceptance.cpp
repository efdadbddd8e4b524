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

// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/SVD>

#include "epicon/adapters.hpp"
#include "epicon/attention.hpp"
#include "epicon/constraint.hpp"
#include "epicon/epipolar.hpp"
#include "epicon/geometry.hpp"
#include "epicon/mask_io.hpp"
#include "epicon/objective.hpp"
#include "epicon/scene.hpp"
#include "epicon/training.hpp"
#include "epicon/trajectory_io.hpp"
#include "oracles.hpp"

using namespace epicon;

namespace {

// Tolerances and budgets, fixed here.
constexpr double kResidualTol = 1e-9;
constexpr double kLineDistanceTol = 1e-6;
constexpr double kMaxFill = 0.25;
constexpr double kMedianFill = 0.12;
constexpr double kOracleTol = 1e-12;
constexpr double kGradTol = 1e-6;
constexpr double kMergeTol = 1e-9;
constexpr double kMassRatio = 0.5;
constexpr double kNonincreasing = 0.95;
constexpr double kBudget1 = 10.0, kBudget2 = 10.0, kBudget4 = 30.0, kBudget8 = 60.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, double budget, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o = body();
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget > 0.0 && secs >= budget) {
    o.pass = false;
    o.detail += " over time budget";
  }
  if (!o.pass) ++failures;
  std::printf("%s [%d] %s: %s (%.2fs)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(),
              secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Outcome geometry_oracle() {
  std::mt19937_64 rng(1001);
  const GridSize grid{32, 32};
  double worst_residual = 0.0, worst_distance = 0.0;
  for (int rig = 0; rig < 50; ++rig) {
    const auto poses = random_rig(rng, 2, grid);
    const FundamentalMatrix f = fundamental_matrix(poses[0], poses[1]);
    for (const Vec3& x : visible_points(rng, poses, grid, 1000)) {
      const auto pi = oracle::project(poses[0], {x[0], x[1], x[2]});
      const auto pj = oracle::project(poses[1], {x[0], x[1], x[2]});
      if (!pi || !pj) return {false, "point behind a camera"};
      const Vec3 hi((*pi)[0], (*pi)[1], 1.0);
      const Vec3 hj((*pj)[0], (*pj)[1], 1.0);
      worst_residual =
          std::max(worst_residual, std::abs(hj.dot(f.matrix() * hi)) / (hi.norm() * hj.norm()));
      const EpipolarLine line = epipolar_line(f, {(*pi)[0], (*pi)[1]});
      worst_distance = std::max(worst_distance, point_line_distance(line, {(*pj)[0], (*pj)[1]}));
    }
  }
  return {worst_residual < kResidualTol && worst_distance < kLineDistanceTol,
          fmt("max residual %.3g, max line distance %.3g px", worst_residual, worst_distance)};
}

Outcome mask_sparsity() {
  std::mt19937_64 rng(1002);
  const GridSize grid{32, 32};
  std::vector<std::size_t> counts;
  for (int rig = 0; rig < 10; ++rig) {
    const auto poses = random_rig(rng, 2, grid);
    const auto f = pair_fundamental(poses, 0, 1);
    for (int v = 0; v < grid.height; ++v) {
      for (int u = 0; u < grid.width; ++u) {
        const EpipolarMask m = epipolar_mask(f, {0, u, v}, 1, grid, 1.0);
        if (!m.is_fallback()) counts.push_back(m.popcount());
      }
    }
  }
  if (counts.empty()) return {false, "no band masks"};
  std::sort(counts.begin(), counts.end());
  const double area = grid.area();
  const double max_fill = counts.back() / area;
  const double median = counts[(counts.size() - 1) / 2] / area;
  return {max_fill < kMaxFill && median < kMedianFill,
          fmt("%.0f masks, max fill %.4f, median fill %.4f", static_cast<double>(counts.size()),
              max_fill, median)};
}

Outcome loss_target_equivalence() {
  std::mt19937_64 rng(1003);
  std::uniform_int_distribution<int> frames(2, 3), side(2, 4);
  int exact = 0;
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const LatentDims d{frames(rng), side(rng), side(rng)};
    const int l = d.tokens();
    std::normal_distribution<double> g(0.0, 1.5);
    std::vector<double> z(static_cast<std::size_t>(l) * l);
    for (double& x : z) x = g(rng);
    std::bernoulli_distribution bg(0.7);
    std::vector<int> background;
    for (int t = 0; t < l; ++t) {
      if (bg(rng)) background.push_back(t);
    }
    const EpipolarMaskVolume mask = mask_volume(random_rig(rng, d.frames, d.grid()), d.grid());
    const AttentionMap a = AttentionMap::from_logits(1, l, z);
    const auto values = a.values();
    const SuppressionMask omega = suppression_mask(values, mask, background);
    const double loss = epipolar_loss(values, omega).loss;
    const double l1 = l1_distance(values, target_attention_map(values, omega), l);
    exact += loss == l1;

    double brute = 0.0;
    for (int q : background) {
      std::vector<double> row(values.begin() + static_cast<std::ptrdiff_t>(q) * l,
                              values.begin() + static_cast<std::ptrdiff_t>(q + 1) * l);
      const double delta = oracle::percentile(row, 30);
      for (int k = 0; k < l; ++k) {
        if (!mask.get(q, k) && row[k] < delta) brute += row[k];
      }
    }
    worst = std::max(worst, std::abs(loss - brute));
  }
  return {exact == 100 && worst < kOracleTol,
          fmt("%.0f/100 bit-exact, max oracle gap %.3g", exact, worst)};
}

Outcome gradient_check() {
  const GradCheckResult r = run_gradient_check(GradCheckOptions{});
  return {r.passed && r.max_relative_error < kGradTol && r.instances.size() == 20,
          fmt("%.0f instances, max relative error %.3g", static_cast<double>(r.instances.size()),
              r.max_relative_error)};
}

Outcome percentile_contract() {
  std::mt19937_64 rng(1005);
  std::uniform_int_distribution<int> len(1, 200);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> coarse(0, 9);
  int mismatches = 0, nonempty_uniform = 0;
  for (int p : {10, 30, 50, 70, 90}) {
    for (int n = 0; n < 1000; ++n) {
      std::vector<double> row(static_cast<std::size_t>(len(rng)));
      // Every other row uses coarse values to exercise ties.
      for (double& x : row) x = n % 2 ? u(rng) : coarse(rng) / 10.0;
      mismatches += percentile_threshold(row, p) != oracle::percentile(row, p);
    }
    for (int l : {1, 7, 48, 1000}) {
      const std::vector<double> row(static_cast<std::size_t>(l), 1.0 / l);
      const double delta = percentile_threshold(row, p);
      nonempty_uniform += std::any_of(row.begin(), row.end(), [&](double a) { return a < delta; });
    }
  }
  return {mismatches == 0 && nonempty_uniform == 0,
          fmt("%.0f oracle mismatches over 5000 rows, %.0f non-empty uniform rows", mismatches,
              nonempty_uniform)};
}

Outcome adapter_parity() {
  std::mt19937_64 rng(1006);
  std::normal_distribution<double> g;
  auto tokens = [&](int b, int l, int c) {
    TokenTensor t(b, l, c);
    for (double& x : t.data) x = g(rng);
    return t;
  };
  bool neutral = true, rank_ok = true;
  double parity = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int c = 8 + trial, r = 1 + trial % 4;
    const ToyDitBlock block = ToyDitBlock::random(c, 2 * c, rng);
    const TokenTensor h = tokens(2, 6, c);
    const TokenTensor pose = tokens(2, 6, c);
    LoraAdapter a = LoraAdapter::init(c, r, rng, 1.0 + trial);

    const TokenTensor with = bml_forward(h, pose, block, a);
    TokenTensor base(2, 6, c);
    for (int b = 0; b < 2; ++b) {
      TokenMatrix x(6, c);
      for (int t = 0; t < 6; ++t) {
        for (int k = 0; k < c; ++k) x(t, k) = h.token(b, t)[k] + pose.token(b, t)[k];
      }
      const TokenMatrix y = block.forward(x);
      std::copy(y.data(), y.data() + y.size(), base.token(b, 0).data());
    }
    neutral = neutral && std::memcmp(with.data.data(), base.data.data(),
                                     with.data.size() * sizeof(double)) == 0;
    const LoraAdapter none{a.down, Eigen::MatrixXd::Zero(c, r), a.alpha};

    for (int i = 0; i < a.up.size(); ++i) a.up.data()[i] = g(rng);
    const TokenTensor lhs = bml_forward(h, pose, block, a);
    const TokenTensor rhs = bml_forward(h, pose, merge_adapter(block, a), none);
    for (std::size_t i = 0; i < lhs.data.size(); ++i) {
      parity = std::max(parity, std::abs(lhs.data[i] - rhs.data[i]));
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.delta_weight());
    const auto s = svd.singularValues();
    for (int i = r; i < s.size(); ++i) rank_ok = rank_ok && s[i] <= 1e-10 * s[0];
  }
  return {neutral && parity < kMergeTol && rank_ok,
          std::string("zero-init bit-identical: ") + (neutral ? "yes" : "no") +
              fmt(", merge gap %.3g", parity) + ", rank bound: " + (rank_ok ? "yes" : "no")};
}

Outcome objective_constants() {
  const double total = total_loss(1.0, 0.5, 2.0);
  const bool gate = vgg_gate(299, 1000) && !vgg_gate(300, 1000) && vgg_gate(29, 100) &&
                    !vgg_gate(30, 100);
  return {total == 1.11 && gate,
          fmt("total_loss(1, 0.5, 2) = %.17g, gate boundary ", total) + (gate ? "at 30%" : "off")};
}

Outcome demo_optimization() {
  const LatentDims d{4, 12, 9};
  const Trajectory traj = dolly_trajectory(13, d.grid());
  const LatentTrajectory latent = to_latent(traj);
  const EpipolarMaskVolume mask = mask_volume(latent.poses, d.grid(), 1.0);
  const std::vector<int> background = background_token_set(standing_person_mask(d), d, 8);
  DemoOptions options;
  options.steps = 200;
  options.lr = 0.05;
  options.seed = 7;
  const DemoResult r = run_demo_training(mask, background, options);
  const double ratio = r.final_mass / r.initial_mass;
  return {ratio <= kMassRatio && r.nonincreasing_fraction >= kNonincreasing,
          fmt("mass ratio %.5f (gate 0.5), non-increasing steps %.3f", ratio,
              r.nonincreasing_fraction)};
}

Outcome round_trips() {
  std::mt19937_64 rng(1009);
  std::normal_distribution<double> g;
  int ok = 0, total = 0;
  for (int n = 0; n < 10; ++n) {
    Trajectory t;
    t.image_width = 96;
    t.image_height = 64;
    for (int f = 0; f < 5; ++f) {
      CameraPose p;
      p.frame_index = f;
      p.intrinsics = {90 + g(rng), 90 + g(rng), 48 + g(rng), 32 + g(rng)};
      p.extrinsics.rotation = oracle::random_rotation(rng);
      p.extrinsics.translation = Vec3(g(rng), g(rng), g(rng));
      t.poses.push_back(p);
    }
    const std::string text = serialize_trajectory(t);
    ok += serialize_trajectory(parse_trajectory(text)) == text;

    const LatentDims d{2, 3 + n % 3, 4};
    const auto mask = encode_mask_volume(mask_volume(random_rig(rng, d.frames, d.grid()),
                                                     d.grid(), 0.5 + n * 0.25));
    ok += encode_mask_volume(decode_mask_volume(mask)) == mask;

    std::vector<double> z(static_cast<std::size_t>(2) * d.tokens() * d.tokens());
    for (double& x : z) x = 3 * g(rng);
    const auto attn = encode_attention(AttentionMap::from_logits(2, d.tokens(), z));
    ok += encode_attention(decode_attention(attn)) == attn;

    LoraAdapter a = LoraAdapter::init(6 + n, 1 + n % 3, rng, 0.5 + n);
    for (int i = 0; i < a.up.size(); ++i) a.up.data()[i] = g(rng);
    const auto lora = encode_adapter(a);
    ok += encode_adapter(decode_adapter(lora)) == lora;
    total += 4;
  }
  return {ok == total, fmt("%.0f/%.0f byte-identical", ok, total)};
}

}  // namespace

int main() {
  report(1, "epipolar geometry oracle", kBudget1, geometry_oracle);
  report(2, "mask sparsity at 32x32", kBudget2, mask_sparsity);
  report(3, "loss equals L1 distance to target", 0.0, loss_target_equivalence);
  report(4, "gradient check", kBudget4, gradient_check);
  report(5, "percentile contract", 0.0, percentile_contract);
  report(6, "adapter neutrality and merge parity", 0.0, adapter_parity);
  report(7, "objective constants", 0.0, objective_constants);
  report(8, "demo optimization", kBudget8, demo_optimization);
  report(9, "file format round trips", 0.0, round_trips);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
