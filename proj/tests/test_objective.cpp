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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "epicon/errors.hpp"
#include "epicon/objective.hpp"

using namespace epicon;

namespace {

FrameSequence random_frames(std::mt19937_64& rng, int n, int c, int h, int w) {
  FrameSequence v(n, c, h, w);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& x : v.data) x = u(rng);
  return v;
}

// Feature maps fixed by hand: one channel per scale, strides 1, 2, 4, equal
// to the frame's first channel sampled at the top-left of each cell.
class SampledExtractor final : public FeatureExtractor {
 public:
  std::vector<FeatureMap> extract(const FrameSequence& v, int frame) const override {
    std::vector<FeatureMap> maps;
    for (int stride : {1, 2, 4}) {
      const int h = (v.height + stride - 1) / stride;
      const int w = (v.width + stride - 1) / stride;
      FeatureMap m{1, h, w, stride, std::vector<double>(static_cast<std::size_t>(h) * w)};
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) m.data[y * w + x] = v.at(frame, 0, y * stride, x * stride);
      }
      maps.push_back(m);
    }
    return maps;
  }
};

}  // namespace

TEST_CASE("latent loss is a mean squared error") {
  const std::vector<double> a{0.5, -1.0, 2.0, 3.0};
  CHECK(latent_loss(a, a) == 0.0);
  std::vector<double> b = a;
  for (double& x : b) x += 1.0;
  CHECK(latent_loss(b, a) == 1.0);

  std::mt19937_64 rng(51);
  std::normal_distribution<double> n;
  std::vector<double> p(37), t(37);
  for (double& x : p) x = n(rng);
  for (double& x : t) x = n(rng);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - t[i]) * (p[i] - t[i]);
  CHECK(latent_loss(p, t) == doctest::Approx(s / 37).epsilon(1e-15));
  CHECK_THROWS_AS(latent_loss(p, std::vector<double>(3)), DimensionMismatch);
}

TEST_CASE("one-step x0 inverts the forward construction") {
  const std::vector<double> z0{0.1, -0.4, 2.5};
  const std::vector<double> eps{1.0, 0.3, -0.7};
  const NoisySample clean = NoisySample::make(z0, eps, 1.0, 0);
  CHECK(one_step_x0(clean, std::vector<double>{9, 9, 9}) == clean.z_t);

  std::mt19937_64 rng(52);
  std::normal_distribution<double> n;
  std::uniform_int_distribution<int> len(10, 1000);
  for (int trial = 0; trial < 100; ++trial) {
    const auto schedule = linear_alpha_bar_schedule(len(rng));
    std::uniform_int_distribution<std::size_t> pick(0, schedule.size() - 1);
    const std::size_t t = pick(rng);
    std::vector<double> x(16), e(16), e_hat(16);
    for (double& v : x) v = n(rng);
    for (double& v : e) v = n(rng);
    for (double& v : e_hat) v = n(rng);
    const NoisySample s = NoisySample::make(x, e, schedule[t], static_cast<int>(t));
    const auto exact = one_step_x0(s, e);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(exact[i] - x[i]) < 1e-9);

    const auto approx = one_step_x0(s, e_hat);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      lhs += (approx[i] - x[i]) * (approx[i] - x[i]);
      rhs += (e[i] - e_hat[i]) * (e[i] - e_hat[i]);
    }
    const double ab = schedule[t];
    CHECK(std::sqrt(lhs) == doctest::Approx(std::sqrt((1 - ab) / ab) * std::sqrt(rhs)).epsilon(1e-9));
  }
}

TEST_CASE("degenerate schedule and schedule shape") {
  NoisySample s;
  s.z_t = {1.0};
  s.alpha_bar = 1e-13;
  CHECK_THROWS_AS(one_step_x0(s, std::vector<double>{0.0}), DegenerateSchedule);
  s.alpha_bar = 0.0;
  CHECK_THROWS_AS(one_step_x0(s, std::vector<double>{0.0}), DegenerateSchedule);

  const auto ab = linear_alpha_bar_schedule(1000);
  CHECK(ab.front() == doctest::Approx(1.0 - 1e-4));
  for (std::size_t i = 1; i < ab.size(); ++i) CHECK(ab[i] < ab[i - 1]);
  CHECK(ab.back() > 0.0);
}

TEST_CASE("perceptual loss basics") {
  std::mt19937_64 rng(53);
  const StubFeatureExtractor stub(7, 3);
  const FrameSequence v = random_frames(rng, 2, 3, 8, 8);
  CHECK(perceptual_loss(v, v, MaskSequence(2, 8, 8, false), stub) == 0.0);

  const FrameSequence w = random_frames(rng, 2, 3, 8, 8);
  const double off = perceptual_loss(w, v, MaskSequence(2, 8, 8, false), stub);
  const double on = perceptual_loss(w, v, MaskSequence(2, 8, 8, true), stub);
  CHECK(off > 0.0);
  CHECK(on / off == 2.0);

  CHECK_THROWS_AS(perceptual_loss(w, random_frames(rng, 1, 3, 8, 8), MaskSequence(2, 8, 8), stub),
                  DimensionMismatch);
  CHECK_THROWS_AS(perceptual_loss(w, v, MaskSequence(2, 4, 8), stub), DimensionMismatch);
  FrameSequence bright = v;
  bright.data[0] = 1.5;
  CHECK_THROWS_AS(perceptual_loss(bright, v, MaskSequence(2, 8, 8), stub), InvalidArgument);
}

TEST_CASE("perceptual loss on a 4x4 frame matches a hand trace") {
  FrameSequence v(1, 1, 4, 4), w(1, 1, 4, 4);
  // Error of 0.1 at (0,0), 0.2 at (1,1), 0.3 at (2,3), zero elsewhere.
  w.at(0, 0, 0, 0) = 0.1;
  w.at(0, 0, 1, 1) = 0.2;
  w.at(0, 0, 2, 3) = 0.3;
  MaskSequence hand(1, 4, 4, false);
  for (int y = 0; y < 2; ++y) {
    for (int x = 0; x < 2; ++x) hand.set(0, y, x, true);
  }
  // Stride 1: weighted sum 2*0.01 + 2*0.04 + 0.09 = 0.19, over 16 pixels.
  // Stride 2 samples (0,0),(0,2),(2,0),(2,2): only (0,0) differs, 0.01 over the
  //   top-left 2x2 cell, all hand pixels: 4 * 2 * 0.01 = 0.08.
  // Stride 4 samples (0,0) for every pixel: 0.01 * (4 * 2 + 12) = 0.2.
  const double expected = (0.19 / 16 + 0.08 / 16 + 0.2 / 16) / 3;
  CHECK(perceptual_loss(w, v, hand, SampledExtractor{}) ==
        doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("doubling the hand area on uniform error scales by the analytic factor") {
  FrameSequence v(1, 2, 6, 8), w(1, 2, 6, 8);
  for (double& x : w.data) x = 0.25;
  const double pixels = 48;
  MaskSequence small(1, 6, 8, false), large(1, 6, 8, false);
  for (int x = 0; x < 3; ++x) small.set(0, 0, x, true);
  for (int x = 0; x < 6; ++x) large.set(0, 0, x, true);
  const IdentityFeatureExtractor id;
  const double a = perceptual_loss(w, v, small, id);
  const double b = perceptual_loss(w, v, large, id);
  CHECK(a == doctest::Approx(2 * 0.0625 * (pixels + 3) / pixels).epsilon(1e-15));
  CHECK(b / a == doctest::Approx((pixels + 6) / (pixels + 3)).epsilon(1e-15));
}

TEST_CASE("stub extractor is deterministic, multi-scale and bounded") {
  std::mt19937_64 rng(54);
  const FrameSequence v = random_frames(rng, 1, 3, 9, 7);
  const StubFeatureExtractor a(11, 3), b(11, 3), c(12, 3);
  const auto fa = a.extract(v, 0);
  const auto fb = b.extract(v, 0);
  const auto fc = c.extract(v, 0);
  REQUIRE(fa.size() == 3);
  CHECK(fa[0].stride == 1);
  CHECK(fa[1].stride == 2);
  CHECK(fa[2].stride == 4);
  CHECK(fa[1].height == 5);
  CHECK(fa[2].width == 2);
  for (std::size_t s = 0; s < 3; ++s) {
    CHECK(fa[s].data == fb[s].data);
    CHECK(fa[s].data != fc[s].data);
    for (double x : fa[s].data) CHECK(std::abs(x) <= 1.0);
  }
  // Lipschitz: tanh is 1-Lipschitz, kernel weights bounded by 1/(9 C), so each
  // feature moves by at most the largest pixel change.
  FrameSequence u = v;
  u.at(0, 1, 4, 3) = std::min(1.0, u.at(0, 1, 4, 3) + 0.3);
  const double moved = std::abs(u.at(0, 1, 4, 3) - v.at(0, 1, 4, 3));
  const auto fu = a.extract(u, 0);
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t i = 0; i < fa[s].data.size(); ++i) {
      CHECK(std::abs(fu[s].data[i] - fa[s].data[i]) <= moved + 1e-15);
    }
  }
  CHECK_THROWS_AS(a.extract(random_frames(rng, 1, 2, 4, 4), 0), DimensionMismatch);
}

TEST_CASE("total loss and weights") {
  CHECK(total_loss(1.0, 0.5, 2.0) == 1.11);
  CHECK(total_loss(0.0, 0.0, 0.0) == 0.0);
  CHECK(total_loss(0.7, 3.0, 9.0, LossWeights{0.0, 0.0}) == 0.7);
  CHECK(LossWeights{}.vgg == 0.2);
  CHECK(LossWeights{}.epipolar == 0.005);
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    const double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    CHECK(total_loss(a + d, b, c) >= total_loss(a, b, c));
    CHECK(total_loss(a, b + d, c) >= total_loss(a, b, c));
    CHECK(total_loss(a, b, c + d) >= total_loss(a, b, c));
  }
}

TEST_CASE("perceptual gate covers the last 30 percent of denoising") {
  CHECK(vgg_gate(0, 1000));
  CHECK(vgg_gate(299, 1000));
  CHECK_FALSE(vgg_gate(300, 1000));
  CHECK_FALSE(vgg_gate(999, 1000));
  CHECK(vgg_gate(2, 10));
  CHECK_FALSE(vgg_gate(3, 10));
  CHECK_THROWS_AS(vgg_gate(1000, 1000), InvalidArgument);
  CHECK_THROWS_AS(vgg_gate(-1, 1000), InvalidArgument);
}
