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

#include <Eigen/Dense>

#include "epicon/errors.hpp"
#include "epicon/geometry.hpp"
#include "epicon/scene.hpp"
#include "oracles.hpp"

using namespace epicon;

namespace {

CameraPose pose_at(const Mat3& r, const Vec3& t, CameraIntrinsics k = {}) {
  CameraPose p;
  p.intrinsics = k;
  p.extrinsics.rotation = r;
  p.extrinsics.translation = t;
  return p;
}

}  // namespace

TEST_CASE("relative pose of a pose with itself is identity") {
  std::mt19937_64 rng(1);
  const CameraPose p = pose_at(oracle::random_rotation(rng), Vec3(0.3, -1.0, 2.0));
  const RelativePose rel = relative_pose(p, p);
  CHECK((rel.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(rel.translation.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("relative pose of a pure translation") {
  const CameraPose a = pose_at(Mat3::Identity(), Vec3::Zero());
  const CameraPose b = pose_at(Mat3::Identity(), Vec3(1, 0, 0));
  const RelativePose rel = relative_pose(a, b);
  CHECK(rel.rotation == Mat3::Identity());
  CHECK(rel.translation == Vec3(1, 0, 0));
}

TEST_CASE("relative pose maps camera-i points onto camera-j points") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int rig = 0; rig < 10; ++rig) {
    const CameraPose a = pose_at(oracle::random_rotation(rng), Vec3(u(rng), u(rng), u(rng)));
    const CameraPose b = pose_at(oracle::random_rotation(rng), Vec3(u(rng), u(rng), u(rng)));
    const RelativePose rel = relative_pose(a, b);
    for (int k = 0; k < 100; ++k) {
      const oracle::V3 x{u(rng), u(rng), u(rng)};
      oracle::V3 xi = oracle::mul(oracle::to_m3(a.extrinsics.rotation), x);
      oracle::V3 xj = oracle::mul(oracle::to_m3(b.extrinsics.rotation), x);
      for (int c = 0; c < 3; ++c) {
        xi[c] += a.extrinsics.translation[c];
        xj[c] += b.extrinsics.translation[c];
      }
      const Vec3 mapped = rel.rotation * Vec3(xi[0], xi[1], xi[2]) + rel.translation;
      for (int c = 0; c < 3; ++c) CHECK(std::abs(mapped[c] - xj[c]) < 1e-12);
    }
  }
}

TEST_CASE("skew matrix examples and cross-product identity") {
  CHECK(skew(Vec3::Zero()) == Mat3::Zero());
  Mat3 expected;
  expected << 0, 0, 0, 0, 0, -1, 0, 1, 0;
  CHECK(skew(Vec3(1, 0, 0)) == expected);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int i = 0; i < 100; ++i) {
    const oracle::V3 v{n(rng), n(rng), n(rng)};
    const oracle::V3 w{n(rng), n(rng), n(rng)};
    const Mat3 s = skew(Vec3(v[0], v[1], v[2]));
    CHECK((s + s.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const Vec3 got = s * Vec3(w[0], w[1], w[2]);
    const oracle::V3 want = oracle::cross(v, w);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(got[c] - want[c]) < 1e-14);
  }
}

TEST_CASE("rectified stereo fundamental matrix is the translation skew") {
  const CameraPose a = pose_at(Mat3::Identity(), Vec3::Zero());
  const CameraPose b = pose_at(Mat3::Identity(), Vec3(1, 0, 0));
  const FundamentalMatrix f = fundamental_matrix(a, b);
  Mat3 expected;
  expected << 0, 0, 0, 0, 0, -1, 0, 1, 0;
  expected /= std::sqrt(2.0);
  CHECK((f.matrix() - expected).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(f.matrix().norm() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("zero baseline raises DegenerateMotion") {
  std::mt19937_64 rng(4);
  const CameraPose p = pose_at(oracle::random_rotation(rng), Vec3(1, 2, 3));
  CHECK_THROWS_AS(fundamental_matrix(p, p), DegenerateMotion);
  // Pure rotation about the camera center.
  const CameraPose q = pose_at(oracle::random_rotation(rng), Vec3::Zero());
  const CameraPose r = pose_at(oracle::random_rotation(rng), Vec3::Zero());
  CHECK_THROWS_AS(fundamental_matrix(q, r), DegenerateMotion);
}

TEST_CASE("epipolar residual and rank on random rigs") {
  std::mt19937_64 rng(5);
  const GridSize grid{24, 32};
  for (int rig = 0; rig < 20; ++rig) {
    const auto poses = random_rig(rng, 2, grid);
    const FundamentalMatrix f = fundamental_matrix(poses[0], poses[1]);
    const double det = f.matrix().determinant();
    CHECK(std::abs(det) < 1e-8);
    Eigen::JacobiSVD<Mat3> svd(f.matrix());
    CHECK(svd.singularValues()[2] < 1e-8 * svd.singularValues()[0]);

    const auto points = visible_points(rng, poses, grid, 1000);
    REQUIRE(points.size() == 1000);
    double worst = 0.0;
    for (const Vec3& x : points) {
      const auto pi = oracle::project(poses[0], {x[0], x[1], x[2]});
      const auto pj = oracle::project(poses[1], {x[0], x[1], x[2]});
      REQUIRE(pi);
      REQUIRE(pj);
      const Vec3 hi((*pi)[0], (*pi)[1], 1.0);
      const Vec3 hj((*pj)[0], (*pj)[1], 1.0);
      worst = std::max(worst, std::abs(hj.dot(f.matrix() * hi)) / (hi.norm() * hj.norm()));
    }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("intrinsics and extrinsics validation") {
  CameraIntrinsics k{100, 90, 8, 6};
  const Mat3 m = k.matrix();
  CHECK(m(2, 0) == 0.0);
  CHECK(m(2, 1) == 0.0);
  CHECK(m(2, 2) == 1.0);
  CHECK(m(1, 0) == 0.0);
  CHECK((k.inverse() * m - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS((CameraIntrinsics{0, 1, 0, 0}.validate()), InvalidArgument);

  CameraExtrinsics e;
  e.rotation = -Mat3::Identity();
  CHECK_THROWS(e.validate());
  e.rotation = Mat3::Identity() * 1.001;
  CHECK_THROWS(e.validate());
}

TEST_CASE("fundamental matrix transposes when the pair is swapped") {
  std::mt19937_64 rng(6);
  const auto poses = random_rig(rng, 2, {16, 16});
  const Mat3 fij = fundamental_matrix(poses[0], poses[1]).matrix();
  const Mat3 fji = fundamental_matrix(poses[1], poses[0]).matrix();
  // Equal up to sign once both are unit-norm.
  const double same = (fij.transpose() - fji).cwiseAbs().maxCoeff();
  const double flip = (fij.transpose() + fji).cwiseAbs().maxCoeff();
  CHECK(std::min(same, flip) < 1e-12);
}
