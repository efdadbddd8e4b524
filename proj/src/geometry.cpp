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

#include "epicon/geometry.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "epicon/errors.hpp"

namespace epicon {

Mat3 CameraIntrinsics::matrix() const {
  Mat3 k;
  k << fx, 0.0, cx,
       0.0, fy, cy,
       0.0, 0.0, 1.0;
  return k;
}

Mat3 CameraIntrinsics::inverse() const {
  // Closed form of the upper-triangular inverse.
  Mat3 k;
  k << 1.0 / fx, 0.0, -cx / fx,
       0.0, 1.0 / fy, -cy / fy,
       0.0, 0.0, 1.0;
  return k;
}

void CameraIntrinsics::validate() const {
  const bool finite = std::isfinite(fx) && std::isfinite(fy) &&
                      std::isfinite(cx) && std::isfinite(cy);
  if (!finite || !(fx > 0.0) || !(fy > 0.0)) {
    std::ostringstream ss;
    ss << "invalid intrinsics fx=" << fx << " fy=" << fy << " cx=" << cx
       << " cy=" << cy;
    throw InvalidArgument(ss.str());
  }
}

void CameraExtrinsics::validate(double tolerance) const {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw NonFiniteInput("extrinsics contain non-finite values");
  }
  const double drift =
      (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  const double det = rotation.determinant();
  if (drift > tolerance || std::abs(det - 1.0) > tolerance) {
    std::ostringstream ss;
    ss << "not a rotation: orthogonality drift " << drift << ", det " << det;
    throw NonRotation(ss.str());
  }
}

std::optional<Vec2> CameraPose::project(const Vec3& world) const {
  const Vec3 cam = extrinsics.to_camera(world);
  if (!(cam.z() > 0.0)) return std::nullopt;
  return Vec2(intrinsics.fx * cam.x() / cam.z() + intrinsics.cx,
              intrinsics.fy * cam.y() / cam.z() + intrinsics.cy);
}

RelativePose relative_pose(const CameraPose& from, const CameraPose& to) {
  const Mat3& r_i = from.extrinsics.rotation;
  const Mat3& r_j = to.extrinsics.rotation;
  RelativePose rel;
  rel.rotation = r_j * r_i.transpose();
  rel.translation = to.extrinsics.translation - rel.rotation * from.extrinsics.translation;
  return rel;
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

FundamentalMatrix FundamentalMatrix::from_matrix(const Mat3& f) {
  if (!f.allFinite()) throw NonFiniteInput("fundamental matrix is not finite");
  const double norm = f.norm();
  if (!(norm > 0.0)) throw DegenerateMotion("fundamental matrix is zero");
  return FundamentalMatrix(f / norm);
}

FundamentalMatrix FundamentalMatrix::transposed() const {
  return FundamentalMatrix(f_.transpose());
}

double FundamentalMatrix::algebraic_residual(const Vec2& x_i, const Vec2& x_j) const {
  return x_j.homogeneous().dot(f_ * x_i.homogeneous());
}

FundamentalMatrix fundamental_matrix(const CameraPose& pose_i,
                                     const CameraPose& pose_j) {
  const RelativePose rel = relative_pose(pose_i, pose_j);
  const double baseline = rel.translation.norm();
  if (baseline < kMinBaseline) {
    std::ostringstream ss;
    ss << "baseline " << baseline << " between frames " << pose_i.frame_index
       << " and " << pose_j.frame_index << " is below " << kMinBaseline;
    throw DegenerateMotion(ss.str());
  }
  const Mat3 essential = skew(rel.translation) * rel.rotation;
  const Mat3 f = pose_j.intrinsics.inverse().transpose() * essential *
                 pose_i.intrinsics.inverse();
  return FundamentalMatrix::from_matrix(f);
}

}  // namespace epicon
