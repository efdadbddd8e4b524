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

#include <optional>

#include <Eigen/Core>

namespace epicon {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

/// Baselines shorter than this make the fundamental matrix vanish.
inline constexpr double kMinBaseline = 1e-8;

/// Pinhole intrinsics. Units are whatever pixel grid the pose is used on;
/// inside the constraint machinery that is the latent grid.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  Mat3 matrix() const;
  Mat3 inverse() const;
  /// Throws InvalidArgument unless fx > 0, fy > 0 and all fields are finite.
  void validate() const;
};

/// World-to-camera extrinsics: x_cam = rotation * x_world + translation.
///
/// This is the only convention used in the library. Trajectory files that
/// store camera-to-world poses are inverted on load.
struct CameraExtrinsics {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }
  /// Camera center in world coordinates, -R^T T.
  Vec3 center() const { return -rotation.transpose() * translation; }
  /// Throws NonRotation when R^T R deviates from I or det(R) from 1 by more
  /// than `tolerance`.
  void validate(double tolerance = 1e-9) const;
};

struct CameraPose {
  CameraIntrinsics intrinsics;
  CameraExtrinsics extrinsics;
  int frame_index = 0;

  /// Pixel coordinates of a world point, or nullopt when it is not in front
  /// of the camera.
  std::optional<Vec2> project(const Vec3& world) const;
};

struct RelativePose {
  Mat3 rotation;
  Vec3 translation;
};

/// Motion taking camera-`from` coordinates to camera-`to` coordinates:
/// x_to = rotation * x_from + translation.
RelativePose relative_pose(const CameraPose& from, const CameraPose& to);

/// Cross-product matrix: skew(v) * w == v.cross(w).
Mat3 skew(const Vec3& v);

/// Fundamental matrix F with x_j^T F x_i = 0 for corresponding homogeneous
/// pixels x_i (frame i) and x_j (frame j).
///
/// Stored at unit Frobenius norm, so tolerances on residuals are absolute.
/// Consumers must not rely on the overall sign.
class FundamentalMatrix {
 public:
  /// Normalizes `f`. Throws DegenerateMotion when `f` is (numerically) zero.
  static FundamentalMatrix from_matrix(const Mat3& f);

  const Mat3& matrix() const { return f_; }
  /// The reverse-direction matrix F_ji = F_ij^T.
  FundamentalMatrix transposed() const;

  /// x_j^T F x_i for pixel coordinates.
  double algebraic_residual(const Vec2& x_i, const Vec2& x_j) const;

 private:
  explicit FundamentalMatrix(const Mat3& f) : f_(f) {}
  Mat3 f_;
};

/// F = K_j^{-T} [T_rel]_x R_rel K_i^{-1}.
/// Throws DegenerateMotion when ||T_rel|| < kMinBaseline.
FundamentalMatrix fundamental_matrix(const CameraPose& pose_i,
                                     const CameraPose& pose_j);

}  // namespace epicon
