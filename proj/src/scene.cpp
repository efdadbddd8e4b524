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

#include "epicon/scene.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

#include "epicon/errors.hpp"

namespace epicon {

Mat3 look_at_rotation(const Vec3& center, const Vec3& target, double roll) {
  const Vec3 z = (target - center).normalized();
  Vec3 down(0.0, 1.0, 0.0);
  if (std::abs(z.dot(down)) > 0.99) down = Vec3(0.0, 0.0, 1.0);
  const Vec3 x = down.cross(z).normalized();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  return Eigen::AngleAxisd(roll, Vec3::UnitZ()).toRotationMatrix() * r;
}

std::vector<CameraPose> random_rig(std::mt19937_64& rng, int frames, GridSize grid) {
  if (frames < 1) throw InvalidArgument("rig needs at least one camera");
  std::uniform_real_distribution<double> offset(-1.5, 1.5);
  std::uniform_real_distribution<double> depth(-0.5, 0.5);
  std::uniform_real_distribution<double> jitter(-0.15, 0.15);
  std::uniform_real_distribution<double> roll(-0.2, 0.2);

  const double extent = std::max(grid.width, grid.height);
  CameraIntrinsics k{1.2 * extent, 1.2 * extent, (grid.width - 1) / 2.0,
                     (grid.height - 1) / 2.0};

  std::vector<Vec3> centers;
  while (static_cast<int>(centers.size()) < frames) {
    const Vec3 c(offset(rng), offset(rng), -6.0 + depth(rng));
    const bool separated = std::all_of(centers.begin(), centers.end(), [&](const Vec3& o) {
      return (o - c).norm() >= 0.3;
    });
    if (separated) centers.push_back(c);
  }
  std::vector<CameraPose> rig;
  for (int f = 0; f < frames; ++f) {
    CameraPose pose;
    pose.intrinsics = k;
    pose.extrinsics.rotation =
        look_at_rotation(centers[f], Vec3(jitter(rng), jitter(rng), jitter(rng)), roll(rng));
    pose.extrinsics.translation = -pose.extrinsics.rotation * centers[f];
    pose.frame_index = f;
    rig.push_back(pose);
  }
  return rig;
}

std::vector<Vec3> visible_points(std::mt19937_64& rng, std::span<const CameraPose> rig,
                                 GridSize grid, int count) {
  std::uniform_real_distribution<double> coord(-1.5, 1.5);
  std::vector<Vec3> points;
  int attempts = 0;
  while (static_cast<int>(points.size()) < count) {
    if (++attempts > 1000 * count + 10000) {
      throw InvalidArgument("rig has too little overlap to place visible points");
    }
    const Vec3 x(coord(rng), coord(rng), coord(rng));
    const bool visible = std::all_of(rig.begin(), rig.end(), [&](const CameraPose& pose) {
      const auto p = pose.project(x);
      return p && p->x() >= -0.5 && p->x() <= grid.width - 0.5 && p->y() >= -0.5 &&
             p->y() <= grid.height - 0.5;
    });
    if (visible) points.push_back(x);
  }
  return points;
}

namespace {

CameraIntrinsics image_intrinsics(GridSize latent, int spatial_factor) {
  const double s = spatial_factor;
  const double f = 1.1 * std::max(latent.width, latent.height) * s;
  // Principal point on the latent lattice center after division by s.
  return {f, f, (latent.width - 1) / 2.0 * s, (latent.height - 1) / 2.0 * s};
}

}  // namespace

Trajectory dolly_trajectory(int source_frames, GridSize latent, int spatial_factor) {
  Trajectory traj;
  traj.image_width = latent.width * spatial_factor;
  traj.image_height = latent.height * spatial_factor;
  const CameraIntrinsics k = image_intrinsics(latent, spatial_factor);
  for (int f = 0; f < source_frames; ++f) {
    const double t = f;
    const Vec3 center(0.06 * t, 0.01 * t, -6.0 + 0.02 * t);
    CameraPose pose;
    pose.intrinsics = k;
    pose.extrinsics.rotation = look_at_rotation(center, Vec3(0.03 * t, 0.0, 0.0));
    pose.extrinsics.translation = -pose.extrinsics.rotation * center;
    pose.frame_index = f;
    traj.poses.push_back(pose);
  }
  return traj;
}

Trajectory static_trajectory(int source_frames, GridSize latent, int spatial_factor) {
  Trajectory traj;
  traj.image_width = latent.width * spatial_factor;
  traj.image_height = latent.height * spatial_factor;
  for (int f = 0; f < source_frames; ++f) {
    CameraPose pose;
    pose.intrinsics = image_intrinsics(latent, spatial_factor);
    pose.frame_index = f;
    traj.poses.push_back(pose);
  }
  return traj;
}

MaskSequence standing_person_mask(const LatentDims& dims, int spatial_factor) {
  const int h = dims.height * spatial_factor;
  const int w = dims.width * spatial_factor;
  MaskSequence mask(dims.frames, h, w, false);
  for (int f = 0; f < dims.frames; ++f) {
    for (int y = h / 4; y < h; ++y) {
      for (int x = w / 3; x < 2 * w / 3; ++x) mask.set(f, y, x, true);
    }
  }
  return mask;
}

}  // namespace epicon
