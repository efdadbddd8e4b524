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

#include <random>
#include <span>
#include <vector>

#include "epicon/geometry.hpp"
#include "epicon/trajectory_io.hpp"
#include "epicon/types.hpp"

// Synthetic camera rigs and scenes for tests, the gradient check and the demo.

namespace epicon {

/// World-to-camera rotation of a camera at `center` looking at `target`
/// (x right, y down, z forward), rolled by `roll` radians about its axis.
Mat3 look_at_rotation(const Vec3& center, const Vec3& target, double roll = 0.0);

/// `frames` cameras around the origin, each looking near it from distance
/// ~6 with random offsets and roll; pairwise baselines >= 0.3. Intrinsics
/// are in pixels of `grid`, principal point at the grid center.
std::vector<CameraPose> random_rig(std::mt19937_64& rng, int frames, GridSize grid);

/// `count` random points near the origin that project inside `grid` in every
/// pose of the rig.
std::vector<Vec3> visible_points(std::mt19937_64& rng, std::span<const CameraPose> rig,
                                 GridSize grid, int count);

/// Sideways-dollying camera recorded at video rate: `source_frames` poses in
/// image pixels for a latent grid of `latent` at `spatial_factor`.
Trajectory dolly_trajectory(int source_frames, GridSize latent,
                            int spatial_factor = kSpatialCompression);

/// Static camera (all poses identical).
Trajectory static_trajectory(int source_frames, GridSize latent,
                             int spatial_factor = kSpatialCompression);

/// Video-resolution human mask with an upright box covering the middle third
/// of the columns and the lower three quarters of the rows in every frame.
MaskSequence standing_person_mask(const LatentDims& dims,
                                  int spatial_factor = kSpatialCompression);

}  // namespace epicon
