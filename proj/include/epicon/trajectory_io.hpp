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

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "epicon/attention.hpp"
#include "epicon/geometry.hpp"
#include "epicon/types.hpp"

namespace epicon {

// Camera trajectory text format (LF line endings, space-separated fields,
// '#' starts a comment that runs to the end of the line, blank lines ignored):
//
//   TRAJ1 <w2c|c2w> <image_width> <image_height> <pixel|normalized>
//   <frame> fx fy cx cy r00 r01 r02 t0 r10 r11 r12 t1 r20 r21 r22 t2
//   ...
//
// The header is the first non-comment line. Pose lines hold the 3x4 matrix
// [R|T] row-major. "normalized" intrinsics are fractions of the image width
// (fx, cx) and height (fy, cy). Frame indices must strictly increase.
//
// Rotations drifting from orthonormal by at most 1e-4 are projected onto the
// nearest rotation; larger drift is rejected. Parsed poses are always
// world-to-camera in image pixels. Serialization writes that canonical form
// with shortest round-trip decimal numbers.

struct Trajectory {
  int image_width = 0;
  int image_height = 0;
  std::vector<CameraPose> poses;
};

/// Largest tolerated orthonormality drift before a rotation is rejected.
inline constexpr double kMaxRotationDrift = 1e-4;

/// Throws ParseError (with line number) on malformed text and NonRotation
/// when a rotation drifts by more than kMaxRotationDrift.
Trajectory parse_trajectory(std::string_view text);
std::string serialize_trajectory(const Trajectory& trajectory);

Trajectory load_trajectory(const std::filesystem::path& path);
void save_trajectory(const std::filesystem::path& path, const Trajectory& trajectory);

/// Divides fx, fy, cx, cy by `factor` (>= 1).
CameraIntrinsics rescale_intrinsics(const CameraIntrinsics& k, double factor);

/// Keeps list entries 0, factor, 2*factor, ... (latent frame f <-> source
/// frame factor*f). Throws InvalidArgument for an empty list or factor < 1.
std::vector<CameraPose> subsample_to_latent_frames(std::span<const CameraPose> poses,
                                                   int factor = kTemporalCompression);

struct LatentTrajectory {
  LatentDims dims;
  std::vector<CameraPose> poses;  // intrinsics in latent pixels
};

/// Subsamples frames and rescales intrinsics to the latent grid. Image dims
/// must be divisible by `spatial_factor` (DimensionMismatch otherwise).
LatentTrajectory to_latent(const Trajectory& trajectory,
                           int spatial_factor = kSpatialCompression,
                           int temporal_factor = kTemporalCompression);

}  // namespace epicon
