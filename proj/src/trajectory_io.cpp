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

#include "epicon/trajectory_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "epicon/binary_io.hpp"
#include "epicon/errors.hpp"

namespace epicon {
namespace {

constexpr std::string_view kHeaderTag = "TRAJ1";
constexpr std::size_t kPoseFields = 17;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

double parse_double(std::string_view field, int line) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(value)) {
    throw ParseError(line, "bad number \"" + std::string(field) + "\"");
  }
  return value;
}

int parse_int(std::string_view field, int line) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(line, "bad integer \"" + std::string(field) + "\"");
  }
  return value;
}

// Identity when already orthonormal to 1e-12, nearest rotation (SVD) up to
// kMaxRotationDrift, NonRotation beyond that.
Mat3 checked_rotation(const Mat3& r, int line) {
  const double drift = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  const double det = r.determinant();
  if (!(det > 0.0) || drift > kMaxRotationDrift) {
    std::ostringstream ss;
    ss << "line " << line << ": not a rotation (orthogonality drift " << drift
       << ", det " << det << ")";
    throw NonRotation(ss.str());
  }
  if (drift <= 1e-12 && std::abs(det - 1.0) <= 1e-12) return r;
  const Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

void append_number(std::string& out, double value) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  out.append(buf.data(), ptr);
}

}  // namespace

Trajectory parse_trajectory(std::string_view text) {
  Trajectory traj;
  bool have_header = false;
  bool camera_to_world = false;
  bool normalized = false;
  int line_no = 0;
  std::size_t pos = 0;

  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    const auto fields = split_fields(line);
    if (fields.empty()) continue;

    if (!have_header) {
      if (fields.size() != 5 || fields[0] != kHeaderTag) {
        throw ParseError(line_no,
                         "expected header \"TRAJ1 <w2c|c2w> <width> <height> "
                         "<pixel|normalized>\"");
      }
      if (fields[1] == "c2w") {
        camera_to_world = true;
      } else if (fields[1] != "w2c") {
        throw ParseError(line_no, "convention must be w2c or c2w");
      }
      traj.image_width = parse_int(fields[2], line_no);
      traj.image_height = parse_int(fields[3], line_no);
      if (traj.image_width < 1 || traj.image_height < 1) {
        throw ParseError(line_no, "image dims must be positive");
      }
      if (fields[4] == "normalized") {
        normalized = true;
      } else if (fields[4] != "pixel") {
        throw ParseError(line_no, "intrinsics unit must be pixel or normalized");
      }
      have_header = true;
      continue;
    }

    if (fields.size() != kPoseFields) {
      throw ParseError(line_no, "expected " + std::to_string(kPoseFields) +
                                    " fields (frame, fx fy cx cy, 12 values of [R|T]), got " +
                                    std::to_string(fields.size()));
    }
    CameraPose pose;
    pose.frame_index = parse_int(fields[0], line_no);
    if (pose.frame_index < 0) throw ParseError(line_no, "negative frame index");
    if (!traj.poses.empty() && pose.frame_index <= traj.poses.back().frame_index) {
      throw ParseError(line_no, "frame indices must strictly increase");
    }
    double k[4];
    for (int i = 0; i < 4; ++i) k[i] = parse_double(fields[1 + i], line_no);
    if (normalized) {
      k[0] *= traj.image_width;
      k[1] *= traj.image_height;
      k[2] *= traj.image_width;
      k[3] *= traj.image_height;
    }
    pose.intrinsics = {k[0], k[1], k[2], k[3]};
    if (!(k[0] > 0.0) || !(k[1] > 0.0)) {
      throw ParseError(line_no, "focal lengths must be positive");
    }
    Mat3 r;
    Vec3 t;
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) r(row, col) = parse_double(fields[5 + row * 4 + col], line_no);
      t(row) = parse_double(fields[5 + row * 4 + 3], line_no);
    }
    r = checked_rotation(r, line_no);
    if (camera_to_world) {
      pose.extrinsics.rotation = r.transpose();
      pose.extrinsics.translation = -(r.transpose() * t);
    } else {
      pose.extrinsics.rotation = r;
      pose.extrinsics.translation = t;
    }
    traj.poses.push_back(pose);
  }
  if (!have_header) throw ParseError(line_no, "missing TRAJ1 header");
  return traj;
}

std::string serialize_trajectory(const Trajectory& trajectory) {
  std::string out;
  out += kHeaderTag;
  out += " w2c " + std::to_string(trajectory.image_width) + " " +
         std::to_string(trajectory.image_height) + " pixel\n";
  for (const CameraPose& pose : trajectory.poses) {
    out += std::to_string(pose.frame_index);
    const CameraIntrinsics& k = pose.intrinsics;
    for (double x : {k.fx, k.fy, k.cx, k.cy}) {
      out += ' ';
      append_number(out, x);
    }
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) {
        out += ' ';
        append_number(out, pose.extrinsics.rotation(row, col));
      }
      out += ' ';
      append_number(out, pose.extrinsics.translation(row));
    }
    out += '\n';
  }
  return out;
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  return parse_trajectory(read_text_file(path));
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& trajectory) {
  write_text_file(path, serialize_trajectory(trajectory));
}

CameraIntrinsics rescale_intrinsics(const CameraIntrinsics& k, double factor) {
  if (!(factor >= 1.0)) throw InvalidArgument("spatial factor must be >= 1");
  return {k.fx / factor, k.fy / factor, k.cx / factor, k.cy / factor};
}

std::vector<CameraPose> subsample_to_latent_frames(std::span<const CameraPose> poses,
                                                   int factor) {
  if (poses.empty()) throw InvalidArgument("cannot subsample an empty trajectory");
  if (factor < 1) throw InvalidArgument("temporal factor must be >= 1");
  std::vector<CameraPose> out;
  for (std::size_t i = 0; i < poses.size(); i += static_cast<std::size_t>(factor)) {
    out.push_back(poses[i]);
  }
  return out;
}

LatentTrajectory to_latent(const Trajectory& trajectory, int spatial_factor,
                           int temporal_factor) {
  if (spatial_factor < 1) throw InvalidArgument("spatial factor must be >= 1");
  if (trajectory.image_width % spatial_factor != 0 ||
      trajectory.image_height % spatial_factor != 0) {
    throw DimensionMismatch("image " + std::to_string(trajectory.image_width) + "x" +
                            std::to_string(trajectory.image_height) +
                            " is not divisible by spatial factor " +
                            std::to_string(spatial_factor));
  }
  LatentTrajectory out;
  out.poses = subsample_to_latent_frames(trajectory.poses, temporal_factor);
  for (CameraPose& pose : out.poses) {
    pose.intrinsics = rescale_intrinsics(pose.intrinsics, spatial_factor);
  }
  out.dims = {static_cast<int>(out.poses.size()), trajectory.image_height / spatial_factor,
              trajectory.image_width / spatial_factor};
  return out;
}

}  // namespace epicon
