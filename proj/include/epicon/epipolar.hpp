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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "epicon/geometry.hpp"
#include "epicon/types.hpp"

namespace epicon {

/// Default half-width of the epipolar band, in latent pixels.
inline constexpr double kDefaultBandThreshold = 1.0;

struct PixelCoord {
  double u = 0.0;  // column
  double v = 0.0;  // row
};

/// Line a*u + b*v + c = 0 with a^2 + b^2 = 1.
///
/// The sign is canonical: the coefficient of largest magnitude is positive,
/// so lines from F and from any nonzero multiple of F compare equal.
struct EpipolarLine {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  /// Throws LineUndefined when a = b = 0.
  static EpipolarLine normalized(double a, double b, double c);
};

/// l = F * (u, v, 1)^T in the key frame, normalized.
/// Throws LineUndefined when the query maps to no finite line.
EpipolarLine epipolar_line(const FundamentalMatrix& f, PixelCoord p);

/// Euclidean distance from `q` to a normalized line.
double point_line_distance(const EpipolarLine& line, PixelCoord q);

/// Why a mask is what it is.
enum class MaskKind : std::uint8_t {
  kBand,           // rasterized epipolar band
  kDegenerate,     // same frame or zero baseline: all true
  kEmptyBand,      // band misses the key frame entirely: all true
  kUndefinedLine,  // query on the epipole (volume builder only): all true
};

struct MaskQuery {
  int frame = 0;
  int u = 0;
  int v = 0;
};

/// H x W boolean grid over the key frame for one query pixel.
class EpipolarMask {
 public:
  EpipolarMask(GridSize size, MaskQuery query, int key_frame, MaskKind kind,
               bool fill);

  GridSize size() const { return size_; }
  const MaskQuery& query() const { return query_; }
  int key_frame() const { return key_frame_; }
  MaskKind kind() const { return kind_; }
  bool is_fallback() const { return kind_ != MaskKind::kBand; }

  bool at(int u, int v) const { return grid_[index(u, v)] != 0; }
  void set(int u, int v, bool value) { grid_[index(u, v)] = value ? 1 : 0; }
  int popcount() const;
  /// Row-major (v, u) cells, one byte per cell.
  std::span<const std::uint8_t> cells() const { return grid_; }

 private:
  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * size_.width + u;
  }

  GridSize size_;
  MaskQuery query_;
  int key_frame_;
  MaskKind kind_;
  std::vector<std::uint8_t> grid_;
};

/// Rasterizes the band {(u', v') : distance <= threshold} for one query.
///
/// `f` is the fundamental matrix from the query frame to `key_frame`, or
/// nullopt when the pair is degenerate. Degenerate pairs and bands that miss
/// the grid fall back to an all-true mask (the constraint deactivates).
/// Throws InvalidArgument unless threshold > 0; propagates LineUndefined.
EpipolarMask epipolar_mask(const std::optional<FundamentalMatrix>& f,
                           const MaskQuery& query, int key_frame, GridSize size,
                           double threshold = kDefaultBandThreshold);

/// Fundamental matrix for an ordered pair of trajectory entries, or nullopt
/// when the pair is the same entry or the baseline is degenerate.
std::optional<FundamentalMatrix> pair_fundamental(std::span<const CameraPose> trajectory,
                                                  int query_frame, int key_frame);

/// Bit-packed boolean tensor of shape (F, H, W, F, H, W).
///
/// Equivalently an L x L bit matrix with L = F*H*W: row = query token,
/// column = key token under the LatentDims token order. Bits are stored
/// row-major, least-significant bit first within each byte.
class EpipolarMaskVolume {
 public:
  EpipolarMaskVolume(LatentDims dims, double threshold, bool fill = false);

  const LatentDims& dims() const { return dims_; }
  double threshold() const { return threshold_; }

  bool get(int query_token, int key_token) const {
    const std::size_t bit = bit_index(query_token, key_token);
    return (bits_[bit >> 3] >> (bit & 7)) & 1u;
  }
  void set(int query_token, int key_token, bool value);

  /// Copy of the (query, key_frame) slice as a mask.
  EpipolarMask slice(const MaskQuery& query, int key_frame) const;
  /// Number of true bits in the (query frame, key frame) block divided by its
  /// size.
  double pair_fill_fraction(int query_frame, int key_frame) const;

  std::span<const std::uint8_t> payload() const { return bits_; }
  std::size_t payload_bytes() const { return bits_.size(); }

  bool operator==(const EpipolarMaskVolume&) const = default;

 private:
  friend EpipolarMaskVolume decode_mask_volume(std::span<const std::uint8_t>);

  std::size_t bit_index(int q, int k) const {
    return static_cast<std::size_t>(q) * static_cast<std::size_t>(dims_.tokens()) +
           static_cast<std::size_t>(k);
  }

  LatentDims dims_;
  double threshold_;
  std::vector<std::uint8_t> bits_;
};

/// Mask volume for an ordered list of latent-frame poses.
///
/// Every ordered pair (i, j), i != j, is rasterized with epipolar_mask;
/// diagonal blocks and degenerate pairs are all true. Queries on the epipole
/// also fall back to all true. Throws InvalidArgument for fewer than 2 poses.
EpipolarMaskVolume mask_volume(std::span<const CameraPose> trajectory, GridSize size,
                               double threshold = kDefaultBandThreshold);

/// EPMV1 wire format: "EPMV1", F, H, W (u32 LE), threshold (f64 LE), payload.
std::vector<std::uint8_t> encode_mask_volume(const EpipolarMaskVolume& volume);
EpipolarMaskVolume decode_mask_volume(std::span<const std::uint8_t> bytes);
void save_mask_volume(const std::filesystem::path& path, const EpipolarMaskVolume& volume);
EpipolarMaskVolume load_mask_volume(const std::filesystem::path& path);

}  // namespace epicon
