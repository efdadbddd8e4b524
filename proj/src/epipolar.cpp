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

#include "epicon/epipolar.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "epicon/binary_io.hpp"
#include "epicon/errors.hpp"

namespace epicon {
namespace {

constexpr char kVolumeMagic[] = "EPMV1";

void check_threshold(double threshold) {
  if (!(threshold > 0.0) || !std::isfinite(threshold)) {
    throw InvalidArgument("band threshold must be positive and finite");
  }
}

// Fills `row` (one byte per key pixel) with the band test for one query.
// Returns the number of pixels inside the band.
int rasterize_band(const EpipolarLine& line, GridSize size, double threshold,
                   std::span<std::uint8_t> row) {
  int count = 0;
  for (int v = 0; v < size.height; ++v) {
    for (int u = 0; u < size.width; ++u) {
      const bool inside =
          point_line_distance(line, {static_cast<double>(u), static_cast<double>(v)}) <=
          threshold;
      row[static_cast<std::size_t>(v) * size.width + u] = inside ? 1 : 0;
      count += inside ? 1 : 0;
    }
  }
  return count;
}

}  // namespace

EpipolarLine EpipolarLine::normalized(double a, double b, double c) {
  const double finite_norm = std::hypot(a, b);
  const double full_norm = std::sqrt(a * a + b * b + c * c);
  if (!std::isfinite(full_norm)) throw NonFiniteInput("line coefficients not finite");
  if (!(finite_norm > 1e-12 * full_norm) || finite_norm == 0.0) {
    throw LineUndefined("line has no finite part (query on the epipole)");
  }
  EpipolarLine line{a / finite_norm, b / finite_norm, c / finite_norm};
  // Canonical sign: largest-magnitude coefficient positive.
  double largest = line.a;
  for (double x : {line.b, line.c}) {
    if (std::abs(x) > std::abs(largest)) largest = x;
  }
  if (largest < 0.0) {
    line.a = -line.a;
    line.b = -line.b;
    line.c = -line.c;
  }
  return line;
}

EpipolarLine epipolar_line(const FundamentalMatrix& f, PixelCoord p) {
  const Vec3 l = f.matrix() * Vec3(p.u, p.v, 1.0);
  return EpipolarLine::normalized(l.x(), l.y(), l.z());
}

double point_line_distance(const EpipolarLine& line, PixelCoord q) {
  return std::abs(line.a * q.u + line.b * q.v + line.c);
}

EpipolarMask::EpipolarMask(GridSize size, MaskQuery query, int key_frame,
                           MaskKind kind, bool fill)
    : size_(size),
      query_(query),
      key_frame_(key_frame),
      kind_(kind),
      grid_(static_cast<std::size_t>(size.area()), fill ? 1 : 0) {}

int EpipolarMask::popcount() const {
  return static_cast<int>(std::count(grid_.begin(), grid_.end(), std::uint8_t{1}));
}

EpipolarMask epipolar_mask(const std::optional<FundamentalMatrix>& f,
                           const MaskQuery& query, int key_frame, GridSize size,
                           double threshold) {
  check_threshold(threshold);
  if (!f) return EpipolarMask(size, query, key_frame, MaskKind::kDegenerate, true);

  const EpipolarLine line = epipolar_line(
      *f, {static_cast<double>(query.u), static_cast<double>(query.v)});
  EpipolarMask mask(size, query, key_frame, MaskKind::kBand, false);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(size.area()));
  if (rasterize_band(line, size, threshold, row) == 0) {
    return EpipolarMask(size, query, key_frame, MaskKind::kEmptyBand, true);
  }
  for (int v = 0; v < size.height; ++v) {
    for (int u = 0; u < size.width; ++u) {
      mask.set(u, v, row[static_cast<std::size_t>(v) * size.width + u] != 0);
    }
  }
  return mask;
}

std::optional<FundamentalMatrix> pair_fundamental(std::span<const CameraPose> trajectory,
                                                  int query_frame, int key_frame) {
  if (query_frame == key_frame) return std::nullopt;
  try {
    return fundamental_matrix(trajectory[query_frame], trajectory[key_frame]);
  } catch (const DegenerateMotion&) {
    return std::nullopt;
  }
}

EpipolarMaskVolume::EpipolarMaskVolume(LatentDims dims, double threshold, bool fill)
    : dims_(dims), threshold_(threshold) {
  if (dims.frames < 1 || dims.height < 1 || dims.width < 1) {
    throw InvalidArgument("mask volume dims must be positive, got " + dims.to_string());
  }
  const auto tokens = static_cast<std::size_t>(dims.tokens());
  const std::size_t total_bits = tokens * tokens;
  bits_.assign((total_bits + 7) / 8, fill ? 0xFF : 0x00);
  if (fill && total_bits % 8 != 0) {
    // Padding bits in the final byte stay zero.
    bits_.back() = static_cast<std::uint8_t>((1u << (total_bits % 8)) - 1u);
  }
}

void EpipolarMaskVolume::set(int query_token, int key_token, bool value) {
  const std::size_t bit = bit_index(query_token, key_token);
  const auto flag = static_cast<std::uint8_t>(1u << (bit & 7));
  if (value) {
    bits_[bit >> 3] |= flag;
  } else {
    bits_[bit >> 3] &= static_cast<std::uint8_t>(~flag);
  }
}

EpipolarMask EpipolarMaskVolume::slice(const MaskQuery& query, int key_frame) const {
  if (!dims_.contains({query.frame, query.u, query.v}) || key_frame < 0 ||
      key_frame >= dims_.frames) {
    throw DimensionMismatch("query or key frame outside volume " + dims_.to_string());
  }
  const int q = dims_.token(query.frame, query.v, query.u);
  EpipolarMask mask(dims_.grid(), query, key_frame, MaskKind::kBand, false);
  for (int v = 0; v < dims_.height; ++v) {
    for (int u = 0; u < dims_.width; ++u) {
      mask.set(u, v, get(q, dims_.token(key_frame, v, u)));
    }
  }
  return mask;
}

double EpipolarMaskVolume::pair_fill_fraction(int query_frame, int key_frame) const {
  const int area = dims_.frame_area();
  std::size_t count = 0;
  for (int q = query_frame * area; q < (query_frame + 1) * area; ++q) {
    for (int k = key_frame * area; k < (key_frame + 1) * area; ++k) {
      count += get(q, k) ? 1 : 0;
    }
  }
  return static_cast<double>(count) / (static_cast<double>(area) * area);
}

EpipolarMaskVolume mask_volume(std::span<const CameraPose> trajectory, GridSize size,
                               double threshold) {
  check_threshold(threshold);
  if (trajectory.size() < 2) {
    throw InvalidArgument("mask volume needs at least 2 poses");
  }
  const LatentDims dims{static_cast<int>(trajectory.size()), size.height, size.width};
  EpipolarMaskVolume volume(dims, threshold, false);
  const int area = dims.frame_area();
  std::vector<std::uint8_t> row(static_cast<std::size_t>(area));

  auto fill_block = [&](int q, int key_frame, bool value) {
    for (int k = key_frame * area; k < (key_frame + 1) * area; ++k) volume.set(q, k, value);
  };

  // One fundamental matrix per frame pair, one line per query pixel.
  for (int i = 0; i < dims.frames; ++i) {
    for (int j = 0; j < dims.frames; ++j) {
      const auto f = pair_fundamental(trajectory, i, j);
      for (int v = 0; v < dims.height; ++v) {
        for (int u = 0; u < dims.width; ++u) {
          const int q = dims.token(i, v, u);
          if (!f) {
            fill_block(q, j, true);
            continue;
          }
          bool empty = false;
          try {
            const EpipolarLine line =
                epipolar_line(*f, {static_cast<double>(u), static_cast<double>(v)});
            empty = rasterize_band(line, size, threshold, row) == 0;
          } catch (const LineUndefined&) {
            empty = true;
          }
          if (empty) {
            fill_block(q, j, true);
            continue;
          }
          for (int k = 0; k < area; ++k) {
            if (row[k]) volume.set(q, j * area + k, true);
          }
        }
      }
    }
  }
  return volume;
}

std::vector<std::uint8_t> encode_mask_volume(const EpipolarMaskVolume& volume) {
  ByteWriter w;
  w.magic(kVolumeMagic);
  w.u32(static_cast<std::uint32_t>(volume.dims().frames));
  w.u32(static_cast<std::uint32_t>(volume.dims().height));
  w.u32(static_cast<std::uint32_t>(volume.dims().width));
  w.f64(volume.threshold());
  w.bytes(volume.payload());
  return w.release();
}

EpipolarMaskVolume decode_mask_volume(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic(kVolumeMagic);
  LatentDims dims;
  dims.frames = static_cast<int>(r.u32());
  dims.height = static_cast<int>(r.u32());
  dims.width = static_cast<int>(r.u32());
  const double threshold = r.f64();
  if (dims.frames < 1 || dims.height < 1 || dims.width < 1 ||
      static_cast<double>(dims.frames) * dims.height * dims.width > 65536.0) {
    throw FormatError("implausible mask volume dims " + dims.to_string());
  }
  if (!(threshold > 0.0) || !std::isfinite(threshold)) {
    throw FormatError("mask volume threshold must be positive and finite");
  }
  EpipolarMaskVolume volume(dims, threshold, false);
  const auto payload = r.bytes(volume.payload_bytes());
  r.expect_end();
  std::copy(payload.begin(), payload.end(), volume.bits_.begin());
  const auto tokens = static_cast<std::size_t>(dims.tokens());
  const std::size_t tail = (tokens * tokens) % 8;
  if (tail != 0 && (volume.bits_.back() >> tail) != 0) {
    throw FormatError("nonzero padding bits in mask payload");
  }
  return volume;
}

void save_mask_volume(const std::filesystem::path& path, const EpipolarMaskVolume& volume) {
  write_file_bytes(path, encode_mask_volume(volume));
}

EpipolarMaskVolume load_mask_volume(const std::filesystem::path& path) {
  return decode_mask_volume(read_file_bytes(path));
}

}  // namespace epicon
