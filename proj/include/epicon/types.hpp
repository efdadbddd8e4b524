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

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace epicon {

/// Height x width of one latent frame.
struct GridSize {
  int height = 0;
  int width = 0;

  int area() const { return height * width; }
  bool operator==(const GridSize&) const = default;
};

/// Position of one latent token: frame, column u, row v.
struct TokenPos {
  int frame = 0;
  int u = 0;
  int v = 0;

  bool operator==(const TokenPos&) const = default;
};

/// (F, H, W) of a video latent, plus the token index map shared by every
/// module.
///
/// Tokens are ordered frame-major, then row (v), then column (u):
///   token = f * H * W + v * W + u
/// Pixel centers sit on the integer lattice, u is the column and v the row.
struct LatentDims {
  int frames = 0;
  int height = 0;
  int width = 0;

  int frame_area() const { return height * width; }
  int tokens() const { return frames * height * width; }
  GridSize grid() const { return {height, width}; }

  int token(int f, int v, int u) const { return (f * height + v) * width + u; }
  int token(const TokenPos& p) const { return token(p.frame, p.v, p.u); }

  TokenPos position(int token) const {
    const int area = frame_area();
    return {token / area, token % width, (token % area) / width};
  }

  bool contains(const TokenPos& p) const {
    return p.frame >= 0 && p.frame < frames && p.u >= 0 && p.u < width &&
           p.v >= 0 && p.v < height;
  }

  bool operator==(const LatentDims&) const = default;

  std::string to_string() const {
    return std::to_string(frames) + "x" + std::to_string(height) + "x" +
           std::to_string(width);
  }
};

/// Parses "FxHxW" (e.g. "4x12x9"). Throws ParseError on malformed input.
LatentDims parse_latent_dims(const std::string& text);

/// Per-frame boolean masks at some resolution (video or latent). Used for
/// human-body masks and hand masks.
struct MaskSequence {
  int frames = 0;
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bits;  // frames * height * width, 0 or 1

  MaskSequence() = default;
  MaskSequence(int f, int h, int w, bool value = false)
      : frames(f), height(h), width(w),
        bits(static_cast<std::size_t>(f) * h * w, value ? 1 : 0) {}

  std::size_t index(int f, int y, int x) const {
    return (static_cast<std::size_t>(f) * height + y) * width + x;
  }
  bool at(int f, int y, int x) const { return bits[index(f, y, x)] != 0; }
  void set(int f, int y, int x, bool value) {
    bits[index(f, y, x)] = value ? 1 : 0;
  }
};

}  // namespace epicon
