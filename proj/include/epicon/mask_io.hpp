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
#include <string>
#include <string_view>
#include <vector>

#include "epicon/epipolar.hpp"
#include "epicon/types.hpp"

namespace epicon {

// Per-frame boolean mask text format ("HMASK1"), used for human-body masks:
//
//   HMASK1 <frames> <height> <width>
//   <width characters of '0'/'1'>     (height lines per frame, frames in order)
//
// '#' comments and blank lines are ignored, LF line endings.

MaskSequence parse_mask_sequence(std::string_view text);
std::string serialize_mask_sequence(const MaskSequence& mask);
MaskSequence load_mask_sequence(const std::filesystem::path& path);

/// Binary portable graymap (P5, maxval 255) of a mask, true = 255, each cell
/// drawn as an `upscale` x `upscale` block.
std::vector<std::uint8_t> render_pgm(const EpipolarMask& mask, int upscale = 1);

}  // namespace epicon
