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

#include "epicon/attention.hpp"
#include "epicon/constraint.hpp"
#include "epicon/epipolar.hpp"
#include "epicon/objective.hpp"

namespace epicon {

/// Settings shared by every CLI command. Serialized as a flat JSON object
/// whose keys match the field names; missing keys keep their defaults.
struct CliConfig {
  double threshold = kDefaultBandThreshold;  // latent pixels, > 0
  double percentile = kDefaultPercentile;    // (0, 100)
  double lambda_vgg = LossWeights{}.vgg;     // >= 0
  double lambda_epipolar = LossWeights{}.epipolar;  // >= 0
  int spatial_factor = kSpatialCompression;  // >= 1
  int temporal_factor = kTemporalCompression;  // >= 1
  std::uint64_t seed = 0;
  DeltaScope delta_scope = DeltaScope::kPerRow;

  /// Throws InvalidArgument for out-of-range fields.
  void validate() const;

  std::string to_json() const;
  /// Throws ParseError on malformed JSON or unknown keys.
  static CliConfig from_json(const std::string& text);
  static CliConfig load(const std::filesystem::path& path);
};

}  // namespace epicon
