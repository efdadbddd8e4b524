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

#include "epicon/config.hpp"

#include <cmath>

#include <json.hpp>

#include "epicon/binary_io.hpp"
#include "epicon/errors.hpp"

namespace epicon {

void CliConfig::validate() const {
  auto fail = [](const std::string& what) { throw InvalidArgument("config: " + what); };
  if (!(threshold > 0.0) || !std::isfinite(threshold)) fail("threshold must be > 0");
  if (!(percentile > 0.0 && percentile < 100.0)) fail("percentile must lie in (0, 100)");
  if (!(lambda_vgg >= 0.0) || !std::isfinite(lambda_vgg)) fail("lambda_vgg must be >= 0");
  if (!(lambda_epipolar >= 0.0) || !std::isfinite(lambda_epipolar)) {
    fail("lambda_epipolar must be >= 0");
  }
  if (spatial_factor < 1) fail("spatial_factor must be >= 1");
  if (temporal_factor < 1) fail("temporal_factor must be >= 1");
}

std::string CliConfig::to_json() const {
  nlohmann::ordered_json j;
  j["threshold"] = threshold;
  j["percentile"] = percentile;
  j["lambda_vgg"] = lambda_vgg;
  j["lambda_epipolar"] = lambda_epipolar;
  j["spatial_factor"] = spatial_factor;
  j["temporal_factor"] = temporal_factor;
  j["seed"] = seed;
  j["delta_scope"] = to_string(delta_scope);
  return j.dump(2) + "\n";
}

CliConfig CliConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(0, "config: top level must be an object");
  CliConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "threshold") {
        c.threshold = value.get<double>();
      } else if (key == "percentile") {
        c.percentile = value.get<double>();
      } else if (key == "lambda_vgg") {
        c.lambda_vgg = value.get<double>();
      } else if (key == "lambda_epipolar") {
        c.lambda_epipolar = value.get<double>();
      } else if (key == "spatial_factor") {
        c.spatial_factor = value.get<int>();
      } else if (key == "temporal_factor") {
        c.temporal_factor = value.get<int>();
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "delta_scope") {
        c.delta_scope = parse_delta_scope(value.get<std::string>());
      } else {
        throw ParseError(0, "config: unknown key \"" + key + "\"");
      }
    }
  } catch (const nlohmann::json::type_error& e) {
    throw ParseError(0, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

CliConfig CliConfig::load(const std::filesystem::path& path) {
  return from_json(read_text_file(path));
}

}  // namespace epicon
