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

#include "epicon/attention.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "epicon/binary_io.hpp"
#include "epicon/errors.hpp"

namespace epicon {
namespace {

constexpr char kAttentionMagic[] = "ATTN1";

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require_finite(std::span<const double> values, const char* what) {
  for (double x : values) {
    if (!std::isfinite(x)) throw NonFiniteInput(std::string(what) + " contains NaN or Inf");
  }
}

}  // namespace

VideoLatent::VideoLatent(int b, int f, int c, int h, int w)
    : batch(b), frames(f), channels(c), height(h), width(w),
      data(static_cast<std::size_t>(b) * f * c * h * w, 0.0) {
  if (b < 1 || f < 1 || c < 1 || h < 1 || w < 1) {
    throw InvalidArgument("video latent dims must all be >= 1");
  }
}

TokenTensor flatten_latent(const VideoLatent& latent) {
  const LatentDims dims = latent.dims();
  TokenTensor out(latent.batch, dims.tokens(), latent.channels);
  for (int b = 0; b < latent.batch; ++b) {
    for (int f = 0; f < latent.frames; ++f) {
      for (int y = 0; y < latent.height; ++y) {
        for (int x = 0; x < latent.width; ++x) {
          auto tok = out.token(b, dims.token(f, y, x));
          for (int c = 0; c < latent.channels; ++c) tok[c] = latent.at(b, f, c, y, x);
        }
      }
    }
  }
  return out;
}

VideoLatent unflatten_latent(const TokenTensor& tokens, const LatentDims& dims) {
  if (tokens.tokens != dims.tokens()) {
    throw DimensionMismatch("token count " + std::to_string(tokens.tokens) +
                            " does not match dims " + dims.to_string());
  }
  VideoLatent out(tokens.batch, dims.frames, tokens.channels, dims.height, dims.width);
  for (int b = 0; b < tokens.batch; ++b) {
    for (int t = 0; t < tokens.tokens; ++t) {
      const TokenPos p = dims.position(t);
      const auto tok = tokens.token(b, t);
      for (int c = 0; c < tokens.channels; ++c) out.at(b, p.frame, c, p.v, p.u) = tok[c];
    }
  }
  return out;
}

AttentionMap::AttentionMap(int batch, int tokens, std::vector<double> values)
    : batch_(batch), tokens_(tokens), values_(std::move(values)) {
  if (batch < 1 || tokens < 1) throw InvalidArgument("attention map dims must be >= 1");
  const std::size_t expected =
      static_cast<std::size_t>(batch) * static_cast<std::size_t>(tokens) * tokens;
  if (values_.size() != expected) {
    throw DimensionMismatch("attention payload has " + std::to_string(values_.size()) +
                            " values, expected " + std::to_string(expected));
  }
}

void softmax_row(std::span<const double> logits, std::span<double> out) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - peak);
    sum += out[k];
  }
  for (std::size_t k = 0; k < logits.size(); ++k) out[k] /= sum;
}

AttentionMap AttentionMap::from_logits(int batch, int tokens, std::span<const double> logits) {
  require_finite(logits, "logits");
  const std::size_t l = static_cast<std::size_t>(tokens);
  if (logits.size() != static_cast<std::size_t>(batch) * l * l) {
    throw DimensionMismatch("logit tensor size does not match (B, L, L)");
  }
  std::vector<double> values(logits.size());
  for (std::size_t r = 0; r < static_cast<std::size_t>(batch) * l; ++r) {
    softmax_row(logits.subspan(r * l, l), std::span<double>(values).subspan(r * l, l));
  }
  return AttentionMap(batch, tokens, std::move(values));
}

AttentionMap attention_map(const TokenTensor& tokens, const ProjectionWeights& proj,
                           double d) {
  if (!(d > 0.0)) throw InvalidArgument("attention scale d must be positive");
  require_finite(tokens.data, "tokens");
  const int c = tokens.channels;
  if (proj.q_proj.rows() != c || proj.q_proj.cols() != c || proj.k_proj.rows() != c ||
      proj.k_proj.cols() != c) {
    throw DimensionMismatch("projection weights must be C x C with C = " +
                            std::to_string(c));
  }
  if (!proj.q_proj.allFinite() || !proj.k_proj.allFinite()) {
    throw NonFiniteInput("projection weights contain NaN or Inf");
  }
  const int l = tokens.tokens;
  const double inv_sqrt_d = 1.0 / std::sqrt(d);
  std::vector<double> logits(static_cast<std::size_t>(tokens.batch) * l * l);
  for (int b = 0; b < tokens.batch; ++b) {
    const Eigen::Map<const RowMatrix> x(tokens.token(b, 0).data(), l, c);
    const RowMatrix q = x * proj.q_proj.transpose();
    const RowMatrix k = x * proj.k_proj.transpose();
    Eigen::Map<RowMatrix> out(logits.data() + static_cast<std::size_t>(b) * l * l, l, l);
    out = (q * k.transpose()) * inv_sqrt_d;
  }
  return AttentionMap::from_logits(tokens.batch, l, logits);
}

double percentile_threshold(std::span<const double> row, double percent) {
  if (row.empty()) throw EmptyRow("percentile of an empty row");
  if (!(percent > 0.0 && percent < 100.0)) {
    throw InvalidArgument("percentile must lie in (0, 100)");
  }
  const auto n = static_cast<double>(row.size());
  // p * n is exact for integral p, so the rank does not pick up rounding from
  // forming p / 100 first.
  auto rank = static_cast<std::size_t>(std::ceil(percent * n / 100.0));
  rank = std::clamp<std::size_t>(rank, 1, row.size());
  std::vector<double> sorted(row.begin(), row.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   sorted.end());
  return sorted[rank - 1];
}

std::vector<int> background_token_set(const MaskSequence& human, const LatentDims& dims,
                                      int spatial_factor) {
  if (spatial_factor < 1) throw InvalidArgument("spatial factor must be >= 1");
  if (human.frames != dims.frames || human.height != dims.height * spatial_factor ||
      human.width != dims.width * spatial_factor) {
    std::ostringstream ss;
    ss << "human mask " << human.frames << "x" << human.height << "x" << human.width
       << " does not cover latent " << dims.to_string() << " at factor " << spatial_factor;
    throw DimensionMismatch(ss.str());
  }
  const int field = spatial_factor * spatial_factor;
  std::vector<int> background;
  for (int f = 0; f < dims.frames; ++f) {
    for (int v = 0; v < dims.height; ++v) {
      for (int u = 0; u < dims.width; ++u) {
        int human_pixels = 0;
        for (int y = v * spatial_factor; y < (v + 1) * spatial_factor; ++y) {
          for (int x = u * spatial_factor; x < (u + 1) * spatial_factor; ++x) {
            human_pixels += human.at(f, y, x) ? 1 : 0;
          }
        }
        if (2 * human_pixels < field) background.push_back(dims.token(f, v, u));
      }
    }
  }
  return background;
}

std::vector<std::uint8_t> encode_attention(const AttentionMap& map) {
  ByteWriter w;
  w.magic(kAttentionMagic);
  w.u32(static_cast<std::uint32_t>(map.batch()));
  w.u32(static_cast<std::uint32_t>(map.tokens()));
  for (double x : map.values()) w.f64(x);
  return w.release();
}

AttentionMap decode_attention(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic(kAttentionMagic);
  const std::uint32_t batch = r.u32();
  const std::uint32_t tokens = r.u32();
  const double count = static_cast<double>(batch) * tokens * tokens;
  if (batch < 1 || tokens < 1 || count * 8.0 != static_cast<double>(r.remaining())) {
    throw FormatError("attention payload size does not match B=" + std::to_string(batch) +
                      " L=" + std::to_string(tokens));
  }
  std::vector<double> values(static_cast<std::size_t>(count));
  for (double& x : values) x = r.f64();
  r.expect_end();
  require_finite(values, "attention payload");
  AttentionMap map(static_cast<int>(batch), static_cast<int>(tokens), std::move(values));
  for (int b = 0; b < map.batch(); ++b) {
    for (int q = 0; q < map.tokens(); ++q) {
      double sum = 0.0;
      for (double a : map.row(b, q)) {
        if (a < 0.0) throw FormatError("negative attention entry");
        sum += a;
      }
      if (std::abs(sum - 1.0) > 1e-6) {
        throw FormatError("attention row " + std::to_string(q) + " sums to " +
                          std::to_string(sum));
      }
    }
  }
  return map;
}

void save_attention(const std::filesystem::path& path, const AttentionMap& map) {
  write_file_bytes(path, encode_attention(map));
}

AttentionMap load_attention(const std::filesystem::path& path) {
  return decode_attention(read_file_bytes(path));
}

}  // namespace epicon
