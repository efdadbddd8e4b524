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

#include "epicon/adapters.hpp"

#include <cmath>
#include <cstring>

#include "epicon/binary_io.hpp"
#include "epicon/errors.hpp"

namespace epicon {
namespace {

constexpr char kAdapterMagic[] = "LORA1";

Eigen::MatrixXd uniform_matrix(int rows, int cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
  }
  return m;
}

void check_square(const Eigen::MatrixXd& m, int c, const char* name) {
  if (m.rows() != c || m.cols() != c) {
    throw DimensionMismatch(std::string(name) + " must be " + std::to_string(c) + " x " +
                            std::to_string(c));
  }
}

Eigen::Map<const TokenMatrix> batch_view(const TokenTensor& t, int b) {
  return {t.token(b, 0).data(), t.tokens, t.channels};
}

void row_softmax(TokenMatrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    softmax_row(std::span<const double>(m.row(r).data(), static_cast<std::size_t>(m.cols())),
                std::span<double>(m.row(r).data(), static_cast<std::size_t>(m.cols())));
  }
}

void fnv_mix(std::uint64_t& h, const Eigen::MatrixXd& m) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
  for (std::size_t i = 0; i < static_cast<std::size_t>(m.size()) * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
}

}  // namespace

TokenMatrix LoraAdapter::apply(const TokenMatrix& x) const {
  return scale() * ((x * down.transpose()) * up.transpose());
}

void LoraAdapter::validate() const {
  const int c = channels();
  const int r = rank();
  if (r < 1 || r >= c) {
    throw InvalidArgument("adapter rank must satisfy 1 <= r < C, got r=" + std::to_string(r) +
                          " C=" + std::to_string(c));
  }
  if (up.rows() != c || up.cols() != r) {
    throw DimensionMismatch("up-projection must be C x r");
  }
  if (!std::isfinite(alpha) || !down.allFinite() || !up.allFinite()) {
    throw NonFiniteInput("adapter parameters contain NaN or Inf");
  }
}

LoraAdapter LoraAdapter::init(int channels, int rank, std::mt19937_64& rng,
                              std::optional<double> alpha) {
  LoraAdapter a;
  a.down = uniform_matrix(rank, channels, 1.0 / std::sqrt(static_cast<double>(channels)), rng);
  a.up = Eigen::MatrixXd::Zero(channels, rank);
  a.alpha = alpha.value_or(static_cast<double>(rank));
  a.validate();
  return a;
}

ToyDitBlock::ToyDitBlock(Weights weights) : weights_(std::move(weights)) {
  const int c = static_cast<int>(weights_.w0.rows());
  check_square(weights_.w0, c, "w0");
  check_square(weights_.wq, c, "wq");
  check_square(weights_.wk, c, "wk");
  check_square(weights_.wv, c, "wv");
  if (weights_.w1.cols() != c || weights_.w2.rows() != c ||
      weights_.w2.cols() != weights_.w1.rows()) {
    throw DimensionMismatch("feed-forward weights must be hidden x C and C x hidden");
  }
}

ToyDitBlock ToyDitBlock::random(int channels, int hidden, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(channels));
  const double hidden_bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  Weights w;
  w.w0 = uniform_matrix(channels, channels, bound, rng);
  w.wq = uniform_matrix(channels, channels, bound, rng);
  w.wk = uniform_matrix(channels, channels, bound, rng);
  w.wv = uniform_matrix(channels, channels, bound, rng);
  w.w1 = uniform_matrix(hidden, channels, bound, rng);
  w.w2 = uniform_matrix(channels, hidden, hidden_bound, rng);
  return ToyDitBlock(std::move(w));
}

TokenMatrix ToyDitBlock::linear_path(const TokenMatrix& x) const {
  return x * weights_.w0.transpose();
}

TokenMatrix ToyDitBlock::forward(const TokenMatrix& x) const {
  const double inv_sqrt_c = 1.0 / std::sqrt(static_cast<double>(channels()));
  const TokenMatrix q = x * weights_.wq.transpose();
  const TokenMatrix k = x * weights_.wk.transpose();
  const TokenMatrix v = x * weights_.wv.transpose();
  TokenMatrix scores = (q * k.transpose()) * inv_sqrt_c;
  row_softmax(scores);
  const TokenMatrix attended = scores * v;
  const TokenMatrix hidden = ((x + attended) * weights_.w1.transpose()).array().tanh().matrix();
  const TokenMatrix ffn = hidden * weights_.w2.transpose();
  return linear_path(x) + attended + ffn;
}

std::uint64_t ToyDitBlock::checksum() const {
  std::uint64_t h = 14695981039346656037ull;
  for (const auto* m : {&weights_.w0, &weights_.wq, &weights_.wk, &weights_.wv,
                        &weights_.w1, &weights_.w2}) {
    fnv_mix(h, *m);
  }
  return h;
}

TokenTensor bml_forward(const TokenTensor& h_in, const TokenTensor& h_pose,
                        const ToyDitBlock& block, const LoraAdapter& adapter) {
  if (!h_in.same_shape(h_pose)) {
    throw DimensionMismatch("h_in and h_pose shapes differ");
  }
  if (h_in.channels != block.channels() || adapter.channels() != block.channels()) {
    throw DimensionMismatch("token width, block width and adapter width must agree");
  }
  TokenTensor out(h_in.batch, h_in.tokens, h_in.channels);
  for (int b = 0; b < h_in.batch; ++b) {
    const TokenMatrix x = batch_view(h_in, b) + batch_view(h_pose, b);
    Eigen::Map<TokenMatrix> y(out.token(b, 0).data(), out.tokens, out.channels);
    y = block.forward(x) + adapter.apply(x);
  }
  return out;
}

TokenTensor bml_forward(const TokenTensor& h_in, const ToyDitBlock& block,
                        const LoraAdapter& adapter) {
  return bml_forward(h_in, TokenTensor(h_in.batch, h_in.tokens, h_in.channels), block,
                     adapter);
}

ToyDitBlock merge_adapter(const ToyDitBlock& block, const LoraAdapter& adapter) {
  if (adapter.channels() != block.channels()) {
    throw DimensionMismatch("adapter width differs from block width");
  }
  ToyDitBlock::Weights w = block.weights();
  w.w0 += adapter.delta_weight();
  return ToyDitBlock(std::move(w));
}

double fit_adapter_step(LoraAdapter& adapter, const ToyDitBlock& block,
                        const TokenTensor& h_in, const TokenTensor& h_pose,
                        const TokenTensor& target, double lr) {
  if (!h_in.same_shape(target)) throw DimensionMismatch("target shape differs from h_in");
  const TokenTensor out = bml_forward(h_in, h_pose, block, adapter);
  const double n = static_cast<double>(out.data.size());
  double loss = 0.0;
  Eigen::MatrixXd grad_up = Eigen::MatrixXd::Zero(adapter.up.rows(), adapter.up.cols());
  Eigen::MatrixXd grad_down = Eigen::MatrixXd::Zero(adapter.down.rows(), adapter.down.cols());
  for (int b = 0; b < h_in.batch; ++b) {
    const TokenMatrix x = batch_view(h_in, b) + batch_view(h_pose, b);
    const TokenMatrix residual = batch_view(out, b) - batch_view(target, b);
    loss += residual.squaredNorm();
    // dL/dY = 2 (Y - target) / n; Y_adapter = s * (x D^T) U^T.
    const TokenMatrix g = (2.0 / n) * residual;
    const TokenMatrix projected = x * adapter.down.transpose();  // L x r
    grad_up += adapter.scale() * g.transpose() * projected;
    grad_down += adapter.scale() * (g * adapter.up).transpose() * x;
  }
  adapter.up -= lr * grad_up;
  adapter.down -= lr * grad_down;
  return loss / n;
}

std::vector<std::uint8_t> encode_adapter(const LoraAdapter& adapter) {
  adapter.validate();
  ByteWriter w;
  w.magic(kAdapterMagic);
  w.u32(static_cast<std::uint32_t>(adapter.channels()));
  w.u32(static_cast<std::uint32_t>(adapter.rank()));
  w.f64(adapter.alpha);
  for (int r = 0; r < adapter.rank(); ++r) {
    for (int c = 0; c < adapter.channels(); ++c) w.f64(adapter.down(r, c));
  }
  for (int c = 0; c < adapter.channels(); ++c) {
    for (int r = 0; r < adapter.rank(); ++r) w.f64(adapter.up(c, r));
  }
  return w.release();
}

LoraAdapter decode_adapter(std::span<const std::uint8_t> bytes) {
  ByteReader reader(bytes);
  reader.expect_magic(kAdapterMagic);
  const std::uint32_t channels = reader.u32();
  const std::uint32_t rank = reader.u32();
  if (channels < 2 || rank < 1 || rank >= channels ||
      2.0 * channels * rank * 8.0 + 8.0 != static_cast<double>(reader.remaining())) {
    throw FormatError("adapter header C=" + std::to_string(channels) +
                      " r=" + std::to_string(rank) + " does not match payload");
  }
  LoraAdapter a;
  a.alpha = reader.f64();
  a.down.resize(rank, channels);
  a.up.resize(channels, rank);
  for (std::uint32_t r = 0; r < rank; ++r) {
    for (std::uint32_t c = 0; c < channels; ++c) a.down(r, c) = reader.f64();
  }
  for (std::uint32_t c = 0; c < channels; ++c) {
    for (std::uint32_t r = 0; r < rank; ++r) a.up(c, r) = reader.f64();
  }
  reader.expect_end();
  a.validate();
  return a;
}

void save_adapter(const std::filesystem::path& path, const LoraAdapter& adapter) {
  write_file_bytes(path, encode_adapter(adapter));
}

LoraAdapter load_adapter(const std::filesystem::path& path) {
  return decode_adapter(read_file_bytes(path));
}

}  // namespace epicon
