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

#include "epicon/binary_io.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <sstream>

#include "epicon/errors.hpp"
#include "epicon/types.hpp"

namespace epicon {

void ByteWriter::magic(std::string_view tag) {
  buffer_.insert(buffer_.end(), tag.begin(), tag.end());
}

void ByteWriter::u32(std::uint32_t value) {
  for (int shift = 0; shift < 32; shift += 8) {
    buffer_.push_back(static_cast<std::uint8_t>(value >> shift));
  }
}

void ByteWriter::f64(double value) {
  const auto raw = std::bit_cast<std::uint64_t>(value);
  for (int shift = 0; shift < 64; shift += 8) {
    buffer_.push_back(static_cast<std::uint8_t>(raw >> shift));
  }
}

void ByteWriter::bytes(std::span<const std::uint8_t> data) {
  buffer_.insert(buffer_.end(), data.begin(), data.end());
}

void ByteReader::require(std::size_t count) const {
  if (remaining() < count) {
    throw FormatError("truncated input: need " + std::to_string(count) +
                      " bytes at offset " + std::to_string(offset_) +
                      ", have " + std::to_string(remaining()));
  }
}

void ByteReader::expect_magic(std::string_view tag) {
  require(tag.size());
  for (std::size_t i = 0; i < tag.size(); ++i) {
    if (data_[offset_ + i] != static_cast<std::uint8_t>(tag[i])) {
      throw FormatError("bad magic, expected \"" + std::string(tag) + "\"");
    }
  }
  offset_ += tag.size();
}

std::uint32_t ByteReader::u32() {
  require(4);
  std::uint32_t value = 0;
  for (int i = 0; i < 4; ++i) {
    value |= static_cast<std::uint32_t>(data_[offset_ + i]) << (8 * i);
  }
  offset_ += 4;
  return value;
}

double ByteReader::f64() {
  require(8);
  std::uint64_t raw = 0;
  for (int i = 0; i < 8; ++i) {
    raw |= static_cast<std::uint64_t>(data_[offset_ + i]) << (8 * i);
  }
  offset_ += 8;
  return std::bit_cast<double>(raw);
}

std::span<const std::uint8_t> ByteReader::bytes(std::size_t count) {
  require(count);
  auto out = data_.subspan(offset_, count);
  offset_ += count;
  return out;
}

void ByteReader::expect_end() const {
  if (remaining() != 0) {
    throw FormatError(std::to_string(remaining()) + " trailing bytes");
  }
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

LatentDims parse_latent_dims(const std::string& text) {
  LatentDims dims;
  int* fields[] = {&dims.frames, &dims.height, &dims.width};
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t end = text.find('x', pos);
    const bool last = i == 2;
    if (last != (end == std::string::npos)) {
      throw ParseError(0, "dims must look like FxHxW, got \"" + text + "\"");
    }
    const std::string part = text.substr(pos, last ? std::string::npos : end - pos);
    std::size_t used = 0;
    int value = 0;
    try {
      value = std::stoi(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (part.empty() || used != part.size() || value < 1) {
      throw ParseError(0, "bad dimension \"" + part + "\" in \"" + text + "\"");
    }
    *fields[i] = value;
    pos = end + 1;
  }
  return dims;
}

}  // namespace epicon
