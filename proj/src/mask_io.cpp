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

#include "epicon/mask_io.hpp"

#include <charconv>

#include "epicon/binary_io.hpp"
#include "epicon/errors.hpp"

namespace epicon {
namespace {

std::string_view strip(std::string_view line) {
  if (const auto hash = line.find('#'); hash != std::string_view::npos) {
    line = line.substr(0, hash);
  }
  while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
  while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
  return line;
}

int header_int(std::string_view field, int line) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || value < 1) {
    throw ParseError(line, "bad mask dimension \"" + std::string(field) + "\"");
  }
  return value;
}

}  // namespace

MaskSequence parse_mask_sequence(std::string_view text) {
  MaskSequence mask;
  bool have_header = false;
  std::size_t rows_read = 0;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = strip(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;

    if (!have_header) {
      std::vector<std::string_view> fields;
      std::size_t i = 0;
      while (i < line.size()) {
        const std::size_t j = std::min(line.find(' ', i), line.size());
        if (j > i) fields.push_back(line.substr(i, j - i));
        i = j + 1;
      }
      if (fields.size() != 4 || fields[0] != "HMASK1") {
        throw ParseError(line_no, "expected header \"HMASK1 <frames> <height> <width>\"");
      }
      mask = MaskSequence(header_int(fields[1], line_no), header_int(fields[2], line_no),
                          header_int(fields[3], line_no), false);
      have_header = true;
      continue;
    }

    const std::size_t total_rows = static_cast<std::size_t>(mask.frames) * mask.height;
    if (rows_read >= total_rows) throw ParseError(line_no, "more mask rows than declared");
    if (line.size() != static_cast<std::size_t>(mask.width)) {
      throw ParseError(line_no, "mask row has " + std::to_string(line.size()) +
                                    " cells, expected " + std::to_string(mask.width));
    }
    const int f = static_cast<int>(rows_read / mask.height);
    const int y = static_cast<int>(rows_read % mask.height);
    for (int x = 0; x < mask.width; ++x) {
      if (line[x] != '0' && line[x] != '1') {
        throw ParseError(line_no, "mask cells must be '0' or '1'");
      }
      mask.set(f, y, x, line[x] == '1');
    }
    ++rows_read;
  }
  if (!have_header) throw ParseError(line_no, "missing HMASK1 header");
  if (rows_read != static_cast<std::size_t>(mask.frames) * mask.height) {
    throw ParseError(line_no, "mask has " + std::to_string(rows_read) + " rows, expected " +
                                  std::to_string(mask.frames * mask.height));
  }
  return mask;
}

std::string serialize_mask_sequence(const MaskSequence& mask) {
  std::string out = "HMASK1 " + std::to_string(mask.frames) + " " +
                    std::to_string(mask.height) + " " + std::to_string(mask.width) + "\n";
  for (int f = 0; f < mask.frames; ++f) {
    for (int y = 0; y < mask.height; ++y) {
      for (int x = 0; x < mask.width; ++x) out += mask.at(f, y, x) ? '1' : '0';
      out += '\n';
    }
  }
  return out;
}

MaskSequence load_mask_sequence(const std::filesystem::path& path) {
  return parse_mask_sequence(read_text_file(path));
}

std::vector<std::uint8_t> render_pgm(const EpipolarMask& mask, int upscale) {
  if (upscale < 1) throw InvalidArgument("upscale must be >= 1");
  const int w = mask.size().width * upscale;
  const int h = mask.size().height * upscale;
  const std::string header =
      "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out.push_back(mask.at(x / upscale, y / upscale) ? 255 : 0);
  }
  return out;
}

}  // namespace epicon
