// Copyright 2026 The bevharmonize Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BEVHARMONIZE_RECORD_IO_HPP_
#define BEVHARMONIZE_RECORD_IO_HPP_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bevharmonize/geometry.hpp"

// Newline-delimited JSON records shared by every file the toolkit reads or
// writes. The first non-blank line is a header object carrying
// {"format": "bevharmonize/1", "kind": ...}.

namespace bevh::record_io
{

using json = nlohmann::json;

inline constexpr std::string_view kFormatTag = "bevharmonize/1";

/// Source locus for error messages.
struct Locus
{
  std::string source;
  std::size_t line = 0;

  std::string str() const;
};

struct Record
{
  Locus locus;
  json value;
};

struct RecordFile
{
  json header;
  std::vector<Record> records;
};

/// Throws kParseError on malformed JSON, a missing/foreign header, or a
/// header whose "kind" differs from expected_kind (when the header has one).
RecordFile read_records(std::istream & in, std::string_view source, std::string_view expected_kind);

/// Throws kIoError if the file cannot be opened.
RecordFile read_records(const std::filesystem::path & path, std::string_view expected_kind);

json make_header(std::string_view kind);

/// One compact JSON document per line, header first.
std::string serialize(const json & header, std::span<const json> records);

/// Writes to a sibling temp file then renames over the target, so readers
/// never observe a partial file. Throws kIoError.
void write_atomic(const std::filesystem::path & path, std::string_view contents);

std::string read_text(const std::filesystem::path & path);

// Field accessors; all throw kParseError naming the locus and field.
const json & require(const json & obj, std::string_view key, const Locus & at);
double get_number(const json & obj, std::string_view key, const Locus & at);
std::string get_string(const json & obj, std::string_view key, const Locus & at);
std::vector<double> get_numbers(
  const json & obj, std::string_view key, std::size_t expected, const Locus & at);

json to_json(const Vec3 & v);
json to_json(const Vec2 & v);
json to_json(const Camera & cam, const std::optional<std::string> & image, bool with_image);
Camera camera_from_json(const json & obj, const Locus & at);
std::optional<std::string> camera_image_from_json(const json & obj, const Locus & at);
bool camera_has_image_field(const json & obj);

/// Box with its category still in raw string form.
struct RawBox
{
  Box3D box;
  std::string raw_category;
  std::optional<double> score;
};

/// Yaw is wrapped into (-pi, pi]; size and finiteness are validated.
RawBox box_from_json(const json & obj, const Locus & at);
json to_json(const Box3D & box, std::optional<double> score = std::nullopt);

}  // namespace bevh::record_io

#endif  // BEVHARMONIZE_RECORD_IO_HPP_
