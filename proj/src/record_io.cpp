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

#include "bevharmonize/record_io.hpp"

#include <fstream>
#include <istream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "bevharmonize/error.hpp"

namespace bevh::record_io
{

namespace
{

[[noreturn]] void parse_fail(const Locus & at, const std::string & what)
{
  throw Error(ErrorCode::kParseError, at.str() + ": " + what);
}

bool is_blank(std::string_view line)
{
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

}  // namespace

std::string Locus::str() const { return source + ":" + std::to_string(line); }

RecordFile read_records(std::istream & in, std::string_view source, std::string_view expected_kind)
{
  RecordFile file;
  bool have_header = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    Locus at{std::string(source), line_no};
    json value;
    try {
      value = json::parse(line);
    } catch (const json::parse_error & e) {
      parse_fail(at, std::string("malformed record: ") + e.what());
    }
    if (!value.is_object()) parse_fail(at, "record is not an object");

    if (!have_header) {
      auto it = value.find("format");
      if (it == value.end() || !it->is_string() || it->get<std::string>() != kFormatTag) {
        parse_fail(at, "missing header record {\"format\": \"" + std::string(kFormatTag) + "\"}");
      }
      auto kind = value.find("kind");
      if (kind != value.end() && !expected_kind.empty() &&
          (!kind->is_string() || kind->get<std::string>() != expected_kind)) {
        parse_fail(at, "expected a '" + std::string(expected_kind) + "' file, found '" +
                         kind->dump() + "'");
      }
      file.header = std::move(value);
      have_header = true;
      continue;
    }
    file.records.push_back({std::move(at), std::move(value)});
  }
  if (!have_header) parse_fail({std::string(source), line_no}, "empty file, no header record");
  return file;
}

RecordFile read_records(const std::filesystem::path & path, std::string_view expected_kind)
{
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  return read_records(in, path.string(), expected_kind);
}

json make_header(std::string_view kind)
{
  return json{{"format", kFormatTag}, {"kind", kind}};
}

std::string serialize(const json & header, std::span<const json> records)
{
  std::string out = header.dump();
  out.push_back('\n');
  for (const json & r : records) {
    out += r.dump();
    out.push_back('\n');
  }
  return out;
}

void write_atomic(const std::filesystem::path & path, std::string_view contents)
{
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot create '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw Error(ErrorCode::kIoError, "write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw Error(ErrorCode::kIoError, "cannot rename onto '" + path.string() + "': " + ec.message());
  }
}

std::string read_text(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const json & require(const json & obj, std::string_view key, const Locus & at)
{
  auto it = obj.find(key);
  if (it == obj.end()) parse_fail(at, "missing field '" + std::string(key) + "'");
  return *it;
}

double get_number(const json & obj, std::string_view key, const Locus & at)
{
  const json & v = require(obj, key, at);
  if (!v.is_number()) parse_fail(at, "field '" + std::string(key) + "' is not a number");
  return v.get<double>();
}

std::string get_string(const json & obj, std::string_view key, const Locus & at)
{
  const json & v = require(obj, key, at);
  if (!v.is_string()) parse_fail(at, "field '" + std::string(key) + "' is not a string");
  return v.get<std::string>();
}

std::vector<double> get_numbers(
  const json & obj, std::string_view key, std::size_t expected, const Locus & at)
{
  const json & v = require(obj, key, at);
  if (!v.is_array() || v.size() != expected) {
    parse_fail(at, "field '" + std::string(key) + "' must be an array of " +
                     std::to_string(expected) + " numbers");
  }
  std::vector<double> out;
  out.reserve(expected);
  for (const json & e : v) {
    if (!e.is_number()) parse_fail(at, "field '" + std::string(key) + "' has a non-number");
    out.push_back(e.get<double>());
  }
  return out;
}

json to_json(const Vec3 & v) { return json::array({v.x(), v.y(), v.z()}); }

json to_json(const Vec2 & v) { return json::array({v.x(), v.y()}); }

json to_json(const Camera & cam, const std::optional<std::string> & image, bool with_image)
{
  const CameraIntrinsics & k = cam.intrinsics;
  const Mat3 & r = cam.extrinsics.rotation;
  json rot = json::array();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) rot.push_back(r(i, j));
  }
  json out{
    {"name", cam.name},
    {"fx", k.fx},
    {"fy", k.fy},
    {"cx", k.cx},
    {"cy", k.cy},
    {"width", k.width},
    {"height", k.height},
    {"rotation", std::move(rot)},
    {"translation", to_json(cam.extrinsics.translation)}};
  if (with_image) out["image"] = image ? json(*image) : json(nullptr);
  return out;
}

Camera camera_from_json(const json & obj, const Locus & at)
{
  if (!obj.is_object()) parse_fail(at, "camera entry is not an object");
  Camera cam;
  cam.name = get_string(obj, "name", at);
  cam.intrinsics = {get_number(obj, "fx", at),    get_number(obj, "fy", at),
                    get_number(obj, "cx", at),    get_number(obj, "cy", at),
                    get_number(obj, "width", at), get_number(obj, "height", at)};
  const auto rot = get_numbers(obj, "rotation", 9, at);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) cam.extrinsics.rotation(i, j) = rot[3 * i + j];
  }
  const auto t = get_numbers(obj, "translation", 3, at);
  cam.extrinsics.translation = Vec3(t[0], t[1], t[2]);
  return cam;
}

bool camera_has_image_field(const json & obj) { return obj.contains("image"); }

std::optional<std::string> camera_image_from_json(const json & obj, const Locus & at)
{
  auto it = obj.find("image");
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) parse_fail(at, "field 'image' must be a string or null");
  return it->get<std::string>();
}

RawBox box_from_json(const json & obj, const Locus & at)
{
  if (!obj.is_object()) parse_fail(at, "box entry is not an object");
  RawBox raw;
  const auto c = get_numbers(obj, "center", 3, at);
  const auto s = get_numbers(obj, "size", 3, at);
  raw.box.center = Vec3(c[0], c[1], c[2]);
  raw.box.size = Vec3(s[0], s[1], s[2]);
  raw.box.yaw = wrap_angle(get_number(obj, "yaw", at));
  if (auto it = obj.find("velocity"); it != obj.end() && !it->is_null()) {
    const auto v = get_numbers(obj, "velocity", 2, at);
    raw.box.velocity = Vec2(v[0], v[1]);
  }
  if (auto it = obj.find("score"); it != obj.end()) {
    raw.score = get_number(obj, "score", at);
  }
  raw.raw_category = get_string(obj, "category", at);
  try {
    validate(raw.box);
  } catch (const Error & e) {
    parse_fail(at, e.what());
  }
  return raw;
}

json to_json(const Box3D & box, std::optional<double> score)
{
  json out{
    {"center", to_json(box.center)},
    {"size", to_json(box.size)},
    {"yaw", box.yaw},
    {"category", category_name(box.category)}};
  if (box.velocity) out["velocity"] = to_json(*box.velocity);
  if (score) out["score"] = *score;
  return out;
}

}  // namespace bevh::record_io
