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

#include "bevharmonize/dataset_io.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "bevharmonize/error.hpp"
#include "bevharmonize/record_io.hpp"

namespace bevh
{

using nlohmann::json;

void validate(const DatasetManifest & manifest)
{
  if (manifest.canonical_camera_count < 1) {
    throw Error(ErrorCode::kInvalidManifest, "canonical_camera_count must be >= 1");
  }
  const bool merged = manifest.dataset_id == kMergedDatasetId;
  std::set<std::string_view> ids;
  for (const Sample & s : manifest.samples) {
    if (!merged && s.dataset_id != manifest.dataset_id) {
      throw Error(
        ErrorCode::kInvalidManifest, "sample '" + s.sample_id + "' belongs to dataset '" +
                                       s.dataset_id + "', manifest is '" + manifest.dataset_id +
                                       "'");
    }
    if (!ids.insert(s.sample_id).second) {
      throw Error(ErrorCode::kInvalidManifest, "duplicate sample_id '" + s.sample_id + "'");
    }
    if (s.image_refs && s.image_refs->size() != s.rig.size()) {
      throw Error(
        ErrorCode::kInvalidManifest,
        "sample '" + s.sample_id + "' has image_refs of a different length than its rig");
    }
  }
}

// ---------------------------------------------------------------------------
// CategoryMap

std::optional<HarmonizedLabel> harmonized_label_from_name(std::string_view name)
{
  if (name == "vehicle") return HarmonizedLabel::kVehicle;
  if (name == "two-wheeler") return HarmonizedLabel::kTwoWheeler;
  if (name == "pedestrian") return HarmonizedLabel::kPedestrian;
  if (name == "ignore") return HarmonizedLabel::kIgnore;
  return std::nullopt;
}

std::string_view harmonized_label_name(HarmonizedLabel label)
{
  switch (label) {
    case HarmonizedLabel::kVehicle:
      return "vehicle";
    case HarmonizedLabel::kTwoWheeler:
      return "two-wheeler";
    case HarmonizedLabel::kPedestrian:
      return "pedestrian";
    case HarmonizedLabel::kIgnore:
      return "ignore";
  }
  return "ignore";
}

CategoryMap CategoryMap::builtin()
{
  using L = HarmonizedLabel;
  CategoryMap m;
  auto add = [&m](std::string_view ds, std::initializer_list<std::string_view> raws, L label) {
    for (auto raw : raws) m.set(std::string(ds), std::string(raw), label);
  };

  add("nuscenes",
      {"car", "truck", "bus", "trailer", "construction_vehicle", "vehicle.car", "vehicle.truck",
       "vehicle.bus.bendy", "vehicle.bus.rigid", "vehicle.trailer", "vehicle.construction",
       "vehicle.emergency.ambulance", "vehicle.emergency.police"},
      L::kVehicle);
  add("nuscenes", {"bicycle", "motorcycle", "vehicle.bicycle", "vehicle.motorcycle"},
      L::kTwoWheeler);
  add("nuscenes",
      {"pedestrian", "human.pedestrian.adult", "human.pedestrian.child",
       "human.pedestrian.construction_worker", "human.pedestrian.police_officer",
       "human.pedestrian.wheelchair", "human.pedestrian.stroller",
       "human.pedestrian.personal_mobility"},
      L::kPedestrian);
  add("nuscenes",
      {"barrier", "traffic_cone", "movable_object.barrier", "movable_object.trafficcone",
       "movable_object.pushable_pullable", "movable_object.debris", "static_object.bicycle_rack",
       "animal"},
      L::kIgnore);

  add("waymo", {"TYPE_VEHICLE"}, L::kVehicle);
  add("waymo", {"TYPE_CYCLIST"}, L::kTwoWheeler);
  add("waymo", {"TYPE_PEDESTRIAN"}, L::kPedestrian);
  add("waymo", {"TYPE_SIGN", "TYPE_UNKNOWN"}, L::kIgnore);

  add("lyft", {"car", "truck", "bus", "other_vehicle", "emergency_vehicle"}, L::kVehicle);
  add("lyft", {"bicycle", "motorcycle"}, L::kTwoWheeler);
  add("lyft", {"pedestrian"}, L::kPedestrian);
  add("lyft", {"animal"}, L::kIgnore);

  add("deepaccident", {"car", "truck", "van", "bus"}, L::kVehicle);
  add("deepaccident", {"motorcycle", "cyclist", "bicycle"}, L::kTwoWheeler);
  add("deepaccident", {"pedestrian"}, L::kPedestrian);
  return m;
}

CategoryMap CategoryMap::from_json(const json & doc, std::string_view source)
{
  const record_io::Locus at{std::string(source), 1};
  if (!doc.is_object()) {
    throw Error(ErrorCode::kParseError, at.str() + ": category map must be an object");
  }
  CategoryMap m;
  for (const auto & [dataset, labels] : doc.items()) {
    if (!labels.is_object()) {
      throw Error(
        ErrorCode::kParseError, at.str() + ": entry for dataset '" + dataset +
                                  "' must map raw labels to harmonized names");
    }
    for (const auto & [raw, target] : labels.items()) {
      auto label = target.is_string() ? harmonized_label_from_name(target.get<std::string>())
                                      : std::nullopt;
      if (!label) {
        throw Error(
          ErrorCode::kParseError, at.str() + ": '" + dataset + "/" + raw +
                                    "' maps to unknown target " + target.dump());
      }
      m.set(dataset, raw, *label);
    }
  }
  return m;
}

CategoryMap CategoryMap::load(const std::filesystem::path & path)
{
  const std::string text = record_io::read_text(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error & e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
  return from_json(doc, path.string());
}

void CategoryMap::set(std::string dataset_id, std::string raw_label, HarmonizedLabel label)
{
  table_[std::move(dataset_id)][std::move(raw_label)] = label;
}

void CategoryMap::merge_from(const CategoryMap & other)
{
  for (const auto & [ds, labels] : other.table_) {
    for (const auto & [raw, label] : labels) table_[ds][raw] = label;
  }
}

std::optional<HarmonizedLabel> CategoryMap::lookup(
  std::string_view dataset_id, std::string_view raw) const
{
  for (std::string_view ds : {dataset_id, std::string_view("*")}) {
    if (auto it = table_.find(ds); it != table_.end()) {
      if (auto jt = it->second.find(raw); jt != it->second.end()) return jt->second;
    }
  }
  if (auto c = category_from_name(raw)) return static_cast<HarmonizedLabel>(*c);
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Manifest I/O

namespace
{

Category to_category(HarmonizedLabel label)
{
  return static_cast<Category>(static_cast<int>(label));
}

Sample sample_from_record(
  const record_io::Record & rec, std::size_t index, const std::string & default_dataset,
  const CategoryMap & cmap)
{
  using namespace record_io;
  const json & v = rec.value;
  const Locus & at = rec.locus;

  Sample s;
  s.sample_id = get_string(v, "sample_id", at);
  s.dataset_id = v.contains("dataset_id") ? get_string(v, "dataset_id", at) : default_dataset;

  const json & cams = require(v, "cameras", at);
  if (!cams.is_array()) {
    throw Error(ErrorCode::kParseError, at.str() + ": field 'cameras' must be an array");
  }
  std::vector<Camera> cameras;
  std::vector<std::optional<std::string>> images;
  bool any_image_field = false;
  for (const json & c : cams) {
    cameras.push_back(camera_from_json(c, at));
    any_image_field = any_image_field || camera_has_image_field(c);
    images.push_back(camera_image_from_json(c, at));
  }
  try {
    s.rig = CameraRig(std::move(cameras));
  } catch (const Error & e) {
    throw Error(e.code(), at.str() + ": sample '" + s.sample_id + "': " + e.what());
  }
  if (any_image_field) s.image_refs = std::move(images);

  const json & boxes = require(v, "boxes", at);
  if (!boxes.is_array()) {
    throw Error(ErrorCode::kParseError, at.str() + ": field 'boxes' must be an array");
  }
  for (const json & b : boxes) {
    RawBox raw = box_from_json(b, at);
    auto label = cmap.lookup(s.dataset_id, raw.raw_category);
    if (!label) {
      throw Error(
        ErrorCode::kUnknownCategory, at.str() + ": record " + std::to_string(index) +
                                       ": label '" + raw.raw_category +
                                       "' has no mapping for dataset '" + s.dataset_id + "'");
    }
    if (*label == HarmonizedLabel::kIgnore) continue;
    raw.box.category = to_category(*label);
    s.boxes.push_back(std::move(raw.box));
  }
  return s;
}

}  // namespace

DatasetManifest parse_manifest(std::istream & in, std::string_view source, const CategoryMap & cmap)
{
  using namespace record_io;
  RecordFile file = read_records(in, source, "manifest");
  const Locus header_at{std::string(source), 1};

  DatasetManifest m;
  std::string header_dataset;
  if (file.header.contains("dataset_id")) {
    header_dataset = get_string(file.header, "dataset_id", header_at);
  }
  m.samples.reserve(file.records.size());
  for (std::size_t i = 0; i < file.records.size(); ++i) {
    m.samples.push_back(sample_from_record(file.records[i], i, header_dataset, cmap));
  }

  if (!header_dataset.empty()) {
    m.dataset_id = header_dataset;
  } else if (!m.samples.empty()) {
    m.dataset_id = m.samples.front().dataset_id;
  }

  std::size_t max_cams = 1;
  for (const Sample & s : m.samples) max_cams = std::max(max_cams, s.rig.size());
  if (file.header.contains("canonical_camera_count")) {
    const json & n = file.header["canonical_camera_count"];
    if (!n.is_number_unsigned()) {
      throw Error(
        ErrorCode::kParseError, header_at.str() + ": canonical_camera_count must be a positive integer");
    }
    m.canonical_camera_count = n.get<std::size_t>();
  } else {
    m.canonical_camera_count = max_cams;
  }
  validate(m);
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path & path, const CategoryMap & cmap)
{
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  return parse_manifest(in, path.string(), cmap);
}

std::string serialize_manifest(const DatasetManifest & manifest, const json & provenance)
{
  json header = record_io::make_header("manifest");
  header["dataset_id"] = manifest.dataset_id;
  header["canonical_camera_count"] = manifest.canonical_camera_count;
  if (!provenance.is_null()) header["provenance"] = provenance;

  std::vector<json> records;
  records.reserve(manifest.samples.size());
  for (const Sample & s : manifest.samples) {
    json cams = json::array();
    const auto & cameras = s.rig.cameras();
    for (std::size_t i = 0; i < cameras.size(); ++i) {
      const std::optional<std::string> image =
        s.image_refs ? (*s.image_refs)[i] : std::optional<std::string>{};
      cams.push_back(record_io::to_json(cameras[i], image, s.image_refs.has_value()));
    }
    json boxes = json::array();
    for (const Box3D & b : s.boxes) boxes.push_back(record_io::to_json(b));
    records.push_back(
      json{{"sample_id", s.sample_id},
           {"dataset_id", s.dataset_id},
           {"cameras", std::move(cams)},
           {"boxes", std::move(boxes)}});
  }
  return record_io::serialize(header, records);
}

void write_manifest(
  const std::filesystem::path & path, const DatasetManifest & manifest, const json & provenance)
{
  record_io::write_atomic(path, serialize_manifest(manifest, provenance));
}

// ---------------------------------------------------------------------------
// Ghost cameras and merging

namespace
{

std::string ghost_name(const CameraRig & rig, std::size_t position)
{
  std::string name = "GHOST_CAM_" + std::to_string(position);
  while (rig.find(name) != nullptr) name += "_";
  return name;
}

Sample pad_sample(const Sample & s, std::size_t target_count)
{
  if (s.rig.size() == target_count) return s;
  std::vector<Camera> cameras = s.rig.cameras();
  Sample out = s;
  for (std::size_t pos = cameras.size(); pos < target_count; ++pos) {
    CameraRig partial(cameras);
    cameras.push_back({ghost_name(partial, pos), CameraIntrinsics::ghost(), CameraExtrinsics::identity()});
    if (out.image_refs) out.image_refs->push_back(std::nullopt);
  }
  out.rig = CameraRig(std::move(cameras));
  return out;
}

}  // namespace

DatasetManifest add_ghost_cameras(const DatasetManifest & manifest, std::size_t target_count)
{
  for (const Sample & s : manifest.samples) {
    if (s.rig.size() > target_count) {
      throw Error(
        ErrorCode::kTargetTooSmall, "sample '" + s.sample_id + "' has " +
                                      std::to_string(s.rig.size()) + " cameras, target is " +
                                      std::to_string(target_count));
    }
  }
  if (target_count < 1) throw Error(ErrorCode::kTargetTooSmall, "target camera count must be >= 1");

  DatasetManifest out;
  out.dataset_id = manifest.dataset_id;
  out.canonical_camera_count = target_count;
  out.samples.reserve(manifest.samples.size());
  for (const Sample & s : manifest.samples) out.samples.push_back(pad_sample(s, target_count));
  return out;
}

DatasetManifest merge_datasets(
  std::span<const DatasetManifest> manifests, double target_width, double target_height)
{
  if (manifests.empty()) throw Error(ErrorCode::kEmptyInput, "nothing to merge");

  std::size_t target_count = 1;
  for (const DatasetManifest & m : manifests) {
    target_count = std::max(target_count, m.canonical_camera_count);
    for (const Sample & s : m.samples) target_count = std::max(target_count, s.rig.size());
  }

  DatasetManifest merged;
  merged.dataset_id = std::string(kMergedDatasetId);
  merged.canonical_camera_count = target_count;
  for (const DatasetManifest & m : manifests) {
    DatasetManifest padded = add_ghost_cameras(m, target_count);
    for (Sample & s : padded.samples) {
      std::vector<Camera> cameras = s.rig.cameras();
      for (Camera & cam : cameras) {
        cam.intrinsics = rescale_intrinsics(cam.intrinsics, target_width, target_height);
      }
      s.rig = CameraRig(std::move(cameras));
      merged.samples.push_back(std::move(s));
    }
  }
  validate(merged);
  return merged;
}

}  // namespace bevh
