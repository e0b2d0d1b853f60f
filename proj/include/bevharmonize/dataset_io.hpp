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

#ifndef BEVHARMONIZE_DATASET_IO_HPP_
#define BEVHARMONIZE_DATASET_IO_HPP_

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bevharmonize/geometry.hpp"

namespace bevh
{

inline constexpr double kDefaultTargetWidth = 704.0;
inline constexpr double kDefaultTargetHeight = 384.0;
inline constexpr std::string_view kMergedDatasetId = "merged";

struct Sample
{
  std::string sample_id;
  std::string dataset_id;
  CameraRig rig;
  std::vector<Box3D> boxes;
  /// One entry per camera when present; ghost cameras have no image.
  std::optional<std::vector<std::optional<std::string>>> image_refs;

  bool operator==(const Sample &) const = default;
};

struct DatasetManifest
{
  std::string dataset_id;
  std::vector<Sample> samples;
  std::size_t canonical_camera_count = 1;
};

/// Checks the manifest-level invariants: shared dataset_id (unless merged),
/// unique sample ids, image_refs length, canonical_camera_count >= 1.
/// Throws kInvalidManifest.
void validate(const DatasetManifest & manifest);

/// Target of a raw label. kIgnore drops the box at load time.
enum class HarmonizedLabel { kVehicle, kTwoWheeler, kPedestrian, kIgnore };

std::optional<HarmonizedLabel> harmonized_label_from_name(std::string_view name);
std::string_view harmonized_label_name(HarmonizedLabel label);

/// (dataset_id, raw label) -> harmonized label. Lookup falls back to the
/// "*" dataset, then to identity for labels that are already harmonized.
class CategoryMap
{
public:
  /// Entries for nuScenes, Waymo, Lyft and DeepAccident label sets.
  static CategoryMap builtin();

  /// {"<dataset_id>": {"<raw label>": "vehicle" | "two-wheeler" | "pedestrian" | "ignore"}}
  /// Throws kParseError.
  static CategoryMap from_json(const nlohmann::json & doc, std::string_view source);
  static CategoryMap load(const std::filesystem::path & path);

  void set(std::string dataset_id, std::string raw_label, HarmonizedLabel label);
  /// Entries of other override entries of this map.
  void merge_from(const CategoryMap & other);

  std::optional<HarmonizedLabel> lookup(std::string_view dataset_id, std::string_view raw) const;

private:
  std::map<std::string, std::map<std::string, HarmonizedLabel, std::less<>>, std::less<>> table_;
};

/// Loads a manifest file, harmonizing categories and dropping ignored boxes.
/// Throws kIoError, kParseError, kUnknownCategory, kInvalidRig, kInvalidManifest.
DatasetManifest load_manifest(const std::filesystem::path & path, const CategoryMap & cmap);
DatasetManifest parse_manifest(std::istream & in, std::string_view source, const CategoryMap & cmap);

/// provenance, when non-null, is written into the header record.
std::string serialize_manifest(
  const DatasetManifest & manifest, const nlohmann::json & provenance = nullptr);
void write_manifest(
  const std::filesystem::path & path, const DatasetManifest & manifest,
  const nlohmann::json & provenance = nullptr);

/// Pads every rig to target_count with ghost cameras appended after the real
/// ones. Throws kTargetTooSmall.
DatasetManifest add_ghost_cameras(const DatasetManifest & manifest, std::size_t target_count);

/// Concatenates manifests, pads rigs to the largest camera count and rescales
/// every real camera to the target resolution. Samples keep their own
/// dataset_id; the result is labeled "merged".
DatasetManifest merge_datasets(
  std::span<const DatasetManifest> manifests, double target_width = kDefaultTargetWidth,
  double target_height = kDefaultTargetHeight);

}  // namespace bevh

#endif  // BEVHARMONIZE_DATASET_IO_HPP_
