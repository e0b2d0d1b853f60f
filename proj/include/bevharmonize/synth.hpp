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

#ifndef BEVHARMONIZE_SYNTH_HPP_
#define BEVHARMONIZE_SYNTH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bevharmonize/dataset_io.hpp"
#include "bevharmonize/experts.hpp"
#include "bevharmonize/metrics.hpp"

namespace bevh::synth
{

struct SyntheticCamera
{
  std::string name;
  double fx = 1000.0;
  double fy = 1000.0;
  double width = 1600.0;
  double height = 900.0;
  /// Optical center height above the ground under the ego origin.
  double mount_height = 1.5;
  /// Positive tilts the optical axis toward the ground.
  double pitch = 0.0;
  /// Heading of the optical axis, counter-clockwise from ego +x.
  double yaw = 0.0;
};

struct NoiseModel
{
  double center_sigma = 0.0;
  /// Log-normal multiplicative jitter on each size component.
  double size_sigma = 0.0;
  double yaw_sigma = 0.0;
  double score_min = 1.0;
  double score_max = 1.0;
  double miss_rate = 0.0;
  std::size_t false_positives_per_sample = 0;
};

struct GroundModel
{
  enum class Kind { kFlat, kInclined };
  Kind kind = Kind::kFlat;
  /// Flat ground elevation in the ego frame.
  double height = 0.0;
  /// Inclined ground rises by grade meters per meter along ego +x.
  double grade = 0.0;

  double elevation(double x) const { return kind == Kind::kFlat ? height : grade * x; }
};

struct SceneSpec
{
  std::uint64_t seed = 0;
  std::size_t n_samples = 10;
  std::string dataset_id = "synthetic";
  std::vector<SyntheticCamera> cameras;
  std::size_t boxes_per_sample = 5;
  /// The first this-many boxes of each sample are placed ahead of the ego.
  std::size_t front_boxes = 2;
  /// Minimum BEV distance between GT centers within a sample.
  double min_separation = 2.0;
  NoiseModel noise;
  GroundModel ground;
};

/// Evenly spread surround rig whose first camera is CAM_FRONT.
/// Six cameras use nuScenes names, five use the Waymo layout.
std::vector<SyntheticCamera> surround_rig(
  std::size_t count, double fx = 1000.0, double fy = 1000.0, double width = 1600.0,
  double height = 900.0, double mount_height = 1.5);

/// Extrinsics (ego->camera) for a synthetic camera over the given ground.
CameraExtrinsics camera_pose(const SyntheticCamera & cam, const GroundModel & ground);

struct SyntheticScene
{
  DatasetManifest manifest;
  std::vector<Detection> detections;
};

/// Pure function of the spec; output is bit-identical for any thread count.
SyntheticScene generate(const SceneSpec & spec, unsigned threads = 1);

/// Standard-normal feature maps keyed by (seed, image, element).
std::vector<FeatureMap> generate_feature_maps(
  std::uint64_t seed, std::size_t count, std::size_t channels, std::size_t height,
  std::size_t width);

/// Missing keys take the defaults above; "cameras" may be an explicit list or
/// {"surround": N, ...}. Throws kParseError.
SceneSpec scene_spec_from_json(const nlohmann::json & doc, std::string_view source = "spec");
nlohmann::json to_json(const SceneSpec & spec);

}  // namespace bevh::synth

#endif  // BEVHARMONIZE_SYNTH_HPP_
