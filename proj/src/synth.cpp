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

#include "bevharmonize/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "bevharmonize/counter_rng.hpp"
#include "bevharmonize/error.hpp"
#include "bevharmonize/parallel.hpp"

namespace bevh::synth
{

using nlohmann::json;

namespace
{

constexpr std::uint64_t kPlaceStream = 1;
constexpr std::uint64_t kAttrStream = 2;
constexpr std::uint64_t kNoiseStream = 3;
constexpr std::uint64_t kFalsePositiveStream = 4;
constexpr std::uint64_t kFeatureStream = 5;
constexpr std::size_t kMaxPlacementAttempts = 256;
constexpr double kPlacementExtent = 48.0;

// Key layout for per-entity draws: entity in the high bits, attribute low.
constexpr std::uint64_t lane(std::uint64_t entity, std::uint64_t attribute)
{
  return (entity << 16) | attribute;
}

Vec3 base_size(Category c)
{
  switch (c) {
    case Category::kVehicle:
      return {4.6, 1.9, 1.7};
    case Category::kTwoWheeler:
      return {1.9, 0.7, 1.4};
    case Category::kPedestrian:
      return {0.7, 0.7, 1.75};
  }
  return {1.0, 1.0, 1.0};
}

Category draw_category(double u)
{
  if (u < 0.6) return Category::kVehicle;
  if (u < 0.75) return Category::kTwoWheeler;
  return Category::kPedestrian;
}

Mat3 yaw_rotation(double yaw)
{
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  Mat3 r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

std::string sample_name(const std::string & dataset, std::size_t index)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_%06zu", index);
  return dataset + buf;
}

struct SampleOutput
{
  Sample sample;
  std::vector<Detection> detections;
};

SampleOutput generate_sample(const SceneSpec & spec, const CameraRig & rig, std::size_t s)
{
  const CounterRng rng(spec.seed);
  SampleOutput out;
  out.sample.sample_id = sample_name(spec.dataset_id, s);
  out.sample.dataset_id = spec.dataset_id;
  out.sample.rig = rig;

  for (std::size_t b = 0; b < spec.boxes_per_sample; ++b) {
    const bool ahead = b < spec.front_boxes;
    std::optional<Vec2> position;
    for (std::size_t attempt = 0; attempt < kMaxPlacementAttempts && !position; ++attempt) {
      const std::uint64_t base = lane(b, 2 * attempt);
      Vec2 p;
      if (ahead) {
        p.x() = rng.uniform(8.0, 45.0, kPlaceStream, s, base);
        p.y() = rng.uniform(-0.4, 0.4, kPlaceStream, s, base + 1) * p.x();
      } else {
        p.x() = rng.uniform(-kPlacementExtent, kPlacementExtent, kPlaceStream, s, base);
        p.y() = rng.uniform(-kPlacementExtent, kPlacementExtent, kPlaceStream, s, base + 1);
      }
      bool clear = true;
      for (const Box3D & other : out.sample.boxes) {
        clear = clear && std::hypot(other.center.x() - p.x(), other.center.y() - p.y()) >=
                           spec.min_separation;
      }
      if (clear) position = p;
    }
    // Crowded samples simply end up with fewer boxes.
    if (!position) continue;

    Box3D box;
    box.category = draw_category(rng.uniform(kAttrStream, s, lane(b, 0)));
    const Vec3 jitter(
      std::exp(0.1 * (rng.uniform(kAttrStream, s, lane(b, 1)) - 0.5)),
      std::exp(0.1 * (rng.uniform(kAttrStream, s, lane(b, 2)) - 0.5)),
      std::exp(0.1 * (rng.uniform(kAttrStream, s, lane(b, 3)) - 0.5)));
    box.size = base_size(box.category).cwiseProduct(jitter);
    box.yaw = wrap_angle(rng.uniform(-std::numbers::pi, std::numbers::pi, kAttrStream, s, lane(b, 4)));
    box.center = Vec3(
      position->x(), position->y(), spec.ground.elevation(position->x()) + 0.5 * box.size.z());
    box.velocity = Vec2(
      rng.uniform(-5.0, 5.0, kAttrStream, s, lane(b, 5)),
      rng.uniform(-5.0, 5.0, kAttrStream, s, lane(b, 6)));
    out.sample.boxes.push_back(box);
  }

  const NoiseModel & noise = spec.noise;
  for (std::size_t b = 0; b < out.sample.boxes.size(); ++b) {
    if (rng.uniform(kAttrStream, s, lane(b, 7)) < noise.miss_rate) continue;
    Box3D det = out.sample.boxes[b];
    for (int k = 0; k < 3; ++k) {
      det.center[k] += noise.center_sigma * rng.normal(kNoiseStream, s, lane(b, k));
      det.size[k] *= std::exp(noise.size_sigma * rng.normal(kNoiseStream, s, lane(b, 3 + k)));
    }
    det.yaw = wrap_angle(det.yaw + noise.yaw_sigma * rng.normal(kNoiseStream, s, lane(b, 6)));
    const double score =
      rng.uniform(noise.score_min, noise.score_max, kAttrStream, s, lane(b, 8));
    out.detections.push_back({out.sample.sample_id, det, score});
  }

  for (std::size_t f = 0; f < noise.false_positives_per_sample; ++f) {
    Box3D fp;
    fp.category = draw_category(rng.uniform(kFalsePositiveStream, s, lane(f, 0)));
    fp.size = base_size(fp.category);
    fp.center = Vec3(
      rng.uniform(-kPlacementExtent, kPlacementExtent, kFalsePositiveStream, s, lane(f, 1)),
      rng.uniform(-kPlacementExtent, kPlacementExtent, kFalsePositiveStream, s, lane(f, 2)), 0.0);
    fp.center.z() = spec.ground.elevation(fp.center.x()) + 0.5 * fp.size.z();
    fp.yaw = wrap_angle(
      rng.uniform(-std::numbers::pi, std::numbers::pi, kFalsePositiveStream, s, lane(f, 3)));
    const double score =
      rng.uniform(noise.score_min, noise.score_max, kFalsePositiveStream, s, lane(f, 4));
    out.detections.push_back({out.sample.sample_id, fp, score});
  }

  for (const Box3D & box : out.sample.boxes) validate(box);
  for (const Detection & d : out.detections) validate(d.box);
  return out;
}

}  // namespace

std::vector<SyntheticCamera> surround_rig(
  std::size_t count, double fx, double fy, double width, double height, double mount_height)
{
  std::vector<SyntheticCamera> rig;
  auto add = [&](std::string name, double yaw_deg) {
    rig.push_back(
      {std::move(name), fx, fy, width, height, mount_height, 0.0, yaw_deg * std::numbers::pi / 180.0});
  };
  if (count == 6) {
    add("CAM_FRONT", 0);
    add("CAM_FRONT_RIGHT", -55);
    add("CAM_BACK_RIGHT", -110);
    add("CAM_BACK", 180);
    add("CAM_BACK_LEFT", 110);
    add("CAM_FRONT_LEFT", 55);
  } else if (count == 5) {
    add("CAM_FRONT", 0);
    add("CAM_FRONT_LEFT", 45);
    add("CAM_FRONT_RIGHT", -45);
    add("CAM_SIDE_LEFT", 90);
    add("CAM_SIDE_RIGHT", -90);
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      add(i == 0 ? "CAM_FRONT" : "CAM_" + std::to_string(i), -360.0 * static_cast<double>(i) / static_cast<double>(count));
    }
  }
  return rig;
}

CameraExtrinsics camera_pose(const SyntheticCamera & cam, const GroundModel & ground)
{
  // Ego axes (forward, left, up) onto camera axes (right, down, forward).
  Mat3 axes;
  axes << 0, -1, 0, 0, 0, -1, 1, 0, 0;
  const double c = std::cos(cam.pitch);
  const double s = std::sin(cam.pitch);
  Mat3 pitch;
  pitch << 1, 0, 0, 0, c, -s, 0, s, c;

  CameraExtrinsics e;
  e.rotation = pitch * axes * yaw_rotation(-cam.yaw);
  const Vec3 center(0.0, 0.0, ground.elevation(0.0) + cam.mount_height);
  e.translation = -(e.rotation * center);
  return e;
}

SyntheticScene generate(const SceneSpec & spec, unsigned threads)
{
  std::vector<Camera> cameras;
  for (const SyntheticCamera & c : spec.cameras) {
    cameras.push_back(
      {c.name, {c.fx, c.fy, 0.5 * c.width, 0.5 * c.height, c.width, c.height},
       camera_pose(c, spec.ground)});
  }
  const CameraRig rig(std::move(cameras));

  std::vector<SampleOutput> samples(spec.n_samples);
  parallel_for(spec.n_samples, threads, [&](std::size_t s) {
    samples[s] = generate_sample(spec, rig, s);
  });

  SyntheticScene scene;
  scene.manifest.dataset_id = spec.dataset_id;
  scene.manifest.canonical_camera_count = std::max<std::size_t>(1, rig.size());
  scene.manifest.samples.reserve(samples.size());
  for (SampleOutput & out : samples) {
    scene.manifest.samples.push_back(std::move(out.sample));
    scene.detections.insert(scene.detections.end(), out.detections.begin(), out.detections.end());
  }
  validate(scene.manifest);
  return scene;
}

std::vector<FeatureMap> generate_feature_maps(
  std::uint64_t seed, std::size_t count, std::size_t channels, std::size_t height,
  std::size_t width)
{
  const CounterRng rng(seed);
  std::vector<FeatureMap> maps;
  maps.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> data(channels * height * width);
    for (std::size_t k = 0; k < data.size(); ++k) data[k] = rng.normal(kFeatureStream, i, k);
    maps.emplace_back(channels, height, width, std::move(data));
  }
  return maps;
}

// ---------------------------------------------------------------------------
// Config file

namespace
{

template <typename T>
T value_or(const json & obj, const char * key, T fallback, std::string_view source)
{
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception & e) {
    throw Error(
      ErrorCode::kParseError, std::string(source) + ": field '" + key + "': " + e.what());
  }
}

}  // namespace

SceneSpec scene_spec_from_json(const json & doc, std::string_view source)
{
  if (!doc.is_object()) throw Error(ErrorCode::kParseError, std::string(source) + ": spec must be an object");
  SceneSpec spec;
  spec.seed = value_or<std::uint64_t>(doc, "seed", spec.seed, source);
  spec.n_samples = value_or<std::size_t>(doc, "n_samples", spec.n_samples, source);
  spec.dataset_id = value_or<std::string>(doc, "dataset_id", spec.dataset_id, source);
  spec.boxes_per_sample = value_or<std::size_t>(doc, "boxes_per_sample", spec.boxes_per_sample, source);
  spec.front_boxes = value_or<std::size_t>(doc, "front_boxes", spec.front_boxes, source);
  spec.min_separation = value_or<double>(doc, "min_separation", spec.min_separation, source);

  const json cams = doc.value("cameras", json{{"surround", 6}});
  if (cams.is_object()) {
    spec.cameras = surround_rig(
      value_or<std::size_t>(cams, "surround", 6, source), value_or<double>(cams, "fx", 1000.0, source),
      value_or<double>(cams, "fy", 1000.0, source), value_or<double>(cams, "width", 1600.0, source),
      value_or<double>(cams, "height", 900.0, source),
      value_or<double>(cams, "mount_height", 1.5, source));
    const double pitch = value_or<double>(cams, "pitch", 0.0, source);
    for (SyntheticCamera & c : spec.cameras) c.pitch = pitch;
  } else if (cams.is_array()) {
    for (const json & c : cams) {
      SyntheticCamera cam;
      cam.name = value_or<std::string>(c, "name", "CAM_" + std::to_string(spec.cameras.size()), source);
      cam.fx = value_or<double>(c, "fx", cam.fx, source);
      cam.fy = value_or<double>(c, "fy", cam.fy, source);
      cam.width = value_or<double>(c, "width", cam.width, source);
      cam.height = value_or<double>(c, "height", cam.height, source);
      cam.mount_height = value_or<double>(c, "mount_height", cam.mount_height, source);
      cam.pitch = value_or<double>(c, "pitch", cam.pitch, source);
      cam.yaw = value_or<double>(c, "yaw", cam.yaw, source);
      spec.cameras.push_back(std::move(cam));
    }
  } else {
    throw Error(ErrorCode::kParseError, std::string(source) + ": 'cameras' must be a list or object");
  }

  const json noise = doc.value("noise", json::object());
  NoiseModel & n = spec.noise;
  n.center_sigma = value_or<double>(noise, "center_sigma", n.center_sigma, source);
  n.size_sigma = value_or<double>(noise, "size_sigma", n.size_sigma, source);
  n.yaw_sigma = value_or<double>(noise, "yaw_sigma", n.yaw_sigma, source);
  n.score_min = value_or<double>(noise, "score_min", n.score_min, source);
  n.score_max = value_or<double>(noise, "score_max", n.score_max, source);
  n.miss_rate = value_or<double>(noise, "miss_rate", n.miss_rate, source);
  n.false_positives_per_sample =
    value_or<std::size_t>(noise, "false_positives_per_sample", n.false_positives_per_sample, source);

  const json ground = doc.value("ground", json::object());
  const std::string kind = value_or<std::string>(ground, "kind", "flat", source);
  if (kind == "flat") {
    spec.ground = {GroundModel::Kind::kFlat, value_or<double>(ground, "height", 0.0, source), 0.0};
  } else if (kind == "inclined") {
    spec.ground = {GroundModel::Kind::kInclined, 0.0, value_or<double>(ground, "grade", 0.0, source)};
  } else {
    throw Error(ErrorCode::kParseError, std::string(source) + ": unknown ground kind '" + kind + "'");
  }

  if (n.center_sigma < 0 || n.size_sigma < 0 || n.yaw_sigma < 0 || spec.min_separation < 0 ||
      !(n.score_min >= 0 && n.score_min <= n.score_max && n.score_max <= 1.0) ||
      !(n.miss_rate >= 0 && n.miss_rate <= 1.0)) {
    throw Error(ErrorCode::kParseError, std::string(source) + ": noise parameters out of range");
  }
  return spec;
}

json to_json(const SceneSpec & spec)
{
  json cams = json::array();
  for (const SyntheticCamera & c : spec.cameras) {
    cams.push_back(
      {{"name", c.name},
       {"fx", c.fx},
       {"fy", c.fy},
       {"width", c.width},
       {"height", c.height},
       {"mount_height", c.mount_height},
       {"pitch", c.pitch},
       {"yaw", c.yaw}});
  }
  const NoiseModel & n = spec.noise;
  json ground = spec.ground.kind == GroundModel::Kind::kFlat
                  ? json{{"kind", "flat"}, {"height", spec.ground.height}}
                  : json{{"kind", "inclined"}, {"grade", spec.ground.grade}};
  return json{
    {"seed", spec.seed},
    {"n_samples", spec.n_samples},
    {"dataset_id", spec.dataset_id},
    {"cameras", std::move(cams)},
    {"boxes_per_sample", spec.boxes_per_sample},
    {"front_boxes", spec.front_boxes},
    {"min_separation", spec.min_separation},
    {"noise",
     {{"center_sigma", n.center_sigma},
      {"size_sigma", n.size_sigma},
      {"yaw_sigma", n.yaw_sigma},
      {"score_min", n.score_min},
      {"score_max", n.score_max},
      {"miss_rate", n.miss_rate},
      {"false_positives_per_sample", n.false_positives_per_sample}}},
    {"ground", std::move(ground)}};
}

}  // namespace bevh::synth
