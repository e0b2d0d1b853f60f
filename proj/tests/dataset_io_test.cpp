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

#include <gtest/gtest.h>

#include <sstream>

#include "bevharmonize/dataset_io.hpp"
#include "bevharmonize/synth.hpp"
#include "test_util.hpp"

namespace bevh
{
namespace
{

using testing::code_of;

const char * kTwoSamples = R"({"format":"bevharmonize/1","kind":"manifest","dataset_id":"nuscenes"}
{"sample_id":"a","cameras":[{"name":"CAM_FRONT","fx":1266,"fy":1266,"cx":816,"cy":491,"width":1600,"height":900,"rotation":[0,-1,0,0,0,-1,1,0,0],"translation":[0,1.5,0]}],"boxes":[{"center":[10,0,0.8],"size":[4,1.8,1.6],"yaw":0.1,"category":"car"},{"center":[12,2,0.8],"size":[1.8,0.6,1.2],"yaw":0,"category":"bicycle"},{"center":[8,-2,0.5],"size":[0.5,0.5,1],"yaw":0,"category":"traffic_cone"}]}

{"sample_id":"b","cameras":[{"name":"CAM_FRONT","fx":1266,"fy":1266,"cx":816,"cy":491,"width":1600,"height":900,"rotation":[0,-1,0,0,0,-1,1,0,0],"translation":[0,1.5,0],"image":"b/front.jpg"}],"boxes":[{"center":[5,1,0.9],"size":[0.6,0.6,1.8],"yaw":-3.0,"category":"pedestrian","velocity":[1,0]}]}
)";

DatasetManifest parse(const std::string & text, const CategoryMap & cmap = CategoryMap::builtin())
{
  std::istringstream in(text);
  return parse_manifest(in, "test", cmap);
}

synth::SceneSpec rig_spec(std::size_t cams, std::string dataset, std::uint64_t seed, std::size_t n)
{
  synth::SceneSpec spec;
  spec.seed = seed;
  spec.n_samples = n;
  spec.dataset_id = std::move(dataset);
  spec.cameras = synth::surround_rig(cams, 1000 + 100.0 * static_cast<double>(cams), 1000, 1600, 900);
  return spec;
}

TEST(ParseManifest, HarmonizesAndDropsIgnored)
{
  const DatasetManifest m = parse(kTwoSamples);
  EXPECT_EQ(m.dataset_id, "nuscenes");
  ASSERT_EQ(m.samples.size(), 2u);
  EXPECT_EQ(m.canonical_camera_count, 1u);
  const Sample & a = m.samples[0];
  EXPECT_EQ(a.dataset_id, "nuscenes");
  ASSERT_EQ(a.boxes.size(), 2u);
  EXPECT_EQ(a.boxes[0].category, Category::kVehicle);
  EXPECT_EQ(a.boxes[1].category, Category::kTwoWheeler);
  EXPECT_FALSE(a.image_refs);
  ASSERT_TRUE(m.samples[1].image_refs);
  EXPECT_EQ(*m.samples[1].image_refs->at(0), "b/front.jpg");
  EXPECT_EQ(m.samples[1].boxes[0].category, Category::kPedestrian);
  ASSERT_TRUE(m.samples[1].boxes[0].velocity);
  EXPECT_EQ(m.samples[1].rig.cameras()[0].intrinsics.fx, 1266);
}

TEST(ParseManifest, UnknownCategoryNamesRecordAndLabel)
{
  std::string text = kTwoSamples;
  text.replace(text.find("traffic_cone"), 12, "debris");
  try {
    parse(text);
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownCategory);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("record 0"), std::string::npos) << msg;
    EXPECT_NE(msg.find("debris"), std::string::npos) << msg;
  }

  CategoryMap extra;
  extra.set("nuscenes", "debris", HarmonizedLabel::kIgnore);
  CategoryMap cmap = CategoryMap::builtin();
  cmap.merge_from(extra);
  EXPECT_EQ(parse(text, cmap).samples[0].boxes.size(), 2u);
}

TEST(ParseManifest, InvalidInputs)
{
  std::string rig = kTwoSamples;
  rig.replace(rig.find("[0,-1,0,0,0,-1,1,0,0]"), 21, "[2,0,0,0,1,0,0,0,1]");
  EXPECT_EQ(code_of([&] { parse(rig); }), ErrorCode::kInvalidRig);

  std::string dup = kTwoSamples;
  dup.replace(dup.find("\"sample_id\":\"b\""), 15, "\"sample_id\":\"a\"");
  EXPECT_EQ(code_of([&] { parse(dup); }), ErrorCode::kInvalidManifest);

  EXPECT_EQ(code_of([] { parse("{\"format\":\"other\"}\n"); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { parse("{\"format\":\"bevharmonize/1\",\"kind\":\"detections\"}\n"); }),
            ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { parse("{\"format\":\"bevharmonize/1\",\"kind\":\"manifest\"}\n{oops\n"); }),
            ErrorCode::kParseError);

  std::string zero = kTwoSamples;
  zero.replace(zero.find("[4,1.8,1.6]"), 11, "[4,0.0,1.6]");
  EXPECT_EQ(code_of([&] { parse(zero); }), ErrorCode::kParseError);

  EXPECT_EQ(code_of([] { load_manifest("/nonexistent/m.jsonl", CategoryMap::builtin()); }),
            ErrorCode::kIoError);
}

TEST(CategoryMap, LookupOrder)
{
  CategoryMap m = CategoryMap::builtin();
  EXPECT_EQ(m.lookup("waymo", "TYPE_CYCLIST"), HarmonizedLabel::kTwoWheeler);
  EXPECT_EQ(m.lookup("lyft", "bicycle"), HarmonizedLabel::kTwoWheeler);
  EXPECT_EQ(m.lookup("other", "vehicle"), HarmonizedLabel::kVehicle);
  EXPECT_FALSE(m.lookup("other", "car"));
  m.set("*", "car", HarmonizedLabel::kVehicle);
  EXPECT_EQ(m.lookup("other", "car"), HarmonizedLabel::kVehicle);

  const auto doc = nlohmann::json::parse(R"({"mine":{"lorry":"vehicle"}})");
  EXPECT_EQ(CategoryMap::from_json(doc, "x").lookup("mine", "lorry"), HarmonizedLabel::kVehicle);
  const auto bad = nlohmann::json::parse(R"({"mine":{"lorry":"boat"}})");
  EXPECT_EQ(code_of([&] { CategoryMap::from_json(bad, "x"); }), ErrorCode::kParseError);
}

TEST(SerializeManifest, RoundTripIsByteStable)
{
  const auto scene = synth::generate(rig_spec(6, "synthetic", 3, 4));
  const std::string text = serialize_manifest(scene.manifest);
  const DatasetManifest back = parse(text);
  EXPECT_EQ(back.samples, scene.manifest.samples);
  EXPECT_EQ(serialize_manifest(back), text);
}

TEST(GhostCameras, PadsFiveToSix)
{
  const auto scene = synth::generate(rig_spec(5, "waymo", 1, 3));
  DatasetManifest m = scene.manifest;
  m.samples[0].image_refs = std::vector<std::optional<std::string>>(5, "img");
  const DatasetManifest padded = add_ghost_cameras(m, 6);
  EXPECT_EQ(padded.canonical_camera_count, 6u);
  for (std::size_t i = 0; i < m.samples.size(); ++i) {
    const auto & cams = padded.samples[i].rig.cameras();
    ASSERT_EQ(cams.size(), 6u);
    EXPECT_TRUE(cams[5].intrinsics.is_ghost());
    EXPECT_EQ(cams[5].name, "GHOST_CAM_5");
    for (std::size_t c = 0; c < 5; ++c) EXPECT_EQ(cams[c], m.samples[i].rig.cameras()[c]);
    EXPECT_EQ(padded.samples[i].boxes, m.samples[i].boxes);
  }
  ASSERT_TRUE(padded.samples[0].image_refs);
  EXPECT_EQ(padded.samples[0].image_refs->size(), 6u);
  EXPECT_FALSE(padded.samples[0].image_refs->back());

  EXPECT_EQ(add_ghost_cameras(padded, 6).samples, padded.samples);
  EXPECT_EQ(code_of([&] { add_ghost_cameras(m, 4); }), ErrorCode::kTargetTooSmall);
}

TEST(MergeDatasets, CountsAndRescaling)
{
  const auto a = synth::generate(rig_spec(6, "nuscenes", 1, 2)).manifest;
  const auto b = synth::generate(rig_spec(5, "waymo", 2, 3)).manifest;
  const auto c = synth::generate(rig_spec(3, "lyft", 3, 5)).manifest;
  const std::vector<DatasetManifest> inputs = {a, b, c};
  const DatasetManifest merged = merge_datasets(inputs);
  EXPECT_EQ(merged.dataset_id, "merged");
  EXPECT_EQ(merged.canonical_camera_count, 6u);
  ASSERT_EQ(merged.samples.size(), 10u);
  EXPECT_EQ(merged.samples[0].dataset_id, "nuscenes");
  EXPECT_EQ(merged.samples[9].dataset_id, "lyft");

  std::size_t offset = 0;
  for (const DatasetManifest & in : inputs) {
    for (std::size_t i = 0; i < in.samples.size(); ++i) {
      const auto & src = in.samples[i].rig.cameras();
      const auto & dst = merged.samples[offset + i].rig.cameras();
      ASSERT_EQ(dst.size(), 6u);
      for (std::size_t k = 0; k < dst.size(); ++k) {
        if (k >= src.size()) {
          EXPECT_TRUE(dst[k].intrinsics.is_ghost());
          continue;
        }
        EXPECT_EQ(dst[k].extrinsics, src[k].extrinsics);
        EXPECT_DOUBLE_EQ(dst[k].intrinsics.fx, src[k].intrinsics.fx * 704.0 / 1600.0);
        EXPECT_DOUBLE_EQ(dst[k].intrinsics.cy, src[k].intrinsics.cy * 384.0 / 900.0);
        EXPECT_EQ(dst[k].intrinsics.width, 704);
      }
    }
    offset += in.samples.size();
  }

  // A single manifest already at the target resolution keeps its samples.
  synth::SceneSpec native = rig_spec(6, "nuscenes", 4, 3);
  native.cameras = synth::surround_rig(6, 440, 440, 704, 384);
  const DatasetManifest at_target = synth::generate(native).manifest;
  const std::vector<DatasetManifest> single = {at_target};
  const DatasetManifest same = merge_datasets(single);
  EXPECT_EQ(same.samples, at_target.samples);
  DatasetManifest relabeled = at_target;
  relabeled.dataset_id = "merged";
  EXPECT_EQ(serialize_manifest(same), serialize_manifest(relabeled));

  // Re-merging already harmonized data is a no-op.
  const std::vector<DatasetManifest> again = {merged};
  EXPECT_EQ(merge_datasets(again).samples, merged.samples);
  EXPECT_EQ(serialize_manifest(merge_datasets(again)), serialize_manifest(merged));
  EXPECT_EQ(code_of([] { merge_datasets({}); }), ErrorCode::kEmptyInput);
}

}  // namespace
}  // namespace bevh
