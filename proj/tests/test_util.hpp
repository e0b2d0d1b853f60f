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

#ifndef BEVHARMONIZE_TESTS_TEST_UTIL_HPP_
#define BEVHARMONIZE_TESTS_TEST_UTIL_HPP_

#include <gtest/gtest.h>

#include <functional>
#include <string>
#include <vector>

#include "bevharmonize/dataset_io.hpp"
#include "bevharmonize/error.hpp"
#include "bevharmonize/geometry.hpp"

namespace bevh::testing
{

inline ErrorCode code_of(const std::function<void()> & fn)
{
  try {
    fn();
  } catch (const Error & e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kIoError;
}

/// Level forward camera at the given height: cam x = -ego y, cam y = -ego z, cam z = ego x.
inline Camera forward_camera(
  std::string name = "CAM_FRONT", double fy = 1000, double height = 1.5, double fx = 1000)
{
  Camera c;
  c.name = std::move(name);
  c.intrinsics = {fx, fy, 800, 450, 1600, 900};
  c.extrinsics.rotation << 0, -1, 0, 0, 0, -1, 1, 0, 0;
  c.extrinsics.translation = {0, height, 0};
  return c;
}

inline Box3D box_at(double x, double y, double yaw = 0, Category cat = Category::kVehicle)
{
  Box3D b;
  b.center = {x, y, 0.75};
  b.size = {4.0, 1.8, 1.5};
  b.yaw = yaw;
  b.category = cat;
  return b;
}

inline Sample flat_sample(
  std::string id, std::vector<Camera> cams, std::vector<Box3D> boxes, std::string dataset = "ds")
{
  Sample s;
  s.sample_id = std::move(id);
  s.dataset_id = std::move(dataset);
  s.rig = CameraRig(std::move(cams));
  s.boxes = std::move(boxes);
  return s;
}

}  // namespace bevh::testing

#endif  // BEVHARMONIZE_TESTS_TEST_UTIL_HPP_
