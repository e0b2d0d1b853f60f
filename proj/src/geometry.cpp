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

#include "bevharmonize/geometry.hpp"

#include <Eigen/LU>

#include <cmath>
#include <numbers>
#include <set>

#include "bevharmonize/error.hpp"

namespace bevh
{

std::string_view category_name(Category c)
{
  switch (c) {
    case Category::kVehicle:
      return "vehicle";
    case Category::kTwoWheeler:
      return "two-wheeler";
    case Category::kPedestrian:
      return "pedestrian";
  }
  return "vehicle";
}

std::optional<Category> category_from_name(std::string_view name)
{
  for (Category c : kAllCategories) {
    if (category_name(c) == name) return c;
  }
  return std::nullopt;
}

void validate(const CameraIntrinsics & intr)
{
  const bool finite = std::isfinite(intr.fx) && std::isfinite(intr.fy) && std::isfinite(intr.cx) &&
                      std::isfinite(intr.cy) && std::isfinite(intr.width) &&
                      std::isfinite(intr.height);
  if (!finite || intr.fx < 0.0 || intr.fy < 0.0 || intr.width < 0.0 || intr.height < 0.0) {
    throw Error(ErrorCode::kInvalidCamera, "intrinsics must be finite and non-negative");
  }
  // A half-ghost (one focal zero) cannot project anything meaningful.
  if ((intr.fx == 0.0) != (intr.fy == 0.0)) {
    throw Error(ErrorCode::kInvalidCamera, "fx and fy must both be zero or both be positive");
  }
}

void validate(const CameraExtrinsics & extr)
{
  constexpr double kTol = 1e-9;
  if (!extr.rotation.allFinite() || !extr.translation.allFinite()) {
    throw Error(ErrorCode::kInvalidRig, "extrinsics contain non-finite values");
  }
  const Mat3 gram = extr.rotation.transpose() * extr.rotation;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > kTol) {
    throw Error(ErrorCode::kInvalidRig, "rotation is not orthonormal");
  }
  if (std::abs(extr.rotation.determinant() - 1.0) > kTol) {
    throw Error(ErrorCode::kInvalidRig, "rotation has determinant != +1");
  }
}

double wrap_angle(double a)
{
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double r = std::remainder(a, kTwoPi);
  if (r <= -std::numbers::pi) r += kTwoPi;
  return r;
}

void validate(const Box3D & box)
{
  if (!box.center.allFinite() || !box.size.allFinite() || !std::isfinite(box.yaw)) {
    throw Error(ErrorCode::kInvalidBox, "box has non-finite fields");
  }
  if ((box.size.array() <= 0.0).any()) {
    throw Error(ErrorCode::kInvalidBox, "box size components must be positive");
  }
  if (!(box.yaw > -std::numbers::pi && box.yaw <= std::numbers::pi)) {
    throw Error(ErrorCode::kInvalidBox, "yaw outside (-pi, pi]");
  }
  if (box.velocity && !box.velocity->allFinite()) {
    throw Error(ErrorCode::kInvalidBox, "box velocity is non-finite");
  }
}

CameraRig::CameraRig(std::vector<Camera> cameras) : cameras_(std::move(cameras))
{
  std::set<std::string_view> names;
  for (const Camera & cam : cameras_) {
    if (!names.insert(cam.name).second) {
      throw Error(ErrorCode::kInvalidRig, "duplicate camera name '" + cam.name + "'");
    }
    validate(cam.intrinsics);
    validate(cam.extrinsics);
  }
}

const Camera * CameraRig::find(std::string_view name) const
{
  for (const Camera & cam : cameras_) {
    if (cam.name == name) return &cam;
  }
  return nullptr;
}

Projection project_point(
  const Vec3 & p_ego, const CameraIntrinsics & intr, const CameraExtrinsics & extr)
{
  if (intr.is_ghost()) {
    throw Error(ErrorCode::kGhostCameraProjection, "cannot project through a ghost camera");
  }
  const Vec3 p = extr.apply(p_ego);
  if (!(p.z() > kMinDepth)) {
    throw Error(ErrorCode::kBehindCamera, "point depth " + std::to_string(p.z()) + " m");
  }
  return {intr.fx * p.x() + intr.cx * p.z(), intr.fy * p.y() + intr.cy * p.z(), p.z()};
}

std::array<Vec3, 4> box_ground_corners(const Box3D & box)
{
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double hl = 0.5 * box.size.x();
  const double hw = 0.5 * box.size.y();
  const double z = box.center.z() - 0.5 * box.size.z();
  constexpr std::array<std::array<double, 2>, 4> kSigns = {{{1, 1}, {-1, 1}, {-1, -1}, {1, -1}}};

  std::array<Vec3, 4> corners;
  for (std::size_t i = 0; i < 4; ++i) {
    const double lx = kSigns[i][0] * hl;
    const double ly = kSigns[i][1] * hw;
    corners[i] = Vec3(box.center.x() + c * lx - s * ly, box.center.y() + s * lx + c * ly, z);
  }
  return corners;
}

CameraIntrinsics rescale_intrinsics(
  const CameraIntrinsics & intr, double target_width, double target_height)
{
  if (!(target_width > 0.0) || !(target_height > 0.0)) {
    throw Error(ErrorCode::kZeroDimension, "target resolution must be positive");
  }
  if (intr.is_ghost()) {
    CameraIntrinsics out = intr;
    out.width = target_width;
    out.height = target_height;
    return out;
  }
  if (!(intr.width > 0.0) || !(intr.height > 0.0)) {
    throw Error(ErrorCode::kZeroDimension, "camera has zero image width or height");
  }
  const double sx = target_width / intr.width;
  const double sy = target_height / intr.height;
  return {intr.fx * sx, intr.fy * sy, intr.cx * sx, intr.cy * sy, target_width, target_height};
}

}  // namespace bevh
