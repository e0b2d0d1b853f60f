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

#ifndef BEVHARMONIZE_GEOMETRY_HPP_
#define BEVHARMONIZE_GEOMETRY_HPP_

#include <Eigen/Core>

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bevh
{

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Points closer to the image plane than this are treated as behind the camera.
inline constexpr double kMinDepth = 1e-6;

/// Harmonized object taxonomy shared by every dataset.
enum class Category { kVehicle = 0, kTwoWheeler = 1, kPedestrian = 2 };

inline constexpr std::array<Category, 3> kAllCategories = {
  Category::kVehicle, Category::kTwoWheeler, Category::kPedestrian};

std::string_view category_name(Category c);
std::optional<Category> category_from_name(std::string_view name);

/// Pinhole intrinsics in pixels. A camera with fx == fy == 0 is a ghost: a
/// structural placeholder that keeps rig sizes uniform across datasets.
struct CameraIntrinsics
{
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double width = 0.0;
  double height = 0.0;

  bool is_ghost() const { return fx == 0.0 && fy == 0.0; }

  static CameraIntrinsics ghost(double width = 0.0, double height = 0.0)
  {
    return {0.0, 0.0, 0.0, 0.0, width, height};
  }

  bool operator==(const CameraIntrinsics &) const = default;
};

/// Rigid ego->camera transform: p_cam = rotation * p_ego + translation.
struct CameraExtrinsics
{
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static CameraExtrinsics identity() { return {}; }

  Vec3 apply(const Vec3 & p_ego) const { return rotation * p_ego + translation; }

  bool operator==(const CameraExtrinsics & o) const
  {
    return rotation == o.rotation && translation == o.translation;
  }
};

/// Throws kInvalidCamera on negative focal lengths or image size.
void validate(const CameraIntrinsics & intr);

/// Throws kInvalidRig unless rotation is orthonormal with det +1 (1e-9).
void validate(const CameraExtrinsics & extr);

struct Box3D
{
  Vec3 center = Vec3::Zero();
  /// (length, width, height); length runs along the heading.
  Vec3 size = Vec3::Ones();
  double yaw = 0.0;
  Category category = Category::kVehicle;
  std::optional<Vec2> velocity;

  bool operator==(const Box3D & o) const
  {
    return center == o.center && size == o.size && yaw == o.yaw && category == o.category &&
           velocity.has_value() == o.velocity.has_value() &&
           (!velocity || *velocity == *o.velocity);
  }
};

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// Throws kInvalidBox on non-positive sizes, non-finite fields or yaw
/// outside (-pi, pi].
void validate(const Box3D & box);

struct Camera
{
  std::string name;
  CameraIntrinsics intrinsics;
  CameraExtrinsics extrinsics;

  bool operator==(const Camera &) const = default;
};

class CameraRig
{
public:
  CameraRig() = default;
  /// Throws kInvalidRig on duplicate names or bad extrinsics.
  explicit CameraRig(std::vector<Camera> cameras);

  const std::vector<Camera> & cameras() const { return cameras_; }
  std::size_t size() const { return cameras_.size(); }
  const Camera * find(std::string_view name) const;

  bool operator==(const CameraRig &) const = default;

private:
  std::vector<Camera> cameras_;
};

/// 2.5D projection (u*d, v*d, d) of an ego-frame point.
struct Projection
{
  double ud = 0.0;
  double vd = 0.0;
  double d = 0.0;
};

Projection project_point(
  const Vec3 & p_ego, const CameraIntrinsics & intr, const CameraExtrinsics & extr);

/// Bottom-face corners, counter-clockwise seen from above, starting at the
/// front-left corner.
std::array<Vec3, 4> box_ground_corners(const Box3D & box);

CameraIntrinsics rescale_intrinsics(
  const CameraIntrinsics & intr, double target_width, double target_height);

}  // namespace bevh

#endif  // BEVHARMONIZE_GEOMETRY_HPP_
