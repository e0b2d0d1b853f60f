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

#ifndef BEVHARMONIZE_PDIR_HPP_
#define BEVHARMONIZE_PDIR_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bevharmonize/dataset_io.hpp"
#include "bevharmonize/geometry.hpp"

namespace bevh
{

/// a*ud + b*vd + c*d + d_coef = 0 in principal-point-centered 2.5D
/// coordinates, with |(a, b, c)| = 1 and b >= 0.
struct GroundPlane
{
  double a = 0.0;
  double b = 1.0;
  double c = 0.0;
  double d_coef = 0.0;

  /// Signed orthogonal distance of a (ud, vd, d) point.
  double residual(const Vec3 & p) const { return a * p.x() + b * p.y() + c * p.z() + d_coef; }
};

/// Total-least-squares plane through (ud, vd, d) points. Throws
/// kDegenerateGeometry for fewer than three points or collinear input.
GroundPlane fit_ground_plane(std::span<const Vec3> points);

/// Centered image row of the pavement at the given depth on the principal
/// column. Throws kVerticalPlane or kNonPositiveDepth.
double pavement_row(const GroundPlane & plane, double depth);

struct DMinPolicy
{
  enum class Kind { kFixed, kMinObjectDepth };
  Kind kind = Kind::kFixed;
  double meters = 5.0;

  static DMinPolicy fixed(double meters) { return {Kind::kFixed, meters}; }
  static DMinPolicy min_object_depth() { return {Kind::kMinObjectDepth, 0.0}; }
};

struct PdirParams
{
  std::string front_camera = "CAM_FRONT";
  double delta_d = 10.0;
  DMinPolicy d_min = DMinPolicy::fixed(5.0);
};

struct PdirResult
{
  std::string sample_id;
  double pdir = 0.0;
  double d_min = 0.0;
  double delta_d = 0.0;
  std::size_t n_ground_points = 0;
  GroundPlane plane;
};

/// Bottom corners of every box in front of the camera, as (u - cx) * d,
/// (v - cy) * d, d. Ghost cameras yield kGhostCameraProjection.
std::vector<Vec3> ground_points(const Sample & sample, const Camera & camera);

/// Pixel span |v(d_min) - v(d_min + delta_d)| of the fitted pavement.
/// Throws kNoFrontCamera, kInsufficientGroundPoints, kDegenerateGeometry,
/// kVerticalPlane, kNonPositiveDepth.
PdirResult compute_pdir(const Sample & sample, const PdirParams & params);

struct PdirOutcome
{
  std::string sample_id;
  std::optional<PdirResult> result;
  /// Error text when result is empty.
  std::string error;
};

/// Per-sample PDIR over a manifest, sorted by sample_id. Failures are
/// reported per sample rather than thrown.
std::vector<PdirOutcome> compute_pdir_batch(
  const DatasetManifest & manifest, const PdirParams & params, unsigned threads = 1);

struct Histogram
{
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  std::size_t underflow = 0;
  std::size_t overflow = 0;
};

/// Bins are [e_i, e_{i+1}) except the last, which is closed.
/// Throws kInvalidSplit unless edges has >= 2 strictly increasing entries.
Histogram make_histogram(std::span<const double> values, std::span<const double> edges);
std::vector<double> uniform_edges(double lo, double hi, std::size_t bins);

struct SplitStrategy
{
  enum class Kind { kPdir, kDataset, kRandom };
  Kind kind = Kind::kPdir;
  std::size_t n_experts = 2;
  std::uint64_t seed = 0;

  static SplitStrategy pdir(std::size_t n) { return {Kind::kPdir, n, 0}; }
  static SplitStrategy by_dataset() { return {Kind::kDataset, 0, 0}; }
  static SplitStrategy random(std::size_t n, std::uint64_t seed) { return {Kind::kRandom, n, seed}; }
};

struct SplitAssignment
{
  std::string sample_id;
  std::size_t subset = 0;
  std::optional<double> pdir;
  /// Set when PDIR could not be computed and the sample was median-binned.
  std::optional<std::string> flag;
};

struct SplitResult
{
  /// In manifest order.
  std::vector<SplitAssignment> assignments;
  std::vector<std::string> subset_labels;
};

/// Throws kInvalidSplit on an empty manifest, n_experts == 0, or a
/// dataset split over fewer than two dataset ids.
SplitResult split_dataset(
  const DatasetManifest & manifest, const SplitStrategy & strategy, const PdirParams & params = {},
  unsigned threads = 1);

}  // namespace bevh

#endif  // BEVHARMONIZE_PDIR_HPP_
