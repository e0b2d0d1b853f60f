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

#ifndef BEVHARMONIZE_METRICS_HPP_
#define BEVHARMONIZE_METRICS_HPP_

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bevharmonize/dataset_io.hpp"
#include "bevharmonize/geometry.hpp"

namespace bevh
{

struct Detection
{
  std::string sample_id;
  Box3D box;
  double score = 0.0;

  bool operator==(const Detection &) const = default;
};

/// Matching and AP follow the nuScenes detection protocol, restricted to
/// the translation, scale and orientation errors.
struct EvalConfig
{
  std::vector<double> ap_thresholds = {0.5, 1.0, 2.0, 4.0};
  double tp_threshold = 2.0;
  /// Half-width of the square BEV evaluation window, closed at the edges.
  double range = 50.0;
  double min_recall = 0.1;
  double min_precision = 0.1;
  /// Report unfloored area under the interpolated PR curve instead.
  bool raw_ap = false;

  nlohmann::json to_json() const;
};

bool in_range(const Vec3 & center, double range = 50.0);
std::vector<Box3D> filter_range(std::span<const Box3D> boxes, double range = 50.0);
std::vector<Detection> filter_range(std::span<const Detection> dets, double range = 50.0);

using GtBySample = std::map<std::string, std::vector<Box3D>, std::less<>>;

struct MatchedPair
{
  /// Index into the detection list passed to match_detections.
  std::size_t detection = 0;
  std::string sample_id;
  /// Index into gts[sample_id].
  std::size_t gt = 0;
  double distance = 0.0;
};

struct MatchResult
{
  /// Detection indices, highest score first; ties by (sample_id, index).
  std::vector<std::size_t> order;
  /// Aligned with order.
  std::vector<bool> is_tp;
  std::vector<MatchedPair> pairs;
};

/// Greedy nuScenes matching: in descending score order each detection takes
/// the nearest unmatched same-sample GT if its BEV center distance is
/// strictly below threshold.
MatchResult match_detections(
  const GtBySample & gts, std::span<const Detection> dets, double threshold);

/// nullopt when n_gt == 0 (the category is excluded from the means).
std::optional<double> average_precision(
  const MatchResult & match, std::size_t n_gt, const EvalConfig & config = {});

/// numpy.interp with left = fp[0] and right = 0, including its handling of
/// repeated xp values (the last of a run wins).
double interp_right_zero(double x, std::span<const double> xp, std::span<const double> fp);

struct TpErrors
{
  double ate = 1.0;
  double ase = 1.0;
  double aoe = 1.0;
  std::size_t n_pairs = 0;
};

/// Volume IoU of two boxes sharing center and heading.
double aligned_scale_iou(const Vec3 & size_a, const Vec3 & size_b);
/// Smallest absolute heading difference, in [0, pi].
double yaw_difference(double a, double b);

/// Means over (gt, detection) pairs. No pairs -> all errors 1.
TpErrors tp_errors(std::span<const std::pair<Box3D, Box3D>> pairs);

double nds_plus(double ap, double ate, double ase, double aoe);

struct ClassMetrics
{
  Category category = Category::kVehicle;
  std::size_t n_gt = 0;
  std::size_t n_det = 0;
  /// False when n_gt == 0; the metric fields are then meaningless.
  bool evaluated = false;
  double ap = 0.0;
  std::vector<double> ap_per_threshold;
  double ate = 1.0;
  double ase = 1.0;
  double aoe = 1.0;
  double nds_plus = 0.0;
};

struct EvalReport
{
  std::array<ClassMetrics, 3> per_class;
  double map = 0.0;
  double mnds_plus = 0.0;
  EvalConfig config;
};

/// Throws kUnknownSampleId for detections on samples missing from the
/// ground truth and kEmptyGroundTruth if no category has any GT in range.
EvalReport evaluate(
  const DatasetManifest & gt, std::span<const Detection> dets, const EvalConfig & config = {},
  unsigned threads = 1);

nlohmann::json report_to_json(const EvalReport & report);
std::string report_to_table(const EvalReport & report);

/// Detections share the manifest record layout with a "score" on every box;
/// cameras may be omitted. A manifest file is also accepted, with every box
/// scored 1. Throws kIoError, kParseError, kUnknownCategory.
std::vector<Detection> parse_detections(
  std::istream & in, std::string_view source, const CategoryMap & cmap);
std::vector<Detection> load_detections(
  const std::filesystem::path & path, const CategoryMap & cmap);
std::string serialize_detections(
  std::span<const Detection> dets, const nlohmann::json & provenance = nullptr);

}  // namespace bevh

#endif  // BEVHARMONIZE_METRICS_HPP_
