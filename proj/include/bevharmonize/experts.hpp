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

#ifndef BEVHARMONIZE_EXPERTS_HPP_
#define BEVHARMONIZE_EXPERTS_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bevh
{

/// Softmax weights for the two PDIR-biased experts. w1 favors large PDIR,
/// w2 favors small PDIR.
struct ExpertWeights
{
  std::vector<std::string> sample_ids;
  std::vector<double> w1;
  std::vector<double> w2;
  double pdir_max = 0.0;
};

/// Throws kEmptyInput, kNonFinitePdir (also for negative values), kZeroMax.
ExpertWeights expert_weights(std::span<const std::pair<std::string, double>> pdirs);

/// Copies each per-sample weight to every camera image of that sample.
std::vector<double> per_image_weights(std::span<const double> per_sample, std::size_t cameras);

/// Dense C x H x W feature tensor, channel-major.
class FeatureMap
{
public:
  FeatureMap() = default;
  /// Throws kShapeMismatch when data.size() != c*h*w or an entry is not finite.
  FeatureMap(std::size_t channels, std::size_t height, std::size_t width, std::vector<double> data);

  std::size_t channels() const { return channels_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t locations() const { return height_ * width_; }
  std::span<const double> data() const { return data_; }

  double at(std::size_t c, std::size_t y, std::size_t x) const
  {
    return data_[(c * height_ + y) * width_ + x];
  }

  FeatureMap scaled(double factor) const;
  FeatureMap negated() const { return scaled(-1.0); }

private:
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

enum class CosineMode {
  /// Cosine of channel vectors at each (y, x), averaged over locations.
  kPerLocation,
  /// One cosine over the whole flattened tensor.
  kFlatten,
};

struct LossResult
{
  double loss = 0.0;
  /// Locations whose channel vector norm fell below 1e-12; each
  /// contributes cosine 0.
  std::size_t zero_norm_locations = 0;
};

/// Sum_i w_i * (1 - cos(student_i, teacher_i)). Throws kShapeMismatch.
LossResult expert_distill_loss(
  std::span<const FeatureMap> student, std::span<const FeatureMap> teacher,
  std::span<const double> weights, CosineMode mode = CosineMode::kPerLocation,
  unsigned threads = 1);

/// Sum_i (1 - cos(teacher_i, first k channels of student_i)).
/// Throws kShapeMismatch, kBadK.
LossResult semantic_distill_loss(
  std::span<const FeatureMap> teacher_projected, std::span<const FeatureMap> student,
  std::size_t k_channels, CosineMode mode = CosineMode::kPerLocation, unsigned threads = 1);

struct ReplacementSchedule
{
  double probability = 0.0;
  std::uint64_t seed = 0;
};

/// Row-major (sample, camera) booleans.
struct ReplacementMask
{
  std::size_t samples = 0;
  std::size_t cameras = 0;
  std::vector<std::uint8_t> replace;

  bool at(std::size_t sample, std::size_t camera) const
  {
    return replace[sample * cameras + camera] != 0;
  }
};

/// Each entry is true with the schedule probability, drawn from a counter
/// keyed by (seed, sample index, camera index). Throws kInvalidProbability.
ReplacementMask replacement_mask(
  const ReplacementSchedule & schedule, std::span<const std::string> sample_ids,
  std::size_t cameras);

/// Binary layout, all little-endian: "BHFM", u32 version (1), u32 C, u32 H,
/// u32 W, u32 count, then count * C*H*W float32 values, row-major per image.
void write_feature_maps(const std::filesystem::path & path, std::span<const FeatureMap> maps);
std::string encode_feature_maps(std::span<const FeatureMap> maps);
/// Throws kIoError or kParseError.
std::vector<FeatureMap> read_feature_maps(const std::filesystem::path & path);
std::vector<FeatureMap> decode_feature_maps(std::string_view bytes, std::string_view source);

/// Fixed-order pairwise summation; the result depends only on the input order.
double pairwise_sum(std::span<const double> values);

}  // namespace bevh

#endif  // BEVHARMONIZE_EXPERTS_HPP_
