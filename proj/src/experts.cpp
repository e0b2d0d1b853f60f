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

#include "bevharmonize/experts.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "bevharmonize/counter_rng.hpp"
#include "bevharmonize/error.hpp"
#include "bevharmonize/parallel.hpp"
#include "bevharmonize/record_io.hpp"

namespace bevh
{

namespace
{

constexpr double kZeroNorm = 1e-12;
constexpr std::uint64_t kReplacementStream = 0x5245'504cULL;
constexpr char kMagic[4] = {'B', 'H', 'F', 'M'};
constexpr std::uint32_t kFeatureFormatVersion = 1;

}  // namespace

double pairwise_sum(std::span<const double> values)
{
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

ExpertWeights expert_weights(std::span<const std::pair<std::string, double>> pdirs)
{
  if (pdirs.empty()) throw Error(ErrorCode::kEmptyInput, "no PDIR values");
  double pdir_max = 0.0;
  for (const auto & [id, p] : pdirs) {
    if (!std::isfinite(p) || p < 0.0) {
      throw Error(
        ErrorCode::kNonFinitePdir, "sample '" + id + "' has PDIR " + std::to_string(p));
    }
    pdir_max = std::max(pdir_max, p);
  }
  if (pdir_max == 0.0) throw Error(ErrorCode::kZeroMax, "all PDIR values are zero");

  ExpertWeights w;
  w.pdir_max = pdir_max;
  w.sample_ids.reserve(pdirs.size());
  w.w1.reserve(pdirs.size());
  w.w2.reserve(pdirs.size());
  for (const auto & [id, p] : pdirs) {
    w.sample_ids.push_back(id);
    w.w1.push_back(std::exp(p / pdir_max));
    w.w2.push_back(std::exp((pdir_max - p) / pdir_max));
  }
  const double s1 = pairwise_sum(w.w1);
  const double s2 = pairwise_sum(w.w2);
  for (double & v : w.w1) v /= s1;
  for (double & v : w.w2) v /= s2;
  return w;
}

std::vector<double> per_image_weights(std::span<const double> per_sample, std::size_t cameras)
{
  std::vector<double> out;
  out.reserve(per_sample.size() * cameras);
  for (double w : per_sample) out.insert(out.end(), cameras, w);
  return out;
}

FeatureMap::FeatureMap(
  std::size_t channels, std::size_t height, std::size_t width, std::vector<double> data)
: channels_(channels), height_(height), width_(width), data_(std::move(data))
{
  if (data_.size() != channels * height * width) {
    throw Error(
      ErrorCode::kShapeMismatch, "feature data has " + std::to_string(data_.size()) +
                                   " values, expected " +
                                   std::to_string(channels * height * width));
  }
  if (!std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorCode::kShapeMismatch, "feature data contains non-finite values");
  }
}

FeatureMap FeatureMap::scaled(double factor) const
{
  std::vector<double> out(data_);
  for (double & v : out) v *= factor;
  return FeatureMap(channels_, height_, width_, std::move(out));
}

namespace
{

double safe_cosine(double dot, double na, double nb, std::size_t & zeros)
{
  if (std::sqrt(na) < kZeroNorm || std::sqrt(nb) < kZeroNorm) {
    ++zeros;
    return 0.0;
  }
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

// Mean cosine between a and the first `channels` channels of b.
double mean_cosine(
  const FeatureMap & a, const FeatureMap & b, std::size_t channels, CosineMode mode,
  std::size_t & zeros)
{
  const std::size_t hw = a.locations();
  const auto da = a.data();
  const auto db = b.data();
  if (mode == CosineMode::kFlatten) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < channels * hw; ++i) {
      dot += da[i] * db[i];
      na += da[i] * da[i];
      nb += db[i] * db[i];
    }
    return safe_cosine(dot, na, nb, zeros);
  }

  std::vector<double> cosines(hw);
  for (std::size_t loc = 0; loc < hw; ++loc) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const double x = da[c * hw + loc];
      const double y = db[c * hw + loc];
      dot += x * y;
      na += x * x;
      nb += y * y;
    }
    cosines[loc] = safe_cosine(dot, na, nb, zeros);
  }
  return pairwise_sum(cosines) / static_cast<double>(hw);
}

void check_spatial(const FeatureMap & a, const FeatureMap & b, std::size_t index)
{
  if (a.height() != b.height() || a.width() != b.width()) {
    throw Error(
      ErrorCode::kShapeMismatch, "spatial shape differs at image " + std::to_string(index));
  }
  if (a.locations() == 0) {
    throw Error(ErrorCode::kShapeMismatch, "empty feature map at image " + std::to_string(index));
  }
}

LossResult reduce(std::span<const double> terms, std::span<const std::size_t> zeros)
{
  LossResult r;
  r.loss = pairwise_sum(terms);
  for (std::size_t z : zeros) r.zero_norm_locations += z;
  return r;
}

}  // namespace

LossResult expert_distill_loss(
  std::span<const FeatureMap> student, std::span<const FeatureMap> teacher,
  std::span<const double> weights, CosineMode mode, unsigned threads)
{
  if (student.size() != teacher.size() || student.size() != weights.size()) {
    throw Error(ErrorCode::kShapeMismatch, "student, teacher and weight counts differ");
  }
  for (std::size_t i = 0; i < student.size(); ++i) {
    check_spatial(student[i], teacher[i], i);
    if (student[i].channels() != teacher[i].channels()) {
      throw Error(ErrorCode::kShapeMismatch, "channel count differs at image " + std::to_string(i));
    }
  }
  std::vector<double> terms(student.size());
  std::vector<std::size_t> zeros(student.size(), 0);
  parallel_for(student.size(), threads, [&](std::size_t i) {
    const double cos = mean_cosine(student[i], teacher[i], student[i].channels(), mode, zeros[i]);
    terms[i] = weights[i] * (1.0 - cos);
  });
  return reduce(terms, zeros);
}

LossResult semantic_distill_loss(
  std::span<const FeatureMap> teacher_projected, std::span<const FeatureMap> student,
  std::size_t k_channels, CosineMode mode, unsigned threads)
{
  if (teacher_projected.size() != student.size()) {
    throw Error(ErrorCode::kShapeMismatch, "teacher and student counts differ");
  }
  if (k_channels == 0) throw Error(ErrorCode::kBadK, "k_channels must be >= 1");
  for (std::size_t i = 0; i < student.size(); ++i) {
    if (k_channels > student[i].channels()) {
      throw Error(
        ErrorCode::kBadK, "k_channels " + std::to_string(k_channels) + " exceeds the " +
                            std::to_string(student[i].channels()) + " student channels");
    }
    if (teacher_projected[i].channels() != k_channels) {
      throw Error(
        ErrorCode::kShapeMismatch,
        "projected teacher has " + std::to_string(teacher_projected[i].channels()) +
          " channels, expected " + std::to_string(k_channels));
    }
    check_spatial(teacher_projected[i], student[i], i);
  }
  std::vector<double> terms(student.size());
  std::vector<std::size_t> zeros(student.size(), 0);
  parallel_for(student.size(), threads, [&](std::size_t i) {
    terms[i] = 1.0 - mean_cosine(teacher_projected[i], student[i], k_channels, mode, zeros[i]);
  });
  return reduce(terms, zeros);
}

ReplacementMask replacement_mask(
  const ReplacementSchedule & schedule, std::span<const std::string> sample_ids,
  std::size_t cameras)
{
  const double p = schedule.probability;
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::kInvalidProbability, "probability must lie in [0, 1]");
  }
  const CounterRng rng(schedule.seed);
  ReplacementMask mask{sample_ids.size(), cameras, std::vector<std::uint8_t>(sample_ids.size() * cameras)};
  for (std::size_t s = 0; s < sample_ids.size(); ++s) {
    for (std::size_t c = 0; c < cameras; ++c) {
      // uniform() < 1 always, so p == 1 replaces everything and p == 0 nothing.
      mask.replace[s * cameras + c] = rng.uniform(kReplacementStream, s, c) < p ? 1 : 0;
    }
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Feature map files

namespace
{

void put_u32(std::string & out, std::uint32_t v)
{
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset)
{
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  return v;
}

}  // namespace

std::string encode_feature_maps(std::span<const FeatureMap> maps)
{
  const std::size_t c = maps.empty() ? 0 : maps.front().channels();
  const std::size_t h = maps.empty() ? 0 : maps.front().height();
  const std::size_t w = maps.empty() ? 0 : maps.front().width();
  for (const FeatureMap & m : maps) {
    if (m.channels() != c || m.height() != h || m.width() != w) {
      throw Error(ErrorCode::kShapeMismatch, "all feature maps in a file must share one shape");
    }
  }
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, kFeatureFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(c));
  put_u32(out, static_cast<std::uint32_t>(h));
  put_u32(out, static_cast<std::uint32_t>(w));
  put_u32(out, static_cast<std::uint32_t>(maps.size()));
  out.reserve(out.size() + 4 * c * h * w * maps.size());
  for (const FeatureMap & m : maps) {
    for (double v : m.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

void write_feature_maps(const std::filesystem::path & path, std::span<const FeatureMap> maps)
{
  record_io::write_atomic(path, encode_feature_maps(maps));
}

std::vector<FeatureMap> decode_feature_maps(std::string_view bytes, std::string_view source)
{
  auto fail = [&](const std::string & what) -> Error {
    return Error(ErrorCode::kParseError, std::string(source) + ": " + what);
  };
  constexpr std::size_t kHeader = 24;
  if (bytes.size() < kHeader || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw fail("not a feature map file");
  }
  if (get_u32(bytes, 4) != kFeatureFormatVersion) throw fail("unsupported feature map version");
  const std::size_t c = get_u32(bytes, 8);
  const std::size_t h = get_u32(bytes, 12);
  const std::size_t w = get_u32(bytes, 16);
  const std::size_t count = get_u32(bytes, 20);
  const std::size_t per_map = c * h * w;
  if (bytes.size() != kHeader + 4 * per_map * count) {
    throw fail("payload size does not match header (" + std::to_string(count) + " x " +
               std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w) + ")");
  }
  std::vector<FeatureMap> maps;
  maps.reserve(count);
  std::size_t offset = kHeader;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> data(per_map);
    for (double & v : data) {
      v = static_cast<double>(std::bit_cast<float>(get_u32(bytes, offset)));
      offset += 4;
    }
    try {
      maps.emplace_back(c, h, w, std::move(data));
    } catch (const Error & e) {
      throw fail("image " + std::to_string(i) + ": " + e.what());
    }
  }
  return maps;
}

std::vector<FeatureMap> read_feature_maps(const std::filesystem::path & path)
{
  return decode_feature_maps(record_io::read_text(path), path.string());
}

}  // namespace bevh
