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

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "bevharmonize/experts.hpp"
#include "bevharmonize/synth.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace bevh
{
namespace
{

using testing::code_of;
using Pdirs = std::vector<std::pair<std::string, double>>;

Pdirs named(const std::vector<double> & values)
{
  Pdirs out;
  for (std::size_t i = 0; i < values.size(); ++i) out.emplace_back("s" + std::to_string(i), values[i]);
  return out;
}

double plain_sum(const std::vector<double> & v)
{
  double s = 0;
  for (double x : v) s += x;
  return s;
}

TEST(ExpertWeights, MaxAndZero)
{
  const ExpertWeights w = expert_weights(named({250.0, 0.0}));
  const double e = std::exp(1.0);
  EXPECT_NEAR(w.w1[0], e / (e + 1), 1e-15);
  EXPECT_NEAR(w.w1[1], 1 / (e + 1), 1e-15);
  EXPECT_NEAR(w.w1[0], 0.7310585786300049, 1e-12);
  EXPECT_NEAR(w.w1[1], 0.2689414213699951, 1e-12);
  EXPECT_NEAR(w.w2[0], 0.2689414213699951, 1e-12);
  EXPECT_NEAR(w.w2[1], 0.7310585786300049, 1e-12);
  EXPECT_EQ(w.pdir_max, 250.0);
  EXPECT_EQ(w.sample_ids, (std::vector<std::string>{"s0", "s1"}));
}

TEST(ExpertWeights, UniformAndSingle)
{
  const ExpertWeights w = expert_weights(named({7, 7, 7, 7}));
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(w.w1[i], 0.25, 1e-15);
    EXPECT_NEAR(w.w2[i], 0.25, 1e-15);
  }
  const ExpertWeights one = expert_weights(named({3}));
  EXPECT_EQ(one.w1, std::vector<double>{1.0});
  EXPECT_EQ(one.w2, std::vector<double>{1.0});
}

TEST(ExpertWeights, Errors)
{
  EXPECT_EQ(code_of([] { expert_weights(Pdirs{}); }), ErrorCode::kEmptyInput);
  EXPECT_EQ(code_of([] { expert_weights(named({1, std::nan("")})); }), ErrorCode::kNonFinitePdir);
  EXPECT_EQ(code_of([] { expert_weights(named({1, std::numeric_limits<double>::infinity()})); }),
            ErrorCode::kNonFinitePdir);
  EXPECT_EQ(code_of([] { expert_weights(named({1, -2})); }), ErrorCode::kNonFinitePdir);
  EXPECT_EQ(code_of([] { expert_weights(named({0, 0})); }), ErrorCode::kZeroMax);
}

TEST(ExpertWeights, SumsAndMonotonicityProperty)
{
  std::mt19937_64 gen(21);
  std::uniform_int_distribution<int> len(1, 200);
  std::uniform_real_distribution<double> u(0, 400);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(len(gen)));
    for (double & x : v) x = u(gen);
    const ExpertWeights w = expert_weights(named(v));
    EXPECT_NEAR(plain_sum(w.w1), 1, 1e-12);
    EXPECT_NEAR(plain_sum(w.w2), 1, 1e-12);
    for (std::size_t i = 0; i < v.size(); ++i) {
      EXPECT_GE(w.w1[i], 0);
      EXPECT_LE(w.w1[i], 1);
      for (std::size_t j = 0; j < v.size(); ++j) {
        if (v[i] > v[j]) {
          EXPECT_GT(w.w1[i], w.w1[j]);
          EXPECT_LT(w.w2[i], w.w2[j]);
        }
      }
    }
  }
}

TEST(PerImageWeights, RepeatsPerCamera)
{
  const std::vector<double> w = {0.25, 0.75};
  EXPECT_EQ(per_image_weights(w, 3), (std::vector<double>{0.25, 0.25, 0.25, 0.75, 0.75, 0.75}));
}

TEST(FeatureMap, ShapeChecks)
{
  EXPECT_EQ(code_of([] { FeatureMap(2, 2, 2, std::vector<double>(7)); }), ErrorCode::kShapeMismatch);
  std::vector<double> bad(8, 1.0);
  bad[3] = std::nan("");
  EXPECT_EQ(code_of([&] { FeatureMap(2, 2, 2, bad); }), ErrorCode::kShapeMismatch);
  const FeatureMap f(2, 1, 2, {1, 2, 3, 4});
  EXPECT_EQ(f.at(1, 0, 1), 4);
  EXPECT_EQ(f.negated().at(0, 0, 0), -1);
}

TEST(DistillLoss, IdenticalAndNegated)
{
  const auto a = synth::generate_feature_maps(1, 4, 8, 6, 5);
  std::vector<FeatureMap> neg;
  for (const auto & f : a) neg.push_back(f.negated());
  const std::vector<double> w = {0.1, 0.2, 0.3, 0.4};
  for (CosineMode mode : {CosineMode::kPerLocation, CosineMode::kFlatten}) {
    EXPECT_NEAR(expert_distill_loss(a, a, w, mode).loss, 0, 1e-12);
    EXPECT_NEAR(expert_distill_loss(a, neg, w, mode).loss, 2, 1e-9);
  }
}

TEST(DistillLoss, MatchesLoopOracle)
{
  std::mt19937_64 gen(8);
  std::uniform_int_distribution<std::size_t> dim(1, 8), sp(1, 16), cnt(1, 5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t c = dim(gen), h = sp(gen), w = sp(gen), n = cnt(gen);
    const auto a = synth::generate_feature_maps(2 * trial, n, c, h, w);
    const auto b = synth::generate_feature_maps(2 * trial + 1, n, c, h, w);
    std::vector<double> weights(n);
    for (double & x : weights) x = u(gen);
    for (bool flatten : {false, true}) {
      const CosineMode mode = flatten ? CosineMode::kFlatten : CosineMode::kPerLocation;
      const double got = expert_distill_loss(a, b, weights, mode, 3).loss;
      EXPECT_NEAR(got, oracle::loss_loop(a, b, weights, c, flatten), 1e-7);
      EXPECT_GE(got, 0);
      EXPECT_LE(got, 2 * plain_sum(weights) + 1e-12);
    }
  }
}

TEST(DistillLoss, SmallHandComputedCase)
{
  // One location pair at 90 degrees, one identical: mean cosine 0.5.
  const FeatureMap s(2, 1, 2, {1, 1, 0, 0});
  const FeatureMap t(2, 1, 2, {0, 1, 1, 0});
  const std::vector<FeatureMap> sv = {s}, tv = {t};
  const std::vector<double> w = {2.0};
  EXPECT_NEAR(expert_distill_loss(sv, tv, w).loss, 2 * 0.5, 1e-15);
}

TEST(DistillLoss, ZeroNormLocationsCounted)
{
  const FeatureMap s(2, 1, 2, {0, 1, 0, 1});
  const FeatureMap t(2, 1, 2, {3, 1, 4, 1});
  const std::vector<FeatureMap> sv = {s}, tv = {t};
  const std::vector<double> w = {1.0};
  const LossResult r = expert_distill_loss(sv, tv, w);
  EXPECT_EQ(r.zero_norm_locations, 1u);
  EXPECT_NEAR(r.loss, 1 - (0 + 1) / 2.0, 1e-12);
}

TEST(DistillLoss, ScaleInvariance)
{
  const auto a = synth::generate_feature_maps(31, 3, 5, 7, 9);
  const auto b = synth::generate_feature_maps(32, 3, 5, 7, 9);
  const std::vector<double> w = {0.5, 1.5, 1.0};
  for (CosineMode mode : {CosineMode::kPerLocation, CosineMode::kFlatten}) {
    const double base = expert_distill_loss(a, b, w, mode).loss;
    for (double k : {1e-3, 0.5, 7.0, 1e4}) {
      std::vector<FeatureMap> as, bs;
      for (const auto & f : a) as.push_back(f.scaled(k));
      for (const auto & f : b) bs.push_back(f.scaled(k * 3));
      EXPECT_NEAR(expert_distill_loss(as, b, w, mode).loss, base, 1e-9);
      EXPECT_NEAR(expert_distill_loss(a, bs, w, mode).loss, base, 1e-9);
      EXPECT_NEAR(semantic_distill_loss(bs, as, 5, mode).loss, semantic_distill_loss(b, a, 5, mode).loss, 1e-9);
    }
  }
}

TEST(DistillLoss, ShapeErrorsAndThreadStability)
{
  const auto a = synth::generate_feature_maps(1, 2, 3, 4, 4);
  const auto b = synth::generate_feature_maps(2, 2, 3, 4, 5);
  const std::vector<double> w = {1, 1};
  const std::vector<double> w1 = {1};
  EXPECT_EQ(code_of([&] { expert_distill_loss(a, b, w); }), ErrorCode::kShapeMismatch);
  EXPECT_EQ(code_of([&] { expert_distill_loss(a, a, w1); }), ErrorCode::kShapeMismatch);

  const auto big_a = synth::generate_feature_maps(5, 37, 8, 16, 16);
  const auto big_b = synth::generate_feature_maps(6, 37, 8, 16, 16);
  const std::vector<double> ones(37, 1.0);
  const double l1 = expert_distill_loss(big_a, big_b, ones, CosineMode::kPerLocation, 1).loss;
  for (unsigned t : {2u, 3u, 8u}) {
    EXPECT_EQ(expert_distill_loss(big_a, big_b, ones, CosineMode::kPerLocation, t).loss, l1);
  }
}

TEST(SemanticLoss, MaskedChannels)
{
  const auto student = synth::generate_feature_maps(11, 3, 8, 5, 6);
  std::vector<FeatureMap> teacher;
  for (const FeatureMap & s : student) {
    std::vector<double> first(s.data().begin(), s.data().begin() + 3 * 5 * 6);
    teacher.emplace_back(3, 5, 6, first);
  }
  EXPECT_NEAR(semantic_distill_loss(teacher, student, 3).loss, 0, 1e-12);

  const auto other = synth::generate_feature_maps(12, 3, 3, 5, 6);
  const std::vector<double> ones(3, 1.0);
  EXPECT_NEAR(semantic_distill_loss(other, student, 3).loss, oracle::loss_loop(student, other, ones, 3), 1e-7);

  const auto full = synth::generate_feature_maps(13, 3, 8, 5, 6);
  EXPECT_EQ(semantic_distill_loss(full, student, 8).loss, expert_distill_loss(full, student, ones).loss);

  EXPECT_EQ(code_of([&] { semantic_distill_loss(other, student, 0); }), ErrorCode::kBadK);
  EXPECT_EQ(code_of([&] { semantic_distill_loss(full, student, 9); }), ErrorCode::kBadK);
  EXPECT_EQ(code_of([&] { semantic_distill_loss(other, student, 4); }), ErrorCode::kShapeMismatch);
}

TEST(ReplacementMask, ProbabilityEdgesAndRate)
{
  std::vector<std::string> ids;
  for (int i = 0; i < 1667; ++i) ids.push_back("s" + std::to_string(i));
  const ReplacementMask none = replacement_mask({0.0, 5}, ids, 6);
  const ReplacementMask all = replacement_mask({1.0, 5}, ids, 6);
  std::size_t n0 = 0, n1 = 0;
  for (auto v : none.replace) n0 += v;
  for (auto v : all.replace) n1 += v;
  EXPECT_EQ(n0, 0u);
  EXPECT_EQ(n1, ids.size() * 6);

  const ReplacementMask half = replacement_mask({0.5, 5}, ids, 6);
  ASSERT_GE(half.replace.size(), 10000u);
  double hits = 0;
  for (auto v : half.replace) hits += v;
  EXPECT_NEAR(hits / static_cast<double>(half.replace.size()), 0.5, 0.02);
  EXPECT_EQ(replacement_mask({0.5, 5}, ids, 6).replace, half.replace);
  EXPECT_NE(replacement_mask({0.5, 6}, ids, 6).replace, half.replace);

  EXPECT_EQ(code_of([&] { replacement_mask({1.5, 0}, ids, 6); }), ErrorCode::kInvalidProbability);
  EXPECT_EQ(code_of([&] { replacement_mask({-0.1, 0}, ids, 6); }), ErrorCode::kInvalidProbability);
}

TEST(FeatureFile, RoundTrip)
{
  // Values exactly representable in float32 survive unchanged.
  const FeatureMap a(2, 2, 3, {0.5, -1, 2, 0.25, 3, -4, 1, 1, 0, -0.125, 8, 16});
  const std::vector<FeatureMap> maps = {a, a.negated()};
  const std::string bytes = encode_feature_maps(maps);
  EXPECT_EQ(bytes.size(), 4 + 5 * 4 + 2 * 12 * 4u);
  EXPECT_EQ(bytes.substr(0, 4), "BHFM");
  const auto back = decode_feature_maps(bytes, "mem");
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    ASSERT_EQ(back[i].channels(), 2u);
    ASSERT_EQ(back[i].height(), 2u);
    ASSERT_EQ(back[i].width(), 3u);
    for (std::size_t k = 0; k < 12; ++k) EXPECT_EQ(back[i].data()[k], maps[i].data()[k]);
  }

  const auto path = std::filesystem::temp_directory_path() / "bevh_feature_roundtrip.bin";
  write_feature_maps(path, maps);
  EXPECT_EQ(read_feature_maps(path).size(), 2u);
  std::filesystem::remove(path);

  EXPECT_EQ(code_of([&] { decode_feature_maps(bytes.substr(0, bytes.size() - 1), "mem"); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([&] { decode_feature_maps("XXXX" + bytes.substr(4), "mem"); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { read_feature_maps("/nonexistent/f.bin"); }), ErrorCode::kIoError);
}

TEST(PairwiseSum, MatchesPlainSumOnExactValues)
{
  std::vector<double> v;
  for (int i = 0; i < 1000; ++i) v.push_back(i * 0.5);
  EXPECT_EQ(pairwise_sum(v), plain_sum(v));
  EXPECT_EQ(pairwise_sum(std::vector<double>{}), 0.0);
}

}  // namespace
}  // namespace bevh
