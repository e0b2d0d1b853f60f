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

#include "bevharmonize/pdir.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "bevharmonize/counter_rng.hpp"
#include "bevharmonize/error.hpp"
#include "bevharmonize/parallel.hpp"

namespace bevh
{

namespace
{

// Relative singular-value floor below which two directions count as collapsed.
constexpr double kCollinearTol = 1e-9;
constexpr double kVerticalTol = 1e-12;
constexpr std::uint64_t kSplitStream = 0x5350'4c49'5400ULL;

}  // namespace

GroundPlane fit_ground_plane(std::span<const Vec3> points)
{
  if (points.size() < 3) {
    throw Error(
      ErrorCode::kDegenerateGeometry,
      "need at least 3 points, got " + std::to_string(points.size()));
  }
  Vec3 centroid = Vec3::Zero();
  for (const Vec3 & p : points) centroid += p;
  centroid /= static_cast<double>(points.size());

  Eigen::MatrixX3d centered(points.size(), 3);
  for (std::size_t i = 0; i < points.size(); ++i) {
    centered.row(static_cast<Eigen::Index>(i)) = (points[i] - centroid).transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixX3d> svd(centered, Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (sv(0) == 0.0 || sv(1) <= kCollinearTol * sv(0)) {
    throw Error(ErrorCode::kDegenerateGeometry, "points are collinear or coincident");
  }

  Vec3 normal = svd.matrixV().col(2).normalized();
  // Canonical sign: b >= 0, falling back to c then a when b vanishes.
  const double pivot = normal.y() != 0.0 ? normal.y() : (normal.z() != 0.0 ? normal.z() : normal.x());
  if (pivot < 0.0) normal = -normal;

  return {normal.x(), normal.y(), normal.z(), -normal.dot(centroid)};
}

double pavement_row(const GroundPlane & plane, double depth)
{
  if (std::abs(plane.b) < kVerticalTol) {
    throw Error(ErrorCode::kVerticalPlane, "plane has no vd component");
  }
  if (!(depth > 0.0)) {
    throw Error(ErrorCode::kNonPositiveDepth, "depth " + std::to_string(depth) + " m");
  }
  return (-plane.d_coef - plane.c * depth) / (plane.b * depth);
}

std::vector<Vec3> ground_points(const Sample & sample, const Camera & camera)
{
  const CameraIntrinsics & k = camera.intrinsics;
  const CameraExtrinsics & e = camera.extrinsics;
  std::vector<Vec3> out;
  out.reserve(4 * sample.boxes.size());
  for (const Box3D & box : sample.boxes) {
    for (const Vec3 & corner : box_ground_corners(box)) {
      if (!(e.apply(corner).z() > kMinDepth)) continue;
      const Projection p = project_point(corner, k, e);
      out.emplace_back(p.ud - k.cx * p.d, p.vd - k.cy * p.d, p.d);
    }
  }
  return out;
}

PdirResult compute_pdir(const Sample & sample, const PdirParams & params)
{
  const Camera * front = sample.rig.find(params.front_camera);
  if (front == nullptr || front->intrinsics.is_ghost()) {
    throw Error(
      ErrorCode::kNoFrontCamera, "sample '" + sample.sample_id + "' has no usable camera '" +
                                   params.front_camera + "'");
  }
  if (!(params.delta_d > 0.0)) {
    throw Error(ErrorCode::kNonPositiveDepth, "delta_d must be positive");
  }

  const std::vector<Vec3> points = ground_points(sample, *front);
  if (points.size() < 3) {
    throw Error(
      ErrorCode::kInsufficientGroundPoints, "sample '" + sample.sample_id + "' has " +
                                              std::to_string(points.size()) +
                                              " ground points in front of the camera");
  }

  PdirResult r;
  r.sample_id = sample.sample_id;
  r.plane = fit_ground_plane(points);
  r.n_ground_points = points.size();
  r.delta_d = params.delta_d;
  if (params.d_min.kind == DMinPolicy::Kind::kFixed) {
    r.d_min = params.d_min.meters;
  } else {
    r.d_min = std::min_element(points.begin(), points.end(), [](const Vec3 & l, const Vec3 & r) {
                return l.z() < r.z();
              })->z();
  }
  r.pdir = std::abs(pavement_row(r.plane, r.d_min) - pavement_row(r.plane, r.d_min + r.delta_d));
  return r;
}

std::vector<PdirOutcome> compute_pdir_batch(
  const DatasetManifest & manifest, const PdirParams & params, unsigned threads)
{
  std::vector<PdirOutcome> out(manifest.samples.size());
  parallel_for(out.size(), threads, [&](std::size_t i) {
    const Sample & s = manifest.samples[i];
    out[i].sample_id = s.sample_id;
    try {
      out[i].result = compute_pdir(s, params);
    } catch (const Error & e) {
      out[i].error = e.what();
    }
  });
  std::sort(out.begin(), out.end(), [](const PdirOutcome & l, const PdirOutcome & r) {
    return l.sample_id < r.sample_id;
  });
  return out;
}

std::vector<double> uniform_edges(double lo, double hi, std::size_t bins)
{
  if (bins == 0 || !(hi > lo)) {
    throw Error(ErrorCode::kInvalidSplit, "histogram needs bins >= 1 and hi > lo");
  }
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  }
  edges.back() = hi;
  return edges;
}

Histogram make_histogram(std::span<const double> values, std::span<const double> edges)
{
  if (edges.size() < 2 || std::adjacent_find(edges.begin(), edges.end(), std::greater_equal<>()) !=
                            edges.end()) {
    throw Error(ErrorCode::kInvalidSplit, "histogram edges must be strictly increasing");
  }
  Histogram h;
  h.edges.assign(edges.begin(), edges.end());
  h.counts.assign(edges.size() - 1, 0);
  for (double v : values) {
    if (v < edges.front()) {
      ++h.underflow;
    } else if (v > edges.back()) {
      ++h.overflow;
    } else if (v == edges.back()) {
      ++h.counts.back();
    } else {
      auto it = std::upper_bound(edges.begin(), edges.end(), v);
      ++h.counts[static_cast<std::size_t>(it - edges.begin()) - 1];
    }
  }
  return h;
}

namespace
{

// Rank r of N goes to bin floor(r * n / N); bin sizes differ by at most one.
std::size_t rank_to_bin(std::size_t rank, std::size_t total, std::size_t bins)
{
  return rank * bins / total;
}

}  // namespace

SplitResult split_dataset(
  const DatasetManifest & manifest, const SplitStrategy & strategy, const PdirParams & params,
  unsigned threads)
{
  const std::size_t n = manifest.samples.size();
  if (n == 0) throw Error(ErrorCode::kInvalidSplit, "manifest has no samples");

  SplitResult result;
  result.assignments.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.assignments[i].sample_id = manifest.samples[i].sample_id;

  switch (strategy.kind) {
    case SplitStrategy::Kind::kDataset: {
      std::map<std::string, std::size_t> index_of;
      for (std::size_t i = 0; i < n; ++i) {
        const std::string & ds = manifest.samples[i].dataset_id;
        auto [it, inserted] = index_of.emplace(ds, result.subset_labels.size());
        if (inserted) result.subset_labels.push_back(ds);
        result.assignments[i].subset = it->second;
      }
      if (result.subset_labels.size() < 2) {
        throw Error(
          ErrorCode::kInvalidSplit, "dataset split needs at least two distinct dataset ids");
      }
      return result;
    }

    case SplitStrategy::Kind::kRandom: {
      if (strategy.n_experts == 0) throw Error(ErrorCode::kInvalidSplit, "n_experts must be >= 1");
      const CounterRng rng(strategy.seed);
      std::vector<std::pair<std::uint64_t, std::size_t>> keyed(n);
      for (std::size_t i = 0; i < n; ++i) keyed[i] = {rng.bits(kSplitStream, i), i};
      std::sort(keyed.begin(), keyed.end());
      for (std::size_t rank = 0; rank < n; ++rank) {
        result.assignments[keyed[rank].second].subset = rank_to_bin(rank, n, strategy.n_experts);
      }
      break;
    }

    case SplitStrategy::Kind::kPdir: {
      if (strategy.n_experts == 0) throw Error(ErrorCode::kInvalidSplit, "n_experts must be >= 1");
      std::vector<std::optional<double>> pdirs(n);
      std::vector<std::string> errors(n);
      parallel_for(n, threads, [&](std::size_t i) {
        try {
          pdirs[i] = compute_pdir(manifest.samples[i], params).pdir;
        } catch (const Error & e) {
          errors[i] = e.what();
        }
      });

      std::vector<std::size_t> ok;
      std::vector<std::size_t> failed;
      for (std::size_t i = 0; i < n; ++i) (pdirs[i] ? ok : failed).push_back(i);
      std::sort(ok.begin(), ok.end(), [&](std::size_t l, std::size_t r) {
        if (*pdirs[l] != *pdirs[r]) return *pdirs[l] < *pdirs[r];
        return manifest.samples[l].sample_id < manifest.samples[r].sample_id;
      });
      // Uncomputable samples take the median ranks, keeping bins balanced.
      std::vector<std::size_t> order(ok.begin(), ok.begin() + static_cast<std::ptrdiff_t>(ok.size() / 2));
      order.insert(order.end(), failed.begin(), failed.end());
      order.insert(order.end(), ok.begin() + static_cast<std::ptrdiff_t>(ok.size() / 2), ok.end());

      for (std::size_t rank = 0; rank < n; ++rank) {
        SplitAssignment & a = result.assignments[order[rank]];
        a.subset = rank_to_bin(rank, n, strategy.n_experts);
        a.pdir = pdirs[order[rank]];
        if (!a.pdir) a.flag = errors[order[rank]];
      }
      break;
    }
  }

  for (std::size_t b = 0; b < strategy.n_experts; ++b) {
    result.subset_labels.push_back("subset_" + std::to_string(b));
  }
  return result;
}

}  // namespace bevh
