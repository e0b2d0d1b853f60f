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

#include "bevharmonize/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>

#include "bevharmonize/error.hpp"
#include "bevharmonize/parallel.hpp"
#include "bevharmonize/record_io.hpp"

namespace bevh
{

using nlohmann::json;

nlohmann::json EvalConfig::to_json() const
{
  return json{
    {"ap_thresholds", ap_thresholds}, {"tp_threshold", tp_threshold}, {"range", range},
    {"min_recall", min_recall},       {"min_precision", min_precision}, {"raw_ap", raw_ap}};
}

bool in_range(const Vec3 & center, double range)
{
  return std::abs(center.x()) <= range && std::abs(center.y()) <= range;
}

std::vector<Box3D> filter_range(std::span<const Box3D> boxes, double range)
{
  std::vector<Box3D> out;
  std::copy_if(boxes.begin(), boxes.end(), std::back_inserter(out), [range](const Box3D & b) {
    return in_range(b.center, range);
  });
  return out;
}

std::vector<Detection> filter_range(std::span<const Detection> dets, double range)
{
  std::vector<Detection> out;
  std::copy_if(dets.begin(), dets.end(), std::back_inserter(out), [range](const Detection & d) {
    return in_range(d.box.center, range);
  });
  return out;
}

namespace
{

double bev_distance(const Vec3 & a, const Vec3 & b) { return std::hypot(a.x() - b.x(), a.y() - b.y()); }

}  // namespace

MatchResult match_detections(const GtBySample & gts, std::span<const Detection> dets, double threshold)
{
  MatchResult result;
  result.order.resize(dets.size());
  std::iota(result.order.begin(), result.order.end(), std::size_t{0});
  std::sort(result.order.begin(), result.order.end(), [&](std::size_t l, std::size_t r) {
    if (dets[l].score != dets[r].score) return dets[l].score > dets[r].score;
    if (dets[l].sample_id != dets[r].sample_id) return dets[l].sample_id < dets[r].sample_id;
    return l < r;
  });

  std::map<std::string_view, std::vector<bool>> taken;
  result.is_tp.reserve(dets.size());
  for (std::size_t idx : result.order) {
    const Detection & det = dets[idx];
    auto it = gts.find(det.sample_id);
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    if (it != gts.end()) {
      std::vector<bool> & used = taken[it->first];
      used.resize(it->second.size(), false);
      for (std::size_t g = 0; g < it->second.size(); ++g) {
        if (used[g]) continue;
        const double dist = bev_distance(it->second[g].center, det.box.center);
        if (dist < best_dist) {
          best_dist = dist;
          best = g;
        }
      }
    }
    const bool tp = best_dist < threshold;
    result.is_tp.push_back(tp);
    if (tp) {
      taken[it->first][best] = true;
      result.pairs.push_back({idx, det.sample_id, best, best_dist});
    }
  }
  return result;
}

double interp_right_zero(double x, std::span<const double> xp, std::span<const double> fp)
{
  if (xp.empty()) return 0.0;
  if (x < xp.front()) return fp.front();
  if (x > xp.back()) return 0.0;
  const std::size_t j =
    static_cast<std::size_t>(std::upper_bound(xp.begin(), xp.end(), x) - xp.begin()) - 1;
  if (j == xp.size() - 1 || xp[j] == x) return fp[j];
  const double slope = (fp[j + 1] - fp[j]) / (xp[j + 1] - xp[j]);
  return slope * (x - xp[j]) + fp[j];
}

std::optional<double> average_precision(
  const MatchResult & match, std::size_t n_gt, const EvalConfig & config)
{
  if (n_gt == 0) return std::nullopt;
  if (match.is_tp.empty()) return 0.0;

  const std::size_t n = match.is_tp.size();
  std::vector<double> precision(n);
  std::vector<double> recall(n);
  double tp = 0.0;
  double fp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    (match.is_tp[i] ? tp : fp) += 1.0;
    precision[i] = tp / (tp + fp);
    recall[i] = tp / static_cast<double>(n_gt);
  }

  constexpr std::size_t kPoints = 101;
  std::vector<double> interp(kPoints);
  for (std::size_t i = 0; i < kPoints; ++i) {
    const double r = i + 1 == kPoints ? 1.0 : static_cast<double>(i) * 0.01;
    interp[i] = interp_right_zero(r, recall, precision);
  }

  double ap = 0.0;
  if (config.raw_ap) {
    double sum = 0.0;
    for (double p : interp) sum += p;
    ap = sum / static_cast<double>(kPoints);
  } else {
    const auto first = static_cast<std::size_t>(std::lround(100.0 * config.min_recall)) + 1;
    if (first >= kPoints) return 0.0;
    double sum = 0.0;
    for (std::size_t i = first; i < kPoints; ++i) {
      sum += std::max(0.0, interp[i] - config.min_precision);
    }
    ap = sum / static_cast<double>(kPoints - first) / (1.0 - config.min_precision);
  }
  return std::clamp(ap, 0.0, 1.0);
}

double aligned_scale_iou(const Vec3 & size_a, const Vec3 & size_b)
{
  const Vec3 inter = size_a.cwiseMin(size_b);
  const double vi = inter.prod();
  const double va = size_a.prod();
  const double vb = size_b.prod();
  return vi / (va + vb - vi);
}

double yaw_difference(double a, double b)
{
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double d = std::fmod(std::abs(a - b), kTwoPi);
  if (d > std::numbers::pi) d = kTwoPi - d;
  return d;
}

TpErrors tp_errors(std::span<const std::pair<Box3D, Box3D>> pairs)
{
  TpErrors e;
  e.n_pairs = pairs.size();
  if (pairs.empty()) return e;
  double ate = 0.0, ase = 0.0, aoe = 0.0;
  for (const auto & [gt, det] : pairs) {
    ate += bev_distance(gt.center, det.center);
    ase += 1.0 - aligned_scale_iou(gt.size, det.size);
    aoe += yaw_difference(gt.yaw, det.yaw);
  }
  const double n = static_cast<double>(pairs.size());
  e.ate = ate / n;
  e.ase = ase / n;
  e.aoe = aoe / n;
  return e;
}

double nds_plus(double ap, double ate, double ase, double aoe)
{
  const double tp_score = (1.0 - std::min(1.0, ate)) + (1.0 - std::min(1.0, ase)) +
                          (1.0 - std::min(1.0, aoe));
  return (1.0 / 6.0) * (3.0 * ap + tp_score);
}

namespace
{

ClassMetrics evaluate_class(
  Category category, const DatasetManifest & gt, std::span<const Detection> dets,
  const EvalConfig & config)
{
  ClassMetrics m;
  m.category = category;

  GtBySample gts;
  for (const Sample & s : gt.samples) {
    std::vector<Box3D> & boxes = gts[s.sample_id];
    for (const Box3D & b : s.boxes) {
      if (b.category == category && in_range(b.center, config.range)) boxes.push_back(b);
    }
    m.n_gt += boxes.size();
  }
  std::vector<Detection> mine;
  for (const Detection & d : dets) {
    if (d.box.category == category && in_range(d.box.center, config.range)) mine.push_back(d);
  }
  m.n_det = mine.size();
  if (m.n_gt == 0) return m;
  m.evaluated = true;

  double ap_sum = 0.0;
  for (double threshold : config.ap_thresholds) {
    const MatchResult match = match_detections(gts, mine, threshold);
    const double ap = *average_precision(match, m.n_gt, config);
    m.ap_per_threshold.push_back(ap);
    ap_sum += ap;
  }
  m.ap = config.ap_thresholds.empty() ? 0.0 : ap_sum / static_cast<double>(config.ap_thresholds.size());

  const MatchResult tp_match = match_detections(gts, mine, config.tp_threshold);
  std::vector<std::pair<Box3D, Box3D>> pairs;
  pairs.reserve(tp_match.pairs.size());
  for (const MatchedPair & p : tp_match.pairs) {
    pairs.emplace_back(gts.find(p.sample_id)->second[p.gt], mine[p.detection].box);
  }
  const TpErrors errors = tp_errors(pairs);
  m.ate = errors.ate;
  m.ase = errors.ase;
  m.aoe = errors.aoe;
  m.nds_plus = nds_plus(m.ap, m.ate, m.ase, m.aoe);
  return m;
}

}  // namespace

EvalReport evaluate(
  const DatasetManifest & gt, std::span<const Detection> dets, const EvalConfig & config,
  unsigned threads)
{
  std::set<std::string_view> known;
  for (const Sample & s : gt.samples) known.insert(s.sample_id);
  for (const Detection & d : dets) {
    if (!known.contains(d.sample_id)) {
      throw Error(
        ErrorCode::kUnknownSampleId, "detection refers to unknown sample '" + d.sample_id + "'");
    }
  }

  EvalReport report;
  report.config = config;
  parallel_for(kAllCategories.size(), threads, [&](std::size_t i) {
    report.per_class[i] = evaluate_class(kAllCategories[i], gt, dets, config);
  });

  double ap_sum = 0.0, nds_sum = 0.0;
  std::size_t n = 0;
  for (const ClassMetrics & m : report.per_class) {
    if (!m.evaluated) continue;
    ap_sum += m.ap;
    nds_sum += m.nds_plus;
    ++n;
  }
  if (n == 0) {
    throw Error(ErrorCode::kEmptyGroundTruth, "no ground truth inside the evaluation range");
  }
  report.map = ap_sum / static_cast<double>(n);
  report.mnds_plus = nds_sum / static_cast<double>(n);
  return report;
}

json report_to_json(const EvalReport & report)
{
  json classes = json::array();
  for (const ClassMetrics & m : report.per_class) {
    json c{
      {"category", category_name(m.category)},
      {"n_gt", m.n_gt},
      {"n_det", m.n_det},
      {"evaluated", m.evaluated}};
    if (m.evaluated) {
      c["ap"] = m.ap;
      c["ap_per_threshold"] = m.ap_per_threshold;
      c["ate"] = m.ate;
      c["ase"] = m.ase;
      c["aoe"] = m.aoe;
      c["nds_plus"] = m.nds_plus;
    }
    classes.push_back(std::move(c));
  }
  return json{
    {"per_class", std::move(classes)},
    {"map", report.map},
    {"mnds_plus", report.mnds_plus},
    {"config", report.config.to_json()}};
}

std::string report_to_table(const EvalReport & report)
{
  std::string out;
  char line[160];
  std::snprintf(
    line, sizeof(line), "%-12s %6s %6s %7s %7s %7s %7s %7s\n", "category", "n_gt", "n_det", "AP",
    "ATE", "ASE", "AOE", "NDS+");
  out += line;
  for (const ClassMetrics & m : report.per_class) {
    const std::string name(category_name(m.category));
    if (!m.evaluated) {
      std::snprintf(
        line, sizeof(line), "%-12s %6zu %6zu %7s %7s %7s %7s %7s\n", name.c_str(), m.n_gt,
        m.n_det, "-", "-", "-", "-", "-");
    } else {
      std::snprintf(
        line, sizeof(line), "%-12s %6zu %6zu %7.4f %7.4f %7.4f %7.4f %7.4f\n", name.c_str(),
        m.n_gt, m.n_det, m.ap, m.ate, m.ase, m.aoe, m.nds_plus);
    }
    out += line;
  }
  std::snprintf(line, sizeof(line), "mAP: %.4f  mNDS+: %.4f\n", report.map, report.mnds_plus);
  out += line;
  return out;
}

std::vector<Detection> parse_detections(
  std::istream & in, std::string_view source, const CategoryMap & cmap)
{
  using namespace record_io;
  const RecordFile file = read_records(in, source, "");
  // A manifest doubles as a detection file whose boxes all score 1.
  const std::string kind = file.header.value("kind", std::string("detections"));
  if (kind != "detections" && kind != "manifest") {
    throw Error(
      ErrorCode::kParseError, std::string(source) + ":1: expected a detections file, found '" +
                                kind + "'");
  }
  const bool from_manifest = kind == "manifest";
  std::vector<Detection> dets;
  for (std::size_t i = 0; i < file.records.size(); ++i) {
    const Record & rec = file.records[i];
    const std::string sample_id = get_string(rec.value, "sample_id", rec.locus);
    const std::string dataset_id =
      rec.value.contains("dataset_id") ? get_string(rec.value, "dataset_id", rec.locus) : "";
    const json & boxes = require(rec.value, "boxes", rec.locus);
    if (!boxes.is_array()) {
      throw Error(ErrorCode::kParseError, rec.locus.str() + ": field 'boxes' must be an array");
    }
    for (const json & b : boxes) {
      RawBox raw = box_from_json(b, rec.locus);
      if (from_manifest && !raw.score) raw.score = 1.0;
      if (!raw.score || !(*raw.score >= 0.0 && *raw.score <= 1.0)) {
        throw Error(
          ErrorCode::kParseError, rec.locus.str() + ": detection needs a score in [0, 1]");
      }
      auto label = cmap.lookup(dataset_id, raw.raw_category);
      if (!label) {
        throw Error(
          ErrorCode::kUnknownCategory, rec.locus.str() + ": record " + std::to_string(i) +
                                         ": label '" + raw.raw_category + "' has no mapping");
      }
      if (*label == HarmonizedLabel::kIgnore) continue;
      raw.box.category = static_cast<Category>(static_cast<int>(*label));
      dets.push_back({sample_id, std::move(raw.box), *raw.score});
    }
  }
  return dets;
}

std::vector<Detection> load_detections(const std::filesystem::path & path, const CategoryMap & cmap)
{
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  return parse_detections(in, path.string(), cmap);
}

std::string serialize_detections(std::span<const Detection> dets, const json & provenance)
{
  json header = record_io::make_header("detections");
  if (!provenance.is_null()) header["provenance"] = provenance;

  std::vector<std::string> order;
  std::map<std::string, json> grouped;
  for (const Detection & d : dets) {
    auto [it, inserted] = grouped.try_emplace(d.sample_id, json::array());
    if (inserted) order.push_back(d.sample_id);
    it->second.push_back(record_io::to_json(d.box, d.score));
  }
  std::vector<json> records;
  records.reserve(order.size());
  for (const std::string & id : order) {
    records.push_back(json{{"sample_id", id}, {"boxes", std::move(grouped[id])}});
  }
  return record_io::serialize(header, records);
}

}  // namespace bevh
