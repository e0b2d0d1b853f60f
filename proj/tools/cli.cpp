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

#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "bevharmonize/dataset_io.hpp"
#include "bevharmonize/error.hpp"
#include "bevharmonize/experts.hpp"
#include "bevharmonize/metrics.hpp"
#include "bevharmonize/pdir.hpp"
#include "bevharmonize/record_io.hpp"
#include "bevharmonize/synth.hpp"

namespace bevh::cli
{

namespace
{

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char * kThreadsEnv = "BEVH_THREADS";

unsigned default_threads()
{
  if (const char * env = std::getenv(kThreadsEnv)) {
    try {
      const long n = std::stol(env);
      if (n >= 1) return static_cast<unsigned>(n);
    } catch (const std::exception &) {
    }
  }
  return 1;
}

// Everything that shapes an output. Serialized verbatim into the header of
// every artifact; thread count and verbosity are excluded because they
// never change results.
struct RunConfig
{
  std::string subcommand;
  std::vector<std::string> inputs;
  std::string categories;
  double target_width = kDefaultTargetWidth;
  double target_height = kDefaultTargetHeight;
  std::string front_camera = "CAM_FRONT";
  double delta_d = 10.0;
  std::string d_min = "5";
  std::string strategy = "pdir";
  std::size_t n_experts = 2;
  std::uint64_t seed = 0;
  std::vector<double> hist_edges;
  std::size_t hist_bins = 10;
  EvalConfig eval;
  std::size_t k_channels = 0;
  std::string cosine_mode = "per-location";
  std::size_t cameras_per_sample = 1;

  unsigned threads = 1;
  bool quiet = false;

  json provenance() const
  {
    return json{
      {"tool", "bevh"},
      {"subcommand", subcommand},
      {"inputs", inputs},
      {"categories", categories},
      {"target_resolution", {target_width, target_height}},
      {"pdir", {{"front_camera", front_camera}, {"delta_d", delta_d}, {"d_min", d_min}}},
      {"split", {{"strategy", strategy}, {"n_experts", n_experts}, {"seed", seed}}},
      {"histogram", {{"edges", hist_edges}, {"bins", hist_bins}}},
      {"eval", eval.to_json()},
      {"distill", {{"k_channels", k_channels}, {"mode", cosine_mode}, {"cameras_per_sample", cameras_per_sample}}}};
  }

  PdirParams pdir_params() const
  {
    PdirParams p;
    p.front_camera = front_camera;
    p.delta_d = delta_d;
    p.d_min = d_min == "min-object" ? DMinPolicy::min_object_depth()
                                    : DMinPolicy::fixed(std::stod(d_min));
    return p;
  }
};

class Logger
{
public:
  Logger(std::ostream & err, const RunConfig & cfg) : err_(err), cfg_(cfg) {}

  void info(const std::string & msg) const
  {
    if (!cfg_.quiet) emit("info", msg);
  }
  void warn(const std::string & msg) const { emit("warn", msg); }
  void error(const std::string & msg) const { emit("error", msg); }

private:
  void emit(const char * level, const std::string & msg) const
  {
    err_ << "bevh level=" << level << " cmd=" << (cfg_.subcommand.empty() ? "-" : cfg_.subcommand)
         << " msg=" << std::quoted(msg) << '\n';
  }

  std::ostream & err_;
  const RunConfig & cfg_;
};

CategoryMap category_map(const RunConfig & cfg)
{
  CategoryMap m = CategoryMap::builtin();
  if (!cfg.categories.empty()) m.merge_from(CategoryMap::load(cfg.categories));
  return m;
}

json header_for(std::string_view kind, const RunConfig & cfg)
{
  json h = record_io::make_header(kind);
  h["provenance"] = cfg.provenance();
  return h;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_merge(const RunConfig & cfg, const std::string & out_path, const Logger & log)
{
  const CategoryMap cmap = category_map(cfg);
  std::vector<DatasetManifest> manifests;
  for (const std::string & in : cfg.inputs) {
    manifests.push_back(load_manifest(in, cmap));
    log.info("loaded " + std::to_string(manifests.back().samples.size()) + " samples from " + in);
  }
  const DatasetManifest merged = merge_datasets(manifests, cfg.target_width, cfg.target_height);
  write_manifest(out_path, merged, cfg.provenance());
  log.info(
    "wrote " + std::to_string(merged.samples.size()) + " samples with " +
    std::to_string(merged.canonical_camera_count) + " cameras to " + out_path);
  return kExitOk;
}

int cmd_pdir_stats(const RunConfig & cfg, const std::string & out_path, const Logger & log)
{
  const DatasetManifest m = load_manifest(cfg.inputs.at(0), category_map(cfg));
  const std::vector<PdirOutcome> outcomes = compute_pdir_batch(m, cfg.pdir_params(), cfg.threads);

  std::vector<json> records;
  std::vector<double> values;
  for (const PdirOutcome & o : outcomes) {
    if (o.result) {
      const PdirResult & r = *o.result;
      values.push_back(r.pdir);
      records.push_back(
        json{{"sample_id", r.sample_id}, {"pdir", r.pdir}, {"d_min", r.d_min},
             {"delta_d", r.delta_d}, {"n_ground_points", r.n_ground_points}});
    } else {
      log.warn(o.error);
      records.push_back(json{{"sample_id", o.sample_id}, {"pdir", nullptr}, {"error", o.error}});
    }
  }

  std::vector<double> edges = cfg.hist_edges;
  if (edges.empty()) {
    const double hi = values.empty() ? 1.0 : *std::max_element(values.begin(), values.end());
    edges = uniform_edges(0.0, hi > 0.0 ? hi : 1.0, cfg.hist_bins);
  }
  const Histogram h = make_histogram(values, edges);
  records.push_back(
    json{{"histogram",
          {{"edges", h.edges}, {"counts", h.counts}, {"underflow", h.underflow},
           {"overflow", h.overflow}}}});

  record_io::write_atomic(out_path, record_io::serialize(header_for("pdir-stats", cfg), records));
  log.info(
    "PDIR computed for " + std::to_string(values.size()) + "/" + std::to_string(outcomes.size()) +
    " samples");
  return kExitOk;
}

int cmd_split(const RunConfig & cfg, const std::string & out_path, const Logger & log)
{
  const DatasetManifest m = load_manifest(cfg.inputs.at(0), category_map(cfg));
  SplitStrategy strategy;
  if (cfg.strategy == "pdir") {
    strategy = SplitStrategy::pdir(cfg.n_experts);
  } else if (cfg.strategy == "ds") {
    strategy = SplitStrategy::by_dataset();
  } else {
    strategy = SplitStrategy::random(cfg.n_experts, cfg.seed);
  }
  const SplitResult split = split_dataset(m, strategy, cfg.pdir_params(), cfg.threads);

  std::vector<json> records;
  std::size_t flagged = 0;
  for (const SplitAssignment & a : split.assignments) {
    json r{{"sample_id", a.sample_id}, {"subset", a.subset}};
    if (a.pdir) r["pdir"] = *a.pdir;
    if (a.flag) {
      r["flag"] = *a.flag;
      ++flagged;
    }
    records.push_back(std::move(r));
  }
  json header = header_for("split", cfg);
  header["subset_labels"] = split.subset_labels;
  record_io::write_atomic(out_path, record_io::serialize(header, records));
  if (flagged > 0) {
    log.warn(std::to_string(flagged) + " samples had no PDIR and were placed at the median rank");
  }
  log.info("assigned " + std::to_string(records.size()) + " samples");
  return kExitOk;
}

int cmd_weights(const RunConfig & cfg, const std::string & out_path, const Logger & log)
{
  const record_io::RecordFile file = record_io::read_records(cfg.inputs.at(0), "pdir-stats");
  std::vector<std::pair<std::string, double>> pdirs;
  for (const record_io::Record & r : file.records) {
    if (!r.value.contains("sample_id")) continue;
    const std::string id = record_io::get_string(r.value, "sample_id", r.locus);
    const json & p = record_io::require(r.value, "pdir", r.locus);
    if (p.is_null()) {
      log.warn("skipping '" + id + "': no PDIR");
      continue;
    }
    pdirs.emplace_back(id, record_io::get_number(r.value, "pdir", r.locus));
  }
  const ExpertWeights w = expert_weights(pdirs);

  std::vector<json> records;
  for (std::size_t i = 0; i < w.sample_ids.size(); ++i) {
    records.push_back(json{{"sample_id", w.sample_ids[i]}, {"w1", w.w1[i]}, {"w2", w.w2[i]}});
  }
  json header = header_for("weights", cfg);
  header["pdir_max"] = w.pdir_max;
  record_io::write_atomic(out_path, record_io::serialize(header, records));
  log.info("weights for " + std::to_string(records.size()) + " samples, PDIR max " + std::to_string(w.pdir_max));
  return kExitOk;
}

int cmd_evaluate(
  const RunConfig & cfg, const std::string & gt_path, const std::string & det_path,
  const std::string & out_path, std::ostream & out, const Logger & log)
{
  const CategoryMap cmap = category_map(cfg);
  const DatasetManifest gt = load_manifest(gt_path, cmap);
  const std::vector<Detection> dets = load_detections(det_path, cmap);
  log.info(
    "evaluating " + std::to_string(dets.size()) + " detections over " +
    std::to_string(gt.samples.size()) + " samples");
  const EvalReport report = evaluate(gt, dets, cfg.eval, cfg.threads);
  out << report_to_table(report);
  if (!out_path.empty()) {
    const std::vector<json> records{report_to_json(report)};
    record_io::write_atomic(out_path, record_io::serialize(header_for("report", cfg), records));
  }
  return kExitOk;
}

int cmd_gen_synthetic(
  RunConfig & cfg, const std::string & spec_path, std::optional<std::uint64_t> seed_override,
  const std::string & manifest_out, const std::string & det_out, const Logger & log)
{
  json doc = json::object();
  if (!spec_path.empty()) {
    try {
      doc = json::parse(record_io::read_text(spec_path));
    } catch (const json::parse_error & e) {
      throw Error(ErrorCode::kParseError, spec_path + ": " + e.what());
    }
  }
  synth::SceneSpec spec = synth::scene_spec_from_json(doc, spec_path.empty() ? "defaults" : spec_path);
  if (seed_override) spec.seed = *seed_override;
  cfg.seed = spec.seed;

  const synth::SyntheticScene scene = synth::generate(spec, cfg.threads);
  json prov = cfg.provenance();
  prov["scene"] = synth::to_json(spec);
  write_manifest(manifest_out, scene.manifest, prov);
  if (!det_out.empty()) {
    record_io::write_atomic(det_out, serialize_detections(scene.detections, prov));
  }
  log.info(
    "generated " + std::to_string(scene.manifest.samples.size()) + " samples, " +
    std::to_string(scene.detections.size()) + " detections");
  return kExitOk;
}

int cmd_distill_loss(
  const RunConfig & cfg, const std::string & student_path, const std::string & teacher_path,
  const std::string & weights_path, const std::string & out_path, std::ostream & out,
  const Logger & log)
{
  const std::vector<FeatureMap> student = read_feature_maps(student_path);
  const std::vector<FeatureMap> teacher = read_feature_maps(teacher_path);
  const CosineMode mode = cfg.cosine_mode == "flatten" ? CosineMode::kFlatten : CosineMode::kPerLocation;

  json result;
  if (cfg.k_channels > 0) {
    const LossResult r = semantic_distill_loss(teacher, student, cfg.k_channels, mode, cfg.threads);
    result = json{{"loss_kind", "semantic"}, {"loss", r.loss}, {"zero_norm_locations", r.zero_norm_locations}};
  } else {
    std::vector<double> per_image(student.size(), 1.0);
    if (!weights_path.empty()) {
      const record_io::RecordFile file = record_io::read_records(weights_path, "weights");
      std::vector<double> per_sample;
      for (const record_io::Record & r : file.records) {
        per_sample.push_back(record_io::get_number(r.value, "w1", r.locus));
      }
      per_image = per_image_weights(per_sample, cfg.cameras_per_sample);
    }
    const LossResult r = expert_distill_loss(student, teacher, per_image, mode, cfg.threads);
    result = json{{"loss_kind", "expert"}, {"loss", r.loss}, {"zero_norm_locations", r.zero_norm_locations}};
  }
  if (result["zero_norm_locations"].get<std::size_t>() > 0) {
    log.warn(result["zero_norm_locations"].dump() + " zero-norm locations scored as cosine 0");
  }
  out << "loss: " << std::setprecision(17) << result["loss"].get<double>() << '\n';
  if (!out_path.empty()) {
    const std::vector<json> records{result};
    record_io::write_atomic(out_path, record_io::serialize(header_for("loss", cfg), records));
  }
  return kExitOk;
}

void add_pdir_options(CLI::App * sub, RunConfig & cfg)
{
  sub->add_option("--front-camera", cfg.front_camera, "Camera used for PDIR")->capture_default_str();
  sub->add_option("--delta-d", cfg.delta_d, "Depth interval in meters")
    ->check(CLI::PositiveNumber)
    ->capture_default_str();
  sub->add_option("--d-min", cfg.d_min, "Near depth in meters, or 'min-object'")
    ->check(CLI::Validator(
      [](std::string & v) -> std::string {
        if (v == "min-object") return {};
        try {
          std::size_t used = 0;
          const double d = std::stod(v, &used);
          if (used == v.size() && d > 0.0) return {};
        } catch (const std::exception &) {
        }
        return "expected a positive depth or 'min-object'";
      },
      "DEPTH|min-object"))
    ->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string> & args, std::ostream & out, std::ostream & err)
{
  RunConfig cfg;
  cfg.threads = default_threads();

  CLI::App app{"bevh: multi-dataset harmonization, PDIR statistics and NDS+ evaluation"};
  app.require_subcommand(1);
  app.add_option("--threads", cfg.threads, std::string("Worker threads (default from ") + kThreadsEnv + ")")
    ->check(CLI::PositiveNumber);
  app.add_flag("--quiet,-q", cfg.quiet, "Only log warnings and errors");
  app.add_option("--categories", cfg.categories, "Category map JSON layered over the built-in map");

  std::string out_path;
  std::string gt_path, det_path, spec_path, det_out, student_path, teacher_path, weights_path;
  std::uint64_t seed_value = 0;

  auto * merge = app.add_subcommand("merge", "Merge manifests with ghost cameras and resized intrinsics");
  merge->add_option("inputs", cfg.inputs, "Manifest files")->required();
  merge->add_option("--out,-o", out_path, "Merged manifest")->required();
  merge->add_option("--width", cfg.target_width, "Target image width")->check(CLI::PositiveNumber)->capture_default_str();
  merge->add_option("--height", cfg.target_height, "Target image height")->check(CLI::PositiveNumber)->capture_default_str();

  auto * pdir = app.add_subcommand("pdir-stats", "Per-sample PDIR and histogram");
  pdir->add_option("--manifest,-m", cfg.inputs, "Manifest file")->required()->expected(1);
  pdir->add_option("--out,-o", out_path, "Output file")->required();
  add_pdir_options(pdir, cfg);
  pdir->add_option("--hist-edges", cfg.hist_edges, "Explicit histogram bin edges")->delimiter(',');
  pdir->add_option("--hist-bins", cfg.hist_bins, "Uniform bins over [0, max PDIR]")->check(CLI::PositiveNumber)->capture_default_str();

  auto * split = app.add_subcommand("split", "Assign samples to expert training subsets");
  split->add_option("--manifest,-m", cfg.inputs, "Manifest file")->required()->expected(1);
  split->add_option("--out,-o", out_path, "Output file")->required();
  split->add_option("--strategy", cfg.strategy, "pdir | ds | rd")
    ->check(CLI::IsMember({"pdir", "ds", "rd"}))
    ->capture_default_str();
  split->add_option("--experts", cfg.n_experts, "Number of subsets")->check(CLI::PositiveNumber)->capture_default_str();
  split->add_option("--seed", cfg.seed, "Seed for random division")->capture_default_str();
  add_pdir_options(split, cfg);

  auto * weights = app.add_subcommand("weights", "Expert softmax weights from a pdir-stats file");
  weights->add_option("--pdir-stats,-i", cfg.inputs, "pdir-stats file")->required()->expected(1);
  weights->add_option("--out,-o", out_path, "Output file")->required();

  auto * eval = app.add_subcommand("evaluate", "AP / ATE / ASE / AOE / NDS+ report");
  eval->add_option("--gt", gt_path, "Ground-truth manifest")->required();
  eval->add_option("--det", det_path, "Detections file")->required();
  eval->add_option("--out,-o", out_path, "Machine-readable report");
  eval->add_option("--thresholds", cfg.eval.ap_thresholds, "AP center-distance thresholds (m)")->delimiter(',');
  eval->add_option("--tp-threshold", cfg.eval.tp_threshold, "Match threshold for TP errors (m)")->check(CLI::PositiveNumber)->capture_default_str();
  eval->add_option("--range", cfg.eval.range, "BEV half-width of the evaluation window (m)")->check(CLI::PositiveNumber)->capture_default_str();
  eval->add_flag("--raw-ap", cfg.eval.raw_ap, "Unfloored area under the PR curve");

  auto * gen = app.add_subcommand("gen-synthetic", "Deterministic synthetic manifest and detections");
  gen->add_option("--config,-c", spec_path, "Scene spec JSON");
  auto * seed_opt = gen->add_option("--seed", seed_value, "Override the spec seed");
  gen->add_option("--manifest-out", out_path, "Manifest output")->required();
  gen->add_option("--detections-out", det_out, "Detections output");

  auto * loss = app.add_subcommand("distill-loss", "Cosine distillation loss over feature map files");
  loss->add_option("--student", student_path, "Student feature maps")->required();
  loss->add_option("--teacher", teacher_path, "Teacher (or projected teacher) feature maps")->required();
  loss->add_option("--weights", weights_path, "weights file; w1 applied per sample");
  loss->add_option("--cameras-per-sample", cfg.cameras_per_sample, "Images per weights record")->check(CLI::PositiveNumber)->capture_default_str();
  loss->add_option("--k", cfg.k_channels, "Semantic loss over the first K student channels");
  loss->add_option("--mode", cfg.cosine_mode, "per-location | flatten")
    ->check(CLI::IsMember({"per-location", "flatten"}))
    ->capture_default_str();
  loss->add_option("--out,-o", out_path, "Loss record output");

  std::vector<const char *> argv{"bevh"};
  for (const std::string & a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App * chosen = app.get_subcommands().front();
  cfg.subcommand = chosen->get_name();
  if (cfg.subcommand == "evaluate") cfg.inputs = {gt_path, det_path};
  if (cfg.subcommand == "gen-synthetic" && !spec_path.empty()) cfg.inputs = {spec_path};
  if (cfg.subcommand == "distill-loss") {
    cfg.inputs = {student_path, teacher_path};
    if (!weights_path.empty()) cfg.inputs.push_back(weights_path);
  }
  const Logger log(err, cfg);

  try {
    if (cfg.subcommand == "merge") return cmd_merge(cfg, out_path, log);
    if (cfg.subcommand == "pdir-stats") return cmd_pdir_stats(cfg, out_path, log);
    if (cfg.subcommand == "split") return cmd_split(cfg, out_path, log);
    if (cfg.subcommand == "weights") return cmd_weights(cfg, out_path, log);
    if (cfg.subcommand == "evaluate") return cmd_evaluate(cfg, gt_path, det_path, out_path, out, log);
    if (cfg.subcommand == "gen-synthetic") {
      std::optional<std::uint64_t> seed;
      if (seed_opt->count() > 0) seed = seed_value;
      return cmd_gen_synthetic(cfg, spec_path, seed, out_path, det_out, log);
    }
    if (cfg.subcommand == "distill-loss") {
      return cmd_distill_loss(cfg, student_path, teacher_path, weights_path, out_path, out, log);
    }
  } catch (const Error & e) {
    log.error(e.what());
    return e.code() == ErrorCode::kIoError ? kExitIo : kExitValidation;
  } catch (const fs::filesystem_error & e) {
    log.error(e.what());
    return kExitIo;
  }
  return kExitUsage;
}

}  // namespace bevh::cli
