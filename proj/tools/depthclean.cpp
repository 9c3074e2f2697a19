/*
Copyright 2026 The depthclean Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/
// depthclean: command-line front end.
//
//   clean           project a cloud and remove projective artifacts
//   autocalib       estimate the LiDAR origin offset over one or many frames
//   eval            depth metrics of a predicted/cleaned map against GT
//   synth           render a synthetic scene with ground-truth labels
//   analyze-widths  artifact width percentiles of a raw/clean pair

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "depthclean/depthclean.hpp"

namespace fs = std::filesystem;
using namespace depthclean;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitEmpty = 2;

int resolve_workers(int flag) {
  if (std::getenv("REPLAY_THREADS")) return default_worker_count();
  return flag > 0 ? flag : default_worker_count();
}

std::vector<fs::path> list_clouds(const fs::path& input) {
  if (!fs::is_directory(input)) {
    if (!fs::exists(input)) throw Error("no such file: " + input.string());
    return {input};
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(input)) {
    if (e.is_regular_file() && e.path().extension() == ".bin") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("no .bin clouds in " + input.string());
  return files;
}

// ---------------------------------------------------------------------------

struct CleanArgs {
  std::string cloud;
  std::vector<std::string> calib;
  std::string method = "replay";
  bool no_autocalib = false;
  double lambda = -std::numeric_limits<double>::infinity();
  double dt = 0.5;
  double fov_margin = 1.25;
  double dmin = 1.0;
  std::string out_depth;
  std::string out_mask;
  std::string out_diag;
  int workers = 0;
};

struct FrameOutputs {
  fs::path depth;
  fs::path mask;
  fs::path diag;
};

// Returns true when the cleaned map has at least one valid pixel.
bool clean_frame(const fs::path& cloud_path, const Calibration& calib, const ReplayConfig& cfg,
                 const std::string& method, const FrameOutputs& out) {
  std::size_t dropped = 0;
  const PointCloud cloud = read_velodyne_bin(cloud_path, &dropped);
  if (dropped > 0) {
    std::fprintf(stderr, "%s: dropped %zu NaN points\n", cloud_path.string().c_str(), dropped);
  }
  OcclusionResult result;
  if (method == "replay") {
    result = remove_artifacts(cloud, calib.lidar_to_camera, calib.intrinsics, cfg);
  } else if (method == "mod-half-occ") {
    result = modified_halfocc(cloud, calib.lidar_to_camera, calib.intrinsics, cfg);
  } else {
    if (cloud.empty()) throw Error("empty point cloud");
    result.raw_depthmap = raw_halfocc(cloud, calib.lidar_to_camera, calib.intrinsics);
    result.clean_depthmap = result.raw_depthmap;
  }
  write_depth_png(result.clean_depthmap, out.depth);
  if (!out.mask.empty()) {
    write_mask_png(removal_mask(result.raw_depthmap, result.clean_depthmap), result.clean_depthmap.width(),
                   result.clean_depthmap.height(), out.mask);
  }
  if (!out.diag.empty()) write_json(diagnostics_json(result), out.diag);
  return result.clean_depthmap.valid_count() > 0;
}

int run_clean(const CleanArgs& a) {
  std::vector<fs::path> calib_paths(a.calib.begin(), a.calib.end());
  const Calibration calib = read_calib(calib_paths);
  ReplayConfig cfg;
  cfg.autocalib = !a.no_autocalib;
  cfg.lambda = a.lambda;
  cfg.step_px = a.dt;
  cfg.fov_margin = a.fov_margin;
  cfg.min_depth = a.dmin;
  cfg.diagnostics = !a.out_diag.empty();
  cfg.validate();
  const int workers = resolve_workers(a.workers);

  const auto clouds = list_clouds(a.cloud);
  const bool batch = fs::is_directory(a.cloud);
  if (batch) {
    for (const auto& dir : {a.out_depth, a.out_mask, a.out_diag}) {
      if (!dir.empty()) fs::create_directories(dir);
    }
  }
  const auto outputs_for = [&](const fs::path& cloud) {
    if (!batch) return FrameOutputs{a.out_depth, a.out_mask, a.out_diag};
    const std::string stem = cloud.stem().string();
    FrameOutputs o{fs::path(a.out_depth) / (stem + ".png"), {}, {}};
    if (!a.out_mask.empty()) o.mask = fs::path(a.out_mask) / (stem + ".png");
    if (!a.out_diag.empty()) o.diag = fs::path(a.out_diag) / (stem + ".json");
    return o;
  };

  // Frames run in parallel; a single frame uses the workers internally.
  ReplayConfig frame_cfg = cfg;
  frame_cfg.workers = clouds.size() > 1 ? 1 : workers;
  std::vector<int> status(clouds.size(), kExitOk);
  std::vector<std::string> errors(clouds.size());
  parallel_for(
      clouds.size(),
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          try {
            status[i] = clean_frame(clouds[i], calib, frame_cfg, a.method, outputs_for(clouds[i])) ? kExitOk
                                                                                                   : kExitEmpty;
          } catch (const std::exception& e) {
            status[i] = kExitFailure;
            errors[i] = e.what();
          }
        }
      },
      clouds.size() > 1 ? workers : 1);

  int code = kExitOk;
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    if (status[i] == kExitFailure) std::cerr << clouds[i].string() << ": " << errors[i] << '\n';
    if (status[i] == kExitEmpty) std::cerr << clouds[i].string() << ": empty result\n";
    if (status[i] == kExitFailure || (status[i] == kExitEmpty && code == kExitOk)) code = status[i];
  }
  return code;
}

// ---------------------------------------------------------------------------

struct AutocalibArgs {
  std::string clouds;
  std::vector<std::string> calib;
  int sample = 0;
  std::string out;
  int workers = 0;
};

int run_autocalib(const AutocalibArgs& a) {
  auto files = list_clouds(a.clouds);
  if (a.sample > 0 && static_cast<std::size_t>(a.sample) < files.size()) {
    // Evenly spaced subset.
    std::vector<fs::path> picked;
    for (int k = 0; k < a.sample; ++k) picked.push_back(files[k * files.size() / a.sample]);
    files = std::move(picked);
  }
  // Camera-aligned axes: from the calibration when given, else the usual
  // LiDAR (x fwd, y left, z up) to camera (x right, y down, z fwd) swap.
  Mat3 rotation = lidar_axes_in_camera();
  std::string frame = "lidar";
  if (!a.calib.empty()) {
    rotation = read_calib(std::vector<fs::path>(a.calib.begin(), a.calib.end())).lidar_to_camera.rotation;
  }
  DescentSpec descent;
  descent.workers = resolve_workers(a.workers);

  Json frames = Json::array();
  std::vector<Vec3> offsets;
  for (const auto& f : files) {
    try {
      const PointCloud cloud = read_velodyne_bin(f);
      std::vector<Vec3> rotated;
      rotated.reserve(cloud.size());
      for (const auto& p : cloud.points) rotated.push_back(rotation * p);
      const CalibResult r = auto_calibrate(std::span<const Vec3>(rotated), RasterSpec{}, descent);
      const Vec3 offset = rotation.transpose() * r.offset;
      offsets.push_back(offset);
      Json entry = to_json(r);
      entry["file"] = f.filename().string();
      entry["offset"] = vec3_json(offset);
      frames.push_back(std::move(entry));
    } catch (const std::exception& e) {
      std::cerr << f.string() << ": " << e.what() << '\n';
    }
  }
  if (offsets.empty()) {
    std::cerr << "no parsable clouds\n";
    return kExitFailure;
  }
  Vec3 mean = Vec3::Zero();
  for (const auto& o : offsets) mean += o;
  mean /= static_cast<double>(offsets.size());
  Vec3 var = Vec3::Zero();
  for (const auto& o : offsets) var += (o - mean).cwiseProduct(o - mean);
  const Vec3 stddev = (var / static_cast<double>(offsets.size())).cwiseSqrt();

  const Json doc{{"schema_version", kSchemaVersion}, {"frame", frame},     {"frames", frames},
                 {"mean", vec3_json(mean)},           {"stddev", vec3_json(stddev)}, {"count", offsets.size()}};
  write_json(doc, a.out);
  std::printf("offset mean %.6f %.6f %.6f  stddev %.6f %.6f %.6f  (%zu frames)\n", mean.x(), mean.y(), mean.z(),
              stddev.x(), stddev.y(), stddev.z(), offsets.size());
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string mask;
  std::string region = "all";
  std::string removed_against;
  std::string out;
  double max_depth = 80.0;
};

RegionMask load_region_mask(const fs::path& path) {
  const MaskImage img = read_mask_png(path);
  RegionMask mask(img.width, img.height);
  for (std::size_t i = 0; i < img.values.size(); ++i) {
    mask.labels[i] = img.values[i] == 255 ? RegionLabel::kForeground
                     : img.values[i] == 0 ? RegionLabel::kBackground
                                          : RegionLabel::kIgnore;
  }
  return mask;
}

int run_eval(const EvalArgs& a) {
  const Depthmap pred = read_depth_png(a.pred);
  const Depthmap gt = read_depth_png(a.gt);
  EvalOptions opt;
  opt.max_depth = a.max_depth;
  MetricsReport report;
  if (!a.removed_against.empty()) {
    const Depthmap raw = read_depth_png(a.removed_against);
    report = evaluate_removed(raw, pred, gt, opt);
  } else {
    std::optional<RegionMask> mask;
    if (!a.mask.empty()) mask = load_region_mask(a.mask);
    const Region region = a.region == "fg" ? Region::kForeground : a.region == "bg" ? Region::kBackground : Region::kAll;
    if (region != Region::kAll && !mask) throw Error("--region fg/bg needs --mask");
    report = evaluate(pred, gt, mask ? &*mask : nullptr, region, opt);
  }
  std::cout << metrics_table(report);
  write_json(to_json(report), a.out);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string scene;
  std::string out;
  int workers = 0;
};

int run_synth(const SynthArgs& a) {
  const SyntheticFrame f = load_scene(a.scene);
  const ScanResult scan = simulate_scan_detailed(f.scene, f.lidar, f.beams);
  if (scan.cloud.empty()) throw Error("the scan returned no points");
  const VisibilityLabel labels = visibility_oracle(scan.cloud, f.lidar.lidar_to_world(), f.scene, f.rgb_origin);
  ReplayConfig cfg;
  cfg.workers = resolve_workers(a.workers);
  const OcclusionResult result = remove_artifacts(scan.cloud, f.lidar_to_camera(), f.camera, cfg);
  const DetectionScore score = score_detector(result, labels);

  const fs::path out(a.out);
  fs::create_directories(out);
  write_velodyne_bin(scan.cloud, out / "cloud.bin");
  write_calib(Calibration{f.lidar_to_camera(), f.camera}, out / "calib.txt");
  write_depth_png(result.raw_depthmap, out / "raw.png");
  write_depth_png(result.clean_depthmap, out / "clean.png");
  write_mask_png(removal_mask(result.raw_depthmap, result.clean_depthmap), f.camera.width, f.camera.height,
                 out / "mask.png");

  std::vector<std::size_t> occluded;
  for (std::size_t i = 0; i < labels.occluded.size(); ++i) {
    if (labels.occluded[i]) occluded.push_back(i);
  }
  const auto opt_json = [](const std::optional<double>& x) { return x ? Json(*x) : Json(nullptr); };
  const Json doc{{"schema_version", kSchemaVersion},
                 {"points", scan.cloud.size()},
                 {"occluded", occluded},
                 {"detected", result.occluded},
                 {"precision", opt_json(score.precision)},
                 {"recall", opt_json(score.recall)}};
  write_json(doc, out / "labels.json");
  std::printf("%zu points, %zu occluded, %zu flagged\n", scan.cloud.size(), occluded.size(), result.occluded.size());
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct WidthArgs {
  std::string raw;
  std::string clean;
  std::vector<std::string> calib;
  std::string out;
  int max_gap = kDefaultWidthGap;
};

int run_widths(const WidthArgs& a) {
  const Depthmap raw = read_depth_png(a.raw);
  const Depthmap clean = read_depth_png(a.clean);
  const Calibration calib = read_calib(std::vector<fs::path>(a.calib.begin(), a.calib.end()));
  const auto dist = artifact_width_histogram(raw, clean,
                                             epipolar_direction_field(calib.lidar_to_camera.translation,
                                                                      calib.intrinsics),
                                             a.max_gap);
  std::ofstream out(a.out);
  if (!out) throw Error("cannot write " + a.out);
  out << "percentile,width\n";
  for (const auto& [p, w] : dist.table(default_percentiles())) out << p << ',' << w << '\n';
  if (!out) throw Error("write failed: " + a.out);
  std::printf("%zu removed pixels\n", dist.widths.size());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projective artifact removal for LiDAR depthmaps"};
  app.require_subcommand(1);

  CleanArgs clean;
  auto* c = app.add_subcommand("clean", "Project a cloud into the camera and remove occluded points");
  c->add_option("--cloud", clean.cloud, "Velodyne .bin file or directory of them")->required();
  c->add_option("--calib", clean.calib, "Calibration file(s); keys may be split across files")->required();
  c->add_option("--method", clean.method, "replay, raw or mod-half-occ")
      ->check(CLI::IsMember({"replay", "raw", "mod-half-occ"}));
  c->add_flag("--no-autocalib", clean.no_autocalib, "Trust the calibrated LiDAR origin");
  c->add_option("--lambda", clean.lambda, "Lower bound of the accepted gap (default -inf)");
  c->add_option("--dt", clean.dt, "Epipolar traversal step in pixels");
  c->add_option("--fov-margin", clean.fov_margin, "Virtual camera size relative to the RGB image");
  c->add_option("--dmin", clean.dmin, "Nearest plausible occluder depth in meters");
  c->add_option("--out-depth", clean.out_depth, "Cleaned depth PNG (directory in batch mode)")->required();
  c->add_option("--out-mask", clean.out_mask, "Removal mask PNG (directory in batch mode)");
  c->add_option("--out-diag", clean.out_diag, "Per-point diagnostics JSON (directory in batch mode)");
  c->add_option("--workers", clean.workers, "Worker threads (REPLAY_THREADS overrides)");

  AutocalibArgs ac;
  auto* a = app.add_subcommand("autocalib", "Estimate the LiDAR origin offset");
  a->add_option("--clouds", ac.clouds, "Velodyne .bin file or directory")->required();
  a->add_option("--calib", ac.calib, "Calibration file(s) giving the camera-aligned rotation");
  a->add_option("--sample", ac.sample, "Use N evenly spaced frames");
  a->add_option("--out", ac.out, "Output JSON")->required();
  a->add_option("--workers", ac.workers, "Worker threads (REPLAY_THREADS overrides)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Depth metrics against ground truth");
  e->add_option("--pred", ev.pred, "Predicted or cleaned depth PNG")->required();
  e->add_option("--gt", ev.gt, "Ground-truth depth PNG")->required();
  e->add_option("--mask", ev.mask, "Region mask PNG (255 foreground, 0 background, else ignored)");
  e->add_option("--region", ev.region, "all, fg or bg")->check(CLI::IsMember({"all", "fg", "bg"}));
  e->add_option("--removed-against", ev.removed_against, "Raw depth PNG: evaluate only the removed pixels");
  e->add_option("--max-depth", ev.max_depth, "Ignore ground truth beyond this depth (m)");
  e->add_option("--out", ev.out, "Output JSON")->required();

  SynthArgs sy;
  auto* s = app.add_subcommand("synth", "Render a synthetic scene with visibility labels");
  s->add_option("--scene", sy.scene, "Scene JSON")->required();
  s->add_option("--out", sy.out, "Output directory")->required();
  s->add_option("--workers", sy.workers, "Worker threads (REPLAY_THREADS overrides)");

  WidthArgs wd;
  auto* w = app.add_subcommand("analyze-widths", "Artifact width percentiles along epipolar lines");
  w->add_option("--raw", wd.raw, "Raw depth PNG")->required();
  w->add_option("--clean", wd.clean, "Cleaned depth PNG")->required();
  w->add_option("--calib", wd.calib, "Calibration file(s)")->required();
  w->add_option("--max-gap", wd.max_gap, "Empty pixels bridged inside one run");
  w->add_option("--out", wd.out, "Output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c) return run_clean(clean);
    if (*a) return run_autocalib(ac);
    if (*e) return run_eval(ev);
    if (*s) return run_synth(sy);
    if (*w) return run_widths(wd);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
