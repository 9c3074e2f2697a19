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
#pragma once

// Projective artifact removal.
//
// A pinhole camera placed at the LiDAR center sees every return on its own
// ray, so its depthmap has no artifacts. The LiDAR -> RGB extrinsic splits
// into a rotation (a homography, never occluding) followed by a translation.
// Under the translation every pixel p moves along its epipolar line by t
// toward q; p1 is hidden in the RGB view when some pixel p2 behind it on that
// line moves far enough to reach or pass it:
//
//   g = n^T (p1 - p2) + t1 - t2 < 0.
//
// Depths for the inspected p2 are read from a nearest-neighbor densified
// copy of the virtual LiDAR depthmap.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "depthclean/autocalib.hpp"
#include "depthclean/densify.hpp"
#include "depthclean/depthmap.hpp"
#include "depthclean/geometry.hpp"
#include "depthclean/parallel.hpp"

namespace depthclean {

struct ReplayConfig {
  /// Lower bound of the accepted gap band [lambda, 0). -inf accepts any
  /// surpassing pixel.
  double lambda = -std::numeric_limits<double>::infinity();
  /// Slack: a gap must be below -epsilon to count.
  double epsilon = 0.0;
  double step_px = 0.5;     // epipolar traversal step
  double fov_margin = 1.25;  // virtual camera size relative to the RGB camera
  double min_depth = 1.0;    // nearest plausible occluder, bounds the traversal
  bool autocalib = true;
  RasterSpec raster{};
  DescentSpec descent{};
  bool diagnostics = false;
  int workers = 0;  // <= 0: default_worker_count()

  void validate() const {
    if (!(step_px > 0.0)) throw Error("step must be positive");
    if (!(fov_margin >= 1.0)) throw Error("fov margin must be >= 1");
    if (!(min_depth > 0.0)) throw Error("minimum depth must be positive");
    if (!(lambda <= 0.0)) throw Error("lambda must be <= 0");
    if (!(epsilon >= 0.0)) throw Error("epsilon must be >= 0");
    raster.validate();
  }
};

enum class PointStatus : std::uint8_t {
  kOutOfView,  // not visible in the RGB image
  kKept,
  kOccluded,
};

struct PointDiagnostics {
  double t = std::numeric_limits<double>::quiet_NaN();  // epipolar displacement of the point
  double min_gap = std::numeric_limits<double>::infinity();
  int steps = 0;
};

struct OcclusionResult {
  std::vector<PointStatus> status;  // per input point
  std::vector<std::size_t> occluded;
  std::vector<std::size_t> kept;
  Depthmap raw_depthmap;    // RGB view, depth buffered
  Depthmap clean_depthmap;  // raw with pixels of removed points cleared
  std::vector<PointDiagnostics> diagnostics;  // empty unless requested
  CameraIntrinsics virtual_camera;
  Vec3 origin_offset = Vec3::Zero();  // auto-calibrated offset, rotated frame
  std::optional<CalibResult> calibration;

  bool is_occluded(std::size_t i) const { return status[i] == PointStatus::kOccluded; }
};

/// Same focal lengths as the RGB camera, image enlarged by fov_margin
/// (rounded up), principal point shifted by half the padding.
inline CameraIntrinsics make_virtual_camera(const CameraIntrinsics& rgb, double fov_margin) {
  rgb.validate();
  if (!(fov_margin >= 1.0)) throw Error("fov margin must be >= 1");
  CameraIntrinsics out = rgb;
  out.width = static_cast<int>(std::ceil(rgb.width * fov_margin - 1e-9));
  out.height = static_cast<int>(std::ceil(rgb.height * fov_margin - 1e-9));
  out.cx = rgb.cx + 0.5 * (out.width - rgb.width);
  out.cy = rgb.cy + 0.5 * (out.height - rgb.height);
  return out;
}

/// g(p1, p2, d1, d2 | K, [I t]) with t1, t2 from explicit projection.
/// Absent when p1 does not move (epipole, zero translation) or either point
/// lands behind the translated camera.
inline std::optional<double> occlusion_gap(const Vec2& p1, const Vec2& p2, double d1, double d2,
                                           const Vec3& translation, const CameraIntrinsics& intr) {
  const auto q1 = project(back_project(p1.x(), p1.y(), d1, intr) + translation, intr);
  const auto q2 = project(back_project(p2.x(), p2.y(), d2, intr) + translation, intr);
  if (!q1 || !q2) return std::nullopt;
  const auto motion = epipolar_direction(p1, q1->uv());
  if (!motion) return std::nullopt;
  const Vec2& n = motion->direction;
  const double t1 = motion->distance;
  const double t2 = n.dot(q2->uv() - p2);
  return n.dot(p1 - p2) + t1 - t2;
}

/// Pixel displacement t of a left pixel at the given depth under [I t].
inline std::optional<double> epipolar_displacement(const Vec2& p, double depth,
                                                   const Vec3& translation,
                                                   const CameraIntrinsics& intr) {
  const auto q = project(back_project(p.x(), p.y(), depth, intr) + translation, intr);
  if (!q) return std::nullopt;
  return (q->uv() - p).norm();
}

struct OcclusionVerdict {
  bool occluded = false;
  PointDiagnostics diagnostics;
  std::optional<Vec2> occluder;  // first surpassing inspection pixel
};

/// Per-point epipolar traversal against an immutable densified depthmap.
class EpipolarOcclusionTest {
 public:
  EpipolarOcclusionTest(const Depthmap& dense, const CameraIntrinsics& intr,
                        const Vec3& translation, const ReplayConfig& cfg)
      : dense_(dense), intr_(intr), translation_(translation), cfg_(cfg) {
    if (!dense.same_shape(Depthmap(intr.width, intr.height))) {
      throw Error("densified map does not match the virtual camera");
    }
  }

  OcclusionVerdict evaluate(const PixelPoint& p1) const {
    OcclusionVerdict out;
    const Vec2 p = p1.uv();
    const auto q1 = project(back_project(p1, intr_) + translation_, intr_);
    if (!q1) return out;
    const auto motion = epipolar_direction(p, q1->uv());
    if (!motion) {
      out.diagnostics.t = 0.0;
      return out;
    }
    const Vec2 n = motion->direction;
    const double t1 = motion->distance;
    out.diagnostics.t = t1;

    double t_max = std::numeric_limits<double>::infinity();
    if (const auto q_near = project(back_project(p.x(), p.y(), cfg_.min_depth, intr_) + translation_,
                                    intr_)) {
      t_max = n.dot(q_near->uv() - p);
    }

    for (int k = 1;; ++k) {
      const double s = k * cfg_.step_px;
      if (s > t_max) break;
      const Vec2 p2 = p - s * n;
      const auto d2 = sample_bilinear(dense_, p2.x(), p2.y());
      if (!d2) break;
      ++out.diagnostics.steps;
      const auto q2 = project(back_project(p2.x(), p2.y(), *d2, intr_) + translation_, intr_);
      if (!q2) continue;
      const double t2 = n.dot(q2->uv() - p2);
      const double g = s + t1 - t2;
      out.diagnostics.min_gap = std::min(out.diagnostics.min_gap, g);
      if (g < -cfg_.epsilon && g >= cfg_.lambda) {
        out.occluded = true;
        out.occluder = p2;
        break;
      }
    }
    return out;
  }

 private:
  const Depthmap& dense_;
  CameraIntrinsics intr_;
  Vec3 translation_;
  ReplayConfig cfg_;
};

inline bool is_occluded(const PixelPoint& p1, const Depthmap& virtual_dense, const ReplayConfig& cfg,
                        const Vec3& translation, const CameraIntrinsics& intr) {
  return EpipolarOcclusionTest(virtual_dense, intr, translation, cfg).evaluate(p1).occluded;
}

/// Virtual LiDAR camera state shared by the detector and the baselines.
struct VirtualView {
  CameraIntrinsics intr;
  Vec3 translation = Vec3::Zero();  // [I t'] from the virtual to the RGB camera
  Vec3 offset = Vec3::Zero();       // origin correction in the rotated frame
  std::optional<CalibResult> calibration;
  std::vector<Vec3> points;  // R v + o, virtual camera frame
  Rasterization sparse;
  Depthmap dense;  // empty when no point lands in the virtual image
};

inline VirtualView build_virtual_view(const PointCloud& cloud, const RigidPose& pose,
                                      const CameraIntrinsics& intr_rgb, const ReplayConfig& cfg) {
  VirtualView view;
  view.intr = make_virtual_camera(intr_rgb, cfg.fov_margin);
  view.points.reserve(cloud.size());
  for (const auto& v : cloud.points) view.points.push_back(pose.rotation * v);

  if (cfg.autocalib) {
    DescentSpec descent = cfg.descent;
    if (descent.workers <= 0) descent.workers = cfg.workers;
    view.calibration = auto_calibrate(std::span<const Vec3>(view.points), cfg.raster, descent);
    view.offset = view.calibration->offset;
    for (auto& w : view.points) w += view.offset;
  }
  // R v + t = (R v + o) + (t - o)
  view.translation = pose.translation - view.offset;

  view.sparse = rasterize_camera_points(view.points, view.intr);
  if (view.sparse.depth.valid_count() > 0) view.dense = densify_nn(view.sparse.depth, cfg.workers);
  return view;
}

/// Clears every raw pixel whose depth-buffer winner is flagged.
inline Depthmap remove_flagged_pixels(const Rasterization& raw, const std::vector<PointStatus>& status) {
  Depthmap clean = raw.depth;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const auto src = raw.source[i];
    if (src >= 0 && status[static_cast<std::size_t>(src)] == PointStatus::kOccluded) {
      clean[i] = Depthmap::kInvalid;
    }
  }
  return clean;
}

inline void collect_indices(OcclusionResult& result) {
  result.occluded.clear();
  result.kept.clear();
  for (std::size_t i = 0; i < result.status.size(); ++i) {
    if (result.status[i] == PointStatus::kOccluded) result.occluded.push_back(i);
    if (result.status[i] == PointStatus::kKept) result.kept.push_back(i);
  }
}

/// Full pipeline: auto-calibration, virtual camera, sparse and dense
/// virtual depthmaps, per-point epipolar test, cleaned RGB depthmap.
inline OcclusionResult remove_artifacts(const PointCloud& cloud, const RigidPose& pose,
                                        const CameraIntrinsics& intr_rgb, const ReplayConfig& cfg) {
  cfg.validate();
  intr_rgb.validate();
  pose.validate(1e-6);
  if (cloud.empty()) throw Error("empty point cloud");

  OcclusionResult result;
  const VirtualView view = build_virtual_view(cloud, pose, intr_rgb, cfg);
  result.virtual_camera = view.intr;
  result.origin_offset = view.offset;
  result.calibration = view.calibration;

  const Rasterization raw = rasterize_with_sources(cloud, pose, intr_rgb);
  result.raw_depthmap = raw.depth;

  const std::size_t n = cloud.size();
  result.status.assign(n, PointStatus::kOutOfView);
  if (cfg.diagnostics) result.diagnostics.assign(n, PointDiagnostics{});

  std::optional<EpipolarOcclusionTest> test;
  if (!view.dense.empty()) test.emplace(view.dense, view.intr, view.translation, cfg);

  parallel_for(
      n,
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          const auto q = project(cloud.points[i], pose, intr_rgb);
          if (!q || !intr_rgb.contains(q->u, q->v)) continue;
          result.status[i] = PointStatus::kKept;
          if (!test) continue;
          const auto p1 = project(view.points[i], view.intr);
          if (!p1 || !view.intr.contains(p1->u, p1->v)) continue;
          const auto verdict = test->evaluate(*p1);
          if (verdict.occluded) result.status[i] = PointStatus::kOccluded;
          if (cfg.diagnostics) result.diagnostics[i] = verdict.diagnostics;
        }
      },
      cfg.workers);

  collect_indices(result);
  result.clean_depthmap = remove_flagged_pixels(raw, result.status);
  return result;
}

/// 8-bit style mask: true where a raw pixel was removed.
inline std::vector<std::uint8_t> removal_mask(const Depthmap& raw, const Depthmap& clean) {
  std::vector<std::uint8_t> mask(raw.size(), 0);
  for (std::size_t i = 0; i < raw.size(); ++i) mask[i] = (raw.valid(i) && !clean.valid(i)) ? 1 : 0;
  return mask;
}

}  // namespace depthclean
