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

#include <vector>

#include "depthclean/densify.hpp"
#include "depthclean/depthmap.hpp"
#include "depthclean/geometry.hpp"
#include "depthclean/occlusion.hpp"

namespace depthclean {

/// Depth buffering only ("Raw").
inline Depthmap raw_halfocc(const PointCloud& cloud, const RigidPose& pose,
                            const CameraIntrinsics& intr_rgb) {
  return rasterize_depthmap(cloud, pose, intr_rgb, CollisionPolicy::kMinDepth);
}

/// Relative depth slack of the modified half-occlusion comparison.
inline constexpr double kModifiedHalfOccSlack = 0.01;

/// Forward-warps every pixel of the densified virtual depthmap into the RGB
/// view (depth buffered) and drops raw points deeper than the warped surface
/// by more than `slack` (relative).
inline OcclusionResult modified_halfocc(const PointCloud& cloud, const RigidPose& pose,
                                        const CameraIntrinsics& intr_rgb, const ReplayConfig& cfg,
                                        double slack = kModifiedHalfOccSlack) {
  cfg.validate();
  intr_rgb.validate();
  pose.validate(1e-6);
  if (cloud.empty()) throw Error("empty point cloud");

  OcclusionResult result;
  const VirtualView view = build_virtual_view(cloud, pose, intr_rgb, cfg);
  result.virtual_camera = view.intr;
  result.origin_offset = view.offset;
  result.calibration = view.calibration;

  Depthmap warped(intr_rgb.width, intr_rgb.height);
  if (!view.dense.empty()) {
    std::vector<Vec3> surface;
    surface.reserve(view.dense.size());
    for (int v = 0; v < view.dense.height(); ++v) {
      for (int u = 0; u < view.dense.width(); ++u) {
        surface.push_back(back_project(u, v, view.dense.at(u, v), view.intr) + view.translation);
      }
    }
    warped = rasterize_camera_points(surface, intr_rgb).depth;
  }

  const Rasterization raw = rasterize_with_sources(cloud, pose, intr_rgb);
  result.raw_depthmap = raw.depth;
  result.status.assign(cloud.size(), PointStatus::kOutOfView);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto q = project(cloud.points[i], pose, intr_rgb);
    if (!q || !intr_rgb.contains(q->u, q->v)) continue;
    const int u = rasterize(q->u);
    const int v = rasterize(q->v);
    const bool deeper = warped.valid(u, v) && q->depth > warped.at(u, v) * (1.0 + slack);
    result.status[i] = deeper ? PointStatus::kOccluded : PointStatus::kKept;
  }
  collect_indices(result);
  result.clean_depthmap = remove_flagged_pixels(raw, result.status);
  return result;
}

}  // namespace depthclean
