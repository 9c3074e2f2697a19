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

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "depthclean/depthmap.hpp"
#include "depthclean/geometry.hpp"
#include "depthclean/parallel.hpp"

namespace depthclean {

enum class CollisionPolicy {
  kMinDepth,  // depth buffering: the nearest point wins a shared pixel
};

/// Depthmap plus the index of the point that won each pixel (-1 if empty).
struct Rasterization {
  Depthmap depth;
  std::vector<std::int64_t> source;
  std::size_t projected = 0;   // points that landed inside the image
  std::size_t collisions = 0;  // points that landed on an already occupied pixel
};

/// Rasterizes points given in the camera frame. Points behind the camera or
/// outside the image are dropped. Equal depths keep the lower point index.
inline Rasterization rasterize_camera_points(std::span<const Vec3> camera_points,
                                             const CameraIntrinsics& intr,
                                             CollisionPolicy policy = CollisionPolicy::kMinDepth) {
  (void)policy;
  intr.validate();
  Rasterization r;
  r.depth = Depthmap(intr.width, intr.height);
  r.source.assign(r.depth.size(), -1);
  for (std::size_t i = 0; i < camera_points.size(); ++i) {
    const auto px = project(camera_points[i], intr);
    if (!px) continue;
    const int u = rasterize(px->u);
    const int v = rasterize(px->v);
    if (!r.depth.in_bounds(u, v)) continue;
    ++r.projected;
    const std::size_t idx = r.depth.index(u, v);
    if (r.source[idx] >= 0) {
      ++r.collisions;
      if (!(px->depth < r.depth[idx])) continue;
    }
    r.depth[idx] = px->depth;
    r.source[idx] = static_cast<std::int64_t>(i);
  }
  return r;
}

inline Rasterization rasterize_with_sources(const PointCloud& cloud, const RigidPose& pose,
                                            const CameraIntrinsics& intr,
                                            CollisionPolicy policy = CollisionPolicy::kMinDepth) {
  std::vector<Vec3> camera_points;
  camera_points.reserve(cloud.size());
  for (const auto& p : cloud.points) camera_points.push_back(pose.apply(p));
  return rasterize_camera_points(camera_points, intr, policy);
}

inline Depthmap rasterize_depthmap(const PointCloud& cloud, const RigidPose& pose,
                                   const CameraIntrinsics& intr,
                                   CollisionPolicy policy = CollisionPolicy::kMinDepth) {
  return rasterize_with_sources(cloud, pose, intr, policy).depth;
}

/// Dense map plus, per pixel, the flat index of the sparse pixel it copied.
struct NearestFill {
  Depthmap dense;
  std::vector<std::int32_t> source_pixel;
};

/// Exact nearest-neighbor fill (Euclidean pixel distance, unlimited radius).
/// Ties go to the source with the smaller v, then the smaller u.
///
/// Two passes: per column, the nearest valid row (ties upward); per row, a
/// scan over columns at increasing |du| that stops once du^2 exceeds the best
/// squared distance found, so ties across columns are resolved exactly.
inline NearestFill densify_nn_with_sources(const Depthmap& sparse, int workers = 0) {
  const int w = sparse.width();
  const int h = sparse.height();
  if (sparse.valid_count() == 0) throw Error("empty depthmap: nothing to densify");

  constexpr std::int32_t kNone = -1;
  // Column pass: nearest valid row in the same column.
  std::vector<std::int32_t> column_row(sparse.size(), kNone);
  parallel_for(
      static_cast<std::size_t>(w),
      [&](std::size_t begin, std::size_t end) {
        std::vector<std::int32_t> above(static_cast<std::size_t>(h));
        for (std::size_t cu = begin; cu < end; ++cu) {
          const int u = static_cast<int>(cu);
          std::int32_t last = kNone;
          for (int v = 0; v < h; ++v) {
            if (sparse.valid(u, v)) last = v;
            above[static_cast<std::size_t>(v)] = last;
          }
          std::int32_t next = kNone;
          for (int v = h - 1; v >= 0; --v) {
            if (sparse.valid(u, v)) next = v;
            const std::int32_t a = above[static_cast<std::size_t>(v)];
            std::int32_t best = kNone;
            if (a != kNone && next != kNone) {
              best = (v - a <= next - v) ? a : next;
            } else {
              best = (a != kNone) ? a : next;
            }
            column_row[sparse.index(u, v)] = best;
          }
        }
      },
      workers);

  NearestFill out;
  out.dense = Depthmap(w, h);
  out.source_pixel.assign(sparse.size(), kNone);
  parallel_for(
      static_cast<std::size_t>(h),
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t cv = begin; cv < end; ++cv) {
          const int v = static_cast<int>(cv);
          for (int u = 0; u < w; ++u) {
            std::int64_t best_d2 = std::numeric_limits<std::int64_t>::max();
            int best_u = -1;
            int best_v = -1;
            auto consider = [&](int cu) {
              const std::int32_t sv = column_row[sparse.index(cu, v)];
              if (sv == kNone) return;
              const std::int64_t du = cu - u;
              const std::int64_t dv = sv - v;
              const std::int64_t d2 = du * du + dv * dv;
              if (d2 < best_d2 || (d2 == best_d2 && (sv < best_v || (sv == best_v && cu < best_u)))) {
                best_d2 = d2;
                best_u = cu;
                best_v = sv;
              }
            };
            consider(u);
            for (int r = 1;; ++r) {
              const std::int64_t r2 = static_cast<std::int64_t>(r) * r;
              if (r2 > best_d2) break;
              const bool left = u - r >= 0;
              const bool right = u + r < w;
              if (!left && !right) break;
              if (left) consider(u - r);
              if (right) consider(u + r);
            }
            const std::size_t idx = out.dense.index(u, v);
            const std::size_t src = sparse.index(best_u, best_v);
            out.dense[idx] = sparse[src];
            out.source_pixel[idx] = static_cast<std::int32_t>(src);
          }
        }
      },
      workers);
  return out;
}

inline Depthmap densify_nn(const Depthmap& sparse, int workers = 0) {
  return densify_nn_with_sources(sparse, workers).dense;
}

/// Bilinear blend of the four pixels around (u, v). Absent outside
/// [0, width-1] x [0, height-1] or when a contributing pixel is invalid.
inline std::optional<double> sample_bilinear(const Depthmap& map, double u, double v) {
  const int w = map.width();
  const int h = map.height();
  if (!(u >= 0.0 && v >= 0.0 && u <= w - 1 && v <= h - 1)) return std::nullopt;
  int u0 = static_cast<int>(u);
  int v0 = static_cast<int>(v);
  if (u0 > w - 2) u0 = std::max(0, w - 2);
  if (v0 > h - 2) v0 = std::max(0, h - 2);
  const int u1 = std::min(u0 + 1, w - 1);
  const int v1 = std::min(v0 + 1, h - 1);
  const double a = u - u0;
  const double b = v - v0;
  const double w00 = (1.0 - a) * (1.0 - b);
  const double w10 = a * (1.0 - b);
  const double w01 = (1.0 - a) * b;
  const double w11 = a * b;
  double value = 0.0;
  const auto add = [&](int pu, int pv, double weight) {
    if (weight == 0.0) return true;
    const double d = map.at(pu, pv);
    if (!Depthmap::is_valid(d)) return false;
    value += weight * d;
    return true;
  };
  if (!add(u0, v0, w00) || !add(u1, v0, w10) || !add(u0, v1, w01) || !add(u1, v1, w11)) {
    return std::nullopt;
  }
  return value;
}

}  // namespace depthclean
