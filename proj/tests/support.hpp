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

// Fixtures shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "depthclean/depthclean.hpp"

namespace depthclean::testing {

/// 64 x 900 beam grid at 0.4 degrees whose angles sit on the centers of a
/// matched spherical raster once the cloud is in camera-aligned axes
/// (elevation e maps to polar angle 90 + e, azimuth a to -a). Jitter moves
/// each beam inside its own bin, so the true origin has zero duplication
/// while nearby offsets do not.
inline constexpr double kCalibStepDeg = 0.4;
inline constexpr double kCalibJitter = 0.92;

inline BeamSpec calibration_beams(std::uint64_t seed) {
  BeamSpec b;
  b.azimuth_step = deg_to_rad(kCalibStepDeg);
  b.azimuth_min = deg_to_rad(-180.0);
  b.azimuth_max = deg_to_rad(-180.0 + 899 * kCalibStepDeg);
  b.elevation_step = deg_to_rad(kCalibStepDeg);
  b.elevation_min = deg_to_rad(-20.0);
  b.elevation_max = deg_to_rad(-20.0 + 63 * kCalibStepDeg);
  b.max_range = 200.0;
  b.jitter = kCalibJitter;
  b.seed = seed;
  return b;
}

inline RasterSpec calibration_raster() {
  return RasterSpec{deg_to_rad(kCalibStepDeg), deg_to_rad(kCalibStepDeg)};
}

/// Walled yard (LiDAR frame, z up) 30-45 m to each side with a few
/// crate-sized boxes, sensor 1.8 m above the floor.
inline Scene calibration_yard(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double hx = 30.0 * (1.0 + 0.5 * (u(rng) + 1.0));
  const double hy = 30.0 * (1.0 + 0.5 * (u(rng) + 1.0));
  Scene scene;
  scene.primitives.emplace_back(Box{Vec3(-hx, -hy, -1.8), Vec3(hx, hy, 100.0)});
  for (int b = 0; b < 4; ++b) {
    const Vec3 c(u(rng) * hx * 0.7, u(rng) * hy * 0.7, -1.8);
    if (c.head<2>().norm() < 1.5) continue;
    scene.primitives.emplace_back(Box{c - Vec3(0.8, 0.8, 0.0), c + Vec3(0.8, 0.8, 2.0 + u(rng))});
  }
  return scene;
}

/// One calibration trial: a yard scan rotated into camera axes.
struct CalibrationScan {
  std::vector<Vec3> points;  // camera-aligned, true origin at zero
  std::mt19937_64 rng;       // continues the trial's random stream
};

inline CalibrationScan calibration_scan(std::uint64_t seed) {
  CalibrationScan out{{}, std::mt19937_64(seed)};
  const Scene yard = calibration_yard(out.rng);
  const PointCloud cloud = simulate_scan(yard, LidarMount{}, calibration_beams(seed * 7 + 1));
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(lidar_axes_in_camera() * p);
  return out;
}

/// Uniform sample of the ball of radius r.
inline Vec3 random_in_ball(std::mt19937_64& rng, double r) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    const Vec3 v(u(rng), u(rng), u(rng));
    if (v.norm() <= 1.0) return v * r;
  }
}

/// Random valid-pixel pattern with the given fill ratio.
inline Depthmap random_sparse_map(std::mt19937_64& rng, int w, int h, double fill, double lo = 1.0,
                                  double hi = 80.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Depthmap m(w, h);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (u(rng) < fill) m[i] = lo + (hi - lo) * u(rng);
  }
  return m;
}

/// Ground plane plus two cars seen by a LiDAR 0.4 m above and left of the
/// camera.
inline SyntheticFrame two_box_street() {
  StreetSceneSpec spec;
  spec.min_boxes = 0;
  spec.max_boxes = 0;
  spec.facade = false;
  SyntheticFrame f = make_street_scene(0, default_lidar_offset(0.4), spec);
  f.scene.primitives.emplace_back(Box{Vec3(-2.4, 0.15, 8.0), Vec3(-0.6, 1.65, 12.5)});
  f.scene.primitives.emplace_back(Box{Vec3(1.2, 0.05, 14.0), Vec3(3.0, 1.65, 18.5)});
  return f;
}

/// Exhaustive nearest valid pixel; ties to smaller v, then smaller u.
inline Depthmap brute_force_nn(const Depthmap& sparse) {
  Depthmap out(sparse.width(), sparse.height());
  for (int v = 0; v < sparse.height(); ++v) {
    for (int u = 0; u < sparse.width(); ++u) {
      long best = std::numeric_limits<long>::max();
      double value = 0.0;
      for (int sv = 0; sv < sparse.height(); ++sv) {
        for (int su = 0; su < sparse.width(); ++su) {
          if (!sparse.valid(su, sv)) continue;
          const long d2 = long(su - u) * (su - u) + long(sv - v) * (sv - v);
          if (d2 < best) {
            best = d2;
            value = sparse.at(su, sv);
          }
        }
      }
      out.at(u, v) = value;
    }
  }
  return out;
}

/// Per-pixel metrics written straight from their definitions (gt in (0, 80]).
inline MetricsReport scalar_reference(const Depthmap& pred, const Depthmap& gt) {
  MetricsReport r;
  double n = 0, d05 = 0, d1 = 0, d2 = 0, d3 = 0, sq = 0, sql = 0, ar = 0, sr = 0, l10 = 0, s = 0, s2 = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double p = pred[i];
    const double g = gt[i];
    if (!(p > 0) || !(g > 0) || g > 80.0) continue;
    n += 1;
    const double ratio = std::max(p / g, g / p);
    d05 += ratio < std::sqrt(1.25);
    d1 += ratio < 1.25;
    d2 += ratio < 1.25 * 1.25;
    d3 += ratio < 1.25 * 1.25 * 1.25;
    sq += (p - g) * (p - g);
    sql += (std::log(p) - std::log(g)) * (std::log(p) - std::log(g));
    ar += std::abs(p - g) / g;
    sr += (p - g) * (p - g) / g;
    l10 += std::abs(std::log10(p) - std::log10(g));
    const double d = std::log(p) - std::log(g);
    s += d;
    s2 += d * d;
  }
  r.n_pixels = static_cast<std::size_t>(n);
  r.delta_05 = d05 / n;
  r.delta_1 = d1 / n;
  r.delta_2 = d2 / n;
  r.delta_3 = d3 / n;
  r.rms = std::sqrt(sq / n);
  r.rms_log = std::sqrt(sql / n);
  r.abs_rel = ar / n;
  r.sq_rel = sr / n;
  r.log10 = l10 / n;
  r.silog = 100.0 * std::sqrt(s2 / n - (s / n) * (s / n));
  return r;
}

}  // namespace depthclean::testing
