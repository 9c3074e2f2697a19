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

// Synthetic ground truth: parametric scenes, first-hit LiDAR simulation and
// an exact visibility oracle for the RGB camera.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "depthclean/autocalib.hpp"
#include "depthclean/geometry.hpp"
#include "depthclean/occlusion.hpp"
#include "depthclean/raycast.hpp"

namespace depthclean {

/// Angular beam grid in the LiDAR frame (x forward, y left, z up). Azimuth
/// turns about +z from +x, elevation is measured from the x-y plane. Angles
/// in radians; jitter is a fraction of the step, drawn uniformly in
/// [-jitter/2, jitter/2] per beam and axis.
struct BeamSpec {
  double azimuth_min = deg_to_rad(-180.0);
  double azimuth_max = deg_to_rad(179.8);
  double azimuth_step = deg_to_rad(0.2);
  double elevation_min = deg_to_rad(-24.8);
  double elevation_max = deg_to_rad(2.0);
  double elevation_step = deg_to_rad(0.2);
  double max_range = 200.0;
  double jitter = 0.0;
  std::uint64_t seed = 0;

  int azimuth_count() const {
    return std::max(0, rasterize((azimuth_max - azimuth_min) / azimuth_step) + 1);
  }
  int elevation_count() const {
    return std::max(0, rasterize((elevation_max - elevation_min) / elevation_step) + 1);
  }

  void validate() const {
    if (!(azimuth_step > 0.0) || !(elevation_step > 0.0)) throw Error("beam steps must be positive");
    if (azimuth_count() < 1 || elevation_count() < 1) throw Error("beam grid is empty");
    if (!(max_range > 0.0)) throw Error("max range must be positive");
    if (!(jitter >= 0.0 && jitter < 1.0)) throw Error("beam jitter must be in [0, 1)");
  }
};

/// LiDAR pose in the world frame: world = rotation * lidar + origin.
struct LidarMount {
  Vec3 origin = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();

  RigidPose lidar_to_world() const { return RigidPose{rotation, origin}; }
};

/// LiDAR axes (x forward, y left, z up) expressed in camera axes
/// (x right, y down, z forward).
inline Mat3 lidar_axes_in_camera() {
  Mat3 r;
  r << 0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0;
  return r;
}

inline Vec3 beam_direction(double azimuth, double elevation) {
  return {std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth),
          std::sin(elevation)};
}

struct ScanResult {
  PointCloud cloud;                    // LiDAR frame
  std::vector<Vec3> world_points;      // same points, world frame
  std::vector<std::size_t> primitive;  // primitive hit by each return
};

/// First-hit ray casting over the beam grid. Beams without a hit inside
/// max_range produce no point. Rows are ordered by elevation, then azimuth.
inline ScanResult simulate_scan_detailed(const Scene& scene, const LidarMount& mount,
                                         const BeamSpec& beams) {
  scene.validate();
  beams.validate();
  ScanResult out;
  std::mt19937_64 rng(beams.seed);
  std::uniform_real_distribution<double> uniform(-0.5, 0.5);
  const int n_el = beams.elevation_count();
  const int n_az = beams.azimuth_count();
  for (int i = 0; i < n_el; ++i) {
    for (int j = 0; j < n_az; ++j) {
      double el = beams.elevation_min + i * beams.elevation_step;
      double az = beams.azimuth_min + j * beams.azimuth_step;
      if (beams.jitter > 0.0) {
        el += beams.jitter * beams.elevation_step * uniform(rng);
        az += beams.jitter * beams.azimuth_step * uniform(rng);
      }
      const Vec3 dir_lidar = beam_direction(az, el);
      const Ray ray{mount.origin, mount.rotation * dir_lidar};
      const auto hit = scene.first_hit(ray, 1e-9, beams.max_range);
      if (!hit) continue;
      out.cloud.points.push_back(hit->t * dir_lidar);
      out.world_points.push_back(ray.at(hit->t));
      out.primitive.push_back(hit->primitive);
    }
  }
  return out;
}

inline PointCloud simulate_scan(const Scene& scene, const LidarMount& mount, const BeamSpec& beams) {
  return simulate_scan_detailed(scene, mount, beams).cloud;
}

/// Per point: hidden from the RGB camera or not, plus the blocking surface
/// point when hidden.
struct VisibilityLabel {
  std::vector<std::uint8_t> occluded;
  std::vector<std::optional<Vec3>> blocker;

  std::size_t count() const {
    std::size_t n = 0;
    for (auto o : occluded) n += o;
    return n;
  }
};

inline constexpr double kDefaultOracleTolerance = 1e-6;

/// A point is hidden iff a scene surface crosses the segment from the RGB
/// center to the point closer than (range - tol).
inline VisibilityLabel visibility_oracle(const PointCloud& cloud, const RigidPose& lidar_to_world,
                                         const Scene& scene, const Vec3& rgb_origin,
                                         double tol = kDefaultOracleTolerance) {
  VisibilityLabel labels;
  labels.occluded.assign(cloud.size(), 0);
  labels.blocker.assign(cloud.size(), std::nullopt);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 x = lidar_to_world.apply(cloud.points[i]);
    const Vec3 d = x - rgb_origin;
    const double range = d.norm();
    if (range <= tol) continue;
    const Ray ray{rgb_origin, d / range};
    if (const auto hit = scene.first_hit(ray, 1e-9, range - tol)) {
      labels.occluded[i] = 1;
      labels.blocker[i] = ray.at(hit->t);
    }
  }
  return labels;
}

struct DetectionScore {
  std::optional<double> precision;  // absent when nothing was flagged
  std::optional<double> recall;     // absent when the labels have no positives
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  std::size_t evaluated = 0;  // points visible in the RGB frustum
};

inline DetectionScore score_detector(const OcclusionResult& flags, const VisibilityLabel& labels) {
  if (flags.status.size() != labels.occluded.size()) {
    throw Error("detector output and labels index different point sets");
  }
  DetectionScore s;
  for (std::size_t i = 0; i < flags.status.size(); ++i) {
    if (flags.status[i] == PointStatus::kOutOfView) continue;
    ++s.evaluated;
    const bool flagged = flags.status[i] == PointStatus::kOccluded;
    const bool truth = labels.occluded[i] != 0;
    if (flagged && truth) ++s.true_positives;
    if (flagged && !truth) ++s.false_positives;
    if (!flagged && truth) ++s.false_negatives;
  }
  const std::size_t flagged = s.true_positives + s.false_positives;
  const std::size_t positives = s.true_positives + s.false_negatives;
  if (flagged > 0) s.precision = static_cast<double>(s.true_positives) / flagged;
  if (positives > 0) s.recall = static_cast<double>(s.true_positives) / positives;
  return s;
}

/// A complete synthetic frame. The world frame is the RGB camera frame.
struct SyntheticFrame {
  Scene scene;
  LidarMount lidar;
  BeamSpec beams;
  CameraIntrinsics camera;
  Vec3 rgb_origin = Vec3::Zero();

  /// Extrinsic LiDAR -> RGB camera.
  RigidPose lidar_to_camera() const {
    return RigidPose{lidar.rotation, lidar.origin - rgb_origin};
  }
};

inline CameraIntrinsics kitti_like_camera() {
  return CameraIntrinsics{721.5377, 721.5377, 609.5593, 172.854, 1242, 375};
}

/// Parameters of the street-like generator. Box sizes are uniform in the
/// given ranges (meters); boxes stand on the ground at depth z_front and
/// lateral position x in [-x_spread, x_spread] * z_front.
struct StreetSceneSpec {
  double ground_y = 1.65;
  int min_boxes = 2;
  int max_boxes = 4;
  double width_min = 1.6, width_max = 2.0;
  double height_min = 1.4, height_max = 1.8;
  double length_min = 3.8, length_max = 4.8;
  double z_front_min = 6.0, z_front_max = 25.0;
  double x_spread = 0.35;
  bool facade = true;  // building front 35-55 m away
};

/// Street-like layout in RGB camera coordinates: ground plane 1.65 m below
/// the camera, car-sized boxes standing on it and a building front behind. `lidar_offset` is the
/// LiDAR center in camera coordinates.
inline SyntheticFrame make_street_scene(std::uint64_t seed, const Vec3& lidar_offset,
                                        const StreetSceneSpec& spec = {}) {
  if (spec.min_boxes < 0 || spec.max_boxes < spec.min_boxes) throw Error("invalid box count range");
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  SyntheticFrame f;
  f.camera = kitti_like_camera();
  f.lidar.origin = lidar_offset;
  f.lidar.rotation = lidar_axes_in_camera();

  Rectangle ground;
  ground.center = Vec3(0.0, spec.ground_y, 50.0);
  ground.normal = Vec3(0.0, -1.0, 0.0);
  ground.u_axis = Vec3::UnitX();
  ground.half_u = 80.0;
  ground.half_v = 80.0;
  f.scene.primitives.emplace_back(ground);

  if (spec.facade) {
    const double facade_z = uniform(35.0, 55.0);
    const double facade_h = uniform(6.0, 12.0);
    Rectangle facade;
    facade.center = Vec3(0.0, spec.ground_y - 0.5 * facade_h, facade_z);
    facade.normal = Vec3(0.0, 0.0, -1.0);
    facade.u_axis = Vec3::UnitX();
    facade.half_u = 60.0;
    facade.half_v = 0.5 * facade_h;
    f.scene.primitives.emplace_back(facade);
  }

  const int boxes = std::uniform_int_distribution<int>(spec.min_boxes, spec.max_boxes)(rng);
  for (int b = 0; b < boxes; ++b) {
    const double width = uniform(spec.width_min, spec.width_max);
    const double height = uniform(spec.height_min, spec.height_max);
    const double length = uniform(spec.length_min, spec.length_max);
    const double z_front = uniform(spec.z_front_min, spec.z_front_max);
    const double x_center = uniform(-spec.x_spread, spec.x_spread) * z_front;
    Box box;
    box.min = Vec3(x_center - 0.5 * width, spec.ground_y - height, z_front);
    box.max = Vec3(x_center + 0.5 * width, spec.ground_y, z_front + length);
    f.scene.primitives.emplace_back(box);
  }

  f.beams.azimuth_min = deg_to_rad(-50.0);
  f.beams.azimuth_max = deg_to_rad(50.0);
  f.beams.azimuth_step = deg_to_rad(0.2);
  f.beams.elevation_min = deg_to_rad(-25.0);
  f.beams.elevation_max = deg_to_rad(14.0);
  f.beams.elevation_step = deg_to_rad(0.2);
  f.beams.max_range = 150.0;
  return f;
}

/// 0.4 m baseline with the LiDAR above and to the left of the camera.
inline Vec3 default_lidar_offset(double baseline = 0.4) {
  return Vec3(-1.0, -1.0, 0.0).normalized() * baseline;
}

}  // namespace depthclean
