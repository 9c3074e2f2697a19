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

// Origin auto-calibration. A LiDAR scan is a fan of rays from one center, so
// with the right origin no two returns share a direction. Points are binned
// on a (polar, azimuth) raster; the number of returns that collide with an
// already occupied bin is minimized over the origin offset by cyclic
// coordinate descent.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "depthclean/geometry.hpp"
#include "depthclean/parallel.hpp"

namespace depthclean {

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// Angular raster. Polar angle theta is measured from +y, azimuth phi in the
/// x-z plane (phi = 0 on +z). Bin k is centered at k * step.
struct RasterSpec {
  double theta_step = deg_to_rad(0.2);
  double phi_step = deg_to_rad(0.2);

  int theta_bins() const { return rasterize(std::numbers::pi / theta_step) + 1; }
  int phi_bins() const { return std::max(1, rasterize(2.0 * std::numbers::pi / phi_step)); }

  void validate() const {
    if (!(theta_step > 0.0) || !(phi_step > 0.0)) throw Error("raster steps must be positive");
  }
};

struct SphericalBin {
  int theta = 0;
  int phi = 0;

  bool operator==(const SphericalBin&) const = default;
};

/// Bin of u = point + offset. Absent when u is the origin.
inline std::optional<SphericalBin> spherical_map(const Vec3& point, const Vec3& offset,
                                                 const RasterSpec& spec) {
  const Vec3 u = point + offset;
  const double horizontal = std::hypot(u.x(), u.z());
  if (horizontal == 0.0 && u.y() == 0.0) return std::nullopt;
  const double theta = std::atan2(horizontal, u.y());  // [0, pi]
  const double phi = std::atan2(u.x(), u.z());         // (-pi, pi]
  const int n_theta = spec.theta_bins();
  const int n_phi = spec.phi_bins();
  int tb = rasterize(theta / spec.theta_step);
  tb = std::clamp(tb, 0, n_theta - 1);
  int pb = rasterize((phi + std::numbers::pi) / spec.phi_step) % n_phi;
  if (pb < 0) pb += n_phi;
  return SphericalBin{tb, pb};
}

/// Occupancy matrix S as a bitset, reused across loss evaluations.
class OccupancyRaster {
 public:
  explicit OccupancyRaster(const RasterSpec& spec)
      : spec_(spec), n_theta_(spec.theta_bins()), n_phi_(spec.phi_bins()) {
    spec.validate();
    words_.assign((static_cast<std::size_t>(n_theta_) * n_phi_ + 63) / 64, 0);
  }

  void clear() { std::fill(words_.begin(), words_.end(), 0); }

  /// Marks the bin of point + offset. Returns false for a degenerate point.
  bool insert(const Vec3& point, const Vec3& offset) {
    const auto bin = spherical_map(point, offset, spec_);
    if (!bin) return false;
    const std::size_t cell = static_cast<std::size_t>(bin->theta) * n_phi_ + bin->phi;
    words_[cell >> 6] |= std::uint64_t{1} << (cell & 63);
    return true;
  }

  void merge(const OccupancyRaster& other) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
  }

  std::size_t occupied() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  bool test(const SphericalBin& bin) const {
    const std::size_t cell = static_cast<std::size_t>(bin.theta) * n_phi_ + bin.phi;
    return (words_[cell >> 6] >> (cell & 63)) & 1u;
  }

  int theta_bins() const { return n_theta_; }
  int phi_bins() const { return n_phi_; }

 private:
  RasterSpec spec_;
  int n_theta_;
  int n_phi_;
  std::vector<std::uint64_t> words_;
};

/// L = |V| - |S|. Degenerate points count in neither term.
inline std::size_t duplication_loss(std::span<const Vec3> points, const Vec3& offset,
                                    const RasterSpec& spec, int workers = 1) {
  if (workers <= 0) workers = default_worker_count();
  if (workers == 1 || points.size() < 4096) {
    OccupancyRaster raster(spec);
    std::size_t n = 0;
    for (const auto& p : points) n += raster.insert(p, offset) ? 1 : 0;
    return n - raster.occupied();
  }
  std::vector<OccupancyRaster> partials(static_cast<std::size_t>(workers), OccupancyRaster(spec));
  std::vector<std::size_t> counts(partials.size(), 0);
  const std::size_t per = (points.size() + partials.size() - 1) / partials.size();
  parallel_for(
      partials.size(),
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) {
          const std::size_t lo = c * per;
          const std::size_t hi = std::min(points.size(), lo + per);
          for (std::size_t i = lo; i < hi; ++i) {
            counts[c] += partials[c].insert(points[i], offset) ? 1 : 0;
          }
        }
      },
      workers);
  std::size_t n = 0;
  for (std::size_t c = 0; c < partials.size(); ++c) {
    n += counts[c];
    if (c > 0) partials[0].merge(partials[c]);
  }
  return n - partials[0].occupied();
}

inline std::size_t duplication_loss(const PointCloud& cloud, const Vec3& offset,
                                    const RasterSpec& spec, int workers = 1) {
  if (cloud.empty()) throw Error("duplication loss of an empty cloud");
  return duplication_loss(std::span<const Vec3>(cloud.points), offset, spec, workers);
}

/// Coordinate descent schedule: probe offset +/- step on each axis in turn,
/// keep the better probe when it lowers the loss, halve the step after a
/// sweep without improvement.
struct DescentSpec {
  double initial_step = 0.05;  // meters
  double min_step = 1e-3;      // stop once the step drops below this
  int max_sweeps = 100;
  Vec3 initial_offset = Vec3::Zero();
  int workers = 1;
};

inline constexpr std::size_t kMinCalibrationPoints = 100;

struct CalibResult {
  Vec3 offset = Vec3::Zero();
  std::size_t initial_loss = 0;
  std::size_t final_loss = 0;
  int iterations = 0;  // completed sweeps
  bool converged = false;
  double final_step = 0.0;
  std::vector<std::size_t> loss_trajectory;  // accepted loss after each sweep, starting value first
};

inline CalibResult auto_calibrate(std::span<const Vec3> points, const RasterSpec& raster,
                                  const DescentSpec& descent) {
  raster.validate();
  if (points.size() < kMinCalibrationPoints) {
    throw Error("auto-calibration needs at least " + std::to_string(kMinCalibrationPoints) +
                " points, got " + std::to_string(points.size()));
  }
  if (!(descent.initial_step > 0.0) || !(descent.min_step > 0.0) || descent.max_sweeps < 0) {
    throw Error("invalid descent schedule");
  }

  const auto loss = [&](const Vec3& o) {
    return duplication_loss(points, o, raster, descent.workers);
  };

  CalibResult result;
  Vec3 offset = descent.initial_offset;
  std::size_t best = loss(offset);
  result.initial_loss = best;
  result.loss_trajectory.push_back(best);

  double step = descent.initial_step;
  int sweeps = 0;
  for (;;) {
    if (best == 0 || step < descent.min_step) {
      result.converged = true;
      break;
    }
    if (sweeps >= descent.max_sweeps) break;
    bool improved = false;
    for (int axis = 0; axis < 3; ++axis) {
      Vec3 plus = offset;
      Vec3 minus = offset;
      plus[axis] += step;
      minus[axis] -= step;
      const std::size_t lp = loss(plus);
      const std::size_t lm = loss(minus);
      const bool take_plus = lp <= lm;
      const std::size_t candidate = take_plus ? lp : lm;
      if (candidate < best) {
        best = candidate;
        offset = take_plus ? plus : minus;
        improved = true;
      }
    }
    ++sweeps;
    result.loss_trajectory.push_back(best);
    if (!improved) step *= 0.5;
  }

  result.offset = offset;
  result.final_loss = best;
  result.iterations = sweeps;
  result.final_step = step;
  return result;
}

inline CalibResult auto_calibrate(const PointCloud& cloud, const RasterSpec& raster = {},
                                  const DescentSpec& descent = {}) {
  return auto_calibrate(std::span<const Vec3>(cloud.points), raster, descent);
}

}  // namespace depthclean
