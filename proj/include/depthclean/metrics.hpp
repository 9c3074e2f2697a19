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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "depthclean/depthmap.hpp"
#include "depthclean/geometry.hpp"

namespace depthclean {

/// Standard monocular depth metrics over jointly valid pixels.
struct MetricsReport {
  double delta_05 = 0.0;  // max(e, 1/e) < 1.25^0.5
  double delta_1 = 0.0;
  double delta_2 = 0.0;
  double delta_3 = 0.0;
  double rms = 0.0;
  double rms_log = 0.0;
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double log10 = 0.0;
  double silog = 0.0;
  std::size_t n_pixels = 0;
};

inline constexpr std::array<double, 4> kDeltaExponents{0.5, 1.0, 2.0, 3.0};

enum class RegionLabel : std::uint8_t { kForeground, kBackground, kIgnore };

enum class Region { kAll, kForeground, kBackground };

struct RegionMask {
  int width = 0;
  int height = 0;
  std::vector<RegionLabel> labels;  // row-major

  RegionMask() = default;
  RegionMask(int w, int h, RegionLabel fill = RegionLabel::kBackground)
      : width(w), height(h), labels(static_cast<std::size_t>(w) * h, fill) {}

  RegionLabel at(int u, int v) const { return labels[static_cast<std::size_t>(v) * width + u]; }
  RegionLabel& at(int u, int v) { return labels[static_cast<std::size_t>(v) * width + u]; }
};

inline bool region_selects(Region region, RegionLabel label) {
  switch (region) {
    case Region::kAll:
      return label != RegionLabel::kIgnore;
    case Region::kForeground:
      return label == RegionLabel::kForeground;
    case Region::kBackground:
      return label == RegionLabel::kBackground;
  }
  return false;
}

/// Ground truth outside (min_depth, max_depth] is ignored.
struct EvalOptions {
  double min_depth = 0.0;
  double max_depth = 80.0;
};

namespace detail {

// Natural log split as ln(m) + e * ln 2 with m in [0.5, 1). Scaling the
// argument by a power of two only changes e, which keeps SIlog exact under
// such scalings.
struct SplitLog {
  double mantissa_log = 0.0;
  int exponent = 0;
};

inline SplitLog split_log(double x) {
  int e = 0;
  const double m = std::frexp(x, &e);
  return {std::log(m), e};
}

inline MetricsReport compute_metrics(const Depthmap& pred, const Depthmap& gt,
                                     const std::vector<std::size_t>& pixels) {
  const std::size_t n = pixels.size();
  MetricsReport r;
  r.n_pixels = n;
  if (n == 0) throw Error("empty evaluation");

  std::array<double, 4> thresholds{};
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    thresholds[k] = std::pow(1.25, kDeltaExponents[k]);
  }
  std::array<std::size_t, 4> within{};
  double sq = 0.0, sq_log = 0.0, abs_rel = 0.0, sq_rel = 0.0, log10 = 0.0;
  double mantissa_sum = 0.0;
  long long exponent_sum = 0;
  std::vector<double> mantissa(n);
  std::vector<long long> exponent(n);

  for (std::size_t j = 0; j < n; ++j) {
    const double p = pred[pixels[j]];
    const double g = gt[pixels[j]];
    const double ratio = std::max(p / g, g / p);
    for (std::size_t k = 0; k < thresholds.size(); ++k) within[k] += ratio < thresholds[k] ? 1 : 0;
    const double diff = p - g;
    const double log_diff = std::log(p) - std::log(g);
    sq += diff * diff;
    sq_log += log_diff * log_diff;
    abs_rel += std::abs(diff) / g;
    sq_rel += diff * diff / g;
    log10 += std::abs(std::log10(p) - std::log10(g));

    const SplitLog lp = split_log(p);
    const SplitLog lg = split_log(g);
    mantissa[j] = lp.mantissa_log - lg.mantissa_log;
    exponent[j] = static_cast<long long>(lp.exponent) - lg.exponent;
    mantissa_sum += mantissa[j];
    exponent_sum += exponent[j];
  }

  const double dn = static_cast<double>(n);
  r.delta_05 = within[0] / dn;
  r.delta_1 = within[1] / dn;
  r.delta_2 = within[2] / dn;
  r.delta_3 = within[3] / dn;
  r.rms = std::sqrt(sq / dn);
  r.rms_log = std::sqrt(sq_log / dn);
  r.abs_rel = abs_rel / dn;
  r.sq_rel = sq_rel / dn;
  r.log10 = log10 / dn;

  // Variance of l = a + k ln2 around its mean; the integer part is centered
  // exactly so a common exponent shift cancels before any rounding.
  const double mantissa_mean = mantissa_sum / dn;
  const long long ln = static_cast<long long>(n);
  double var = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double centered_exp = static_cast<double>(ln * exponent[j] - exponent_sum) / dn;
    const double c = (mantissa[j] - mantissa_mean) + centered_exp * std::numbers::ln2;
    var += c * c;
  }
  r.silog = 100.0 * std::sqrt(var / dn);
  return r;
}

inline bool gt_in_range(double g, const EvalOptions& opt) {
  return Depthmap::is_valid(g) && g > opt.min_depth && g <= opt.max_depth;
}

}  // namespace detail

/// Metrics over pixels valid in both maps, inside the gt depth range and
/// selected by `region` when a mask is given.
inline MetricsReport evaluate(const Depthmap& pred, const Depthmap& gt,
                              const RegionMask* mask = nullptr, Region region = Region::kAll,
                              const EvalOptions& opt = {}) {
  if (!pred.same_shape(gt)) throw Error("prediction and ground truth differ in shape");
  if (mask && (mask->width != gt.width() || mask->height != gt.height())) {
    throw Error("region mask differs in shape from the depthmaps");
  }
  std::vector<std::size_t> pixels;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!pred.valid(i) || !detail::gt_in_range(gt[i], opt)) continue;
    if (mask && !region_selects(region, mask->labels[i])) continue;
    pixels.push_back(i);
  }
  return detail::compute_metrics(pred, gt, pixels);
}

/// Evaluates the raw depth of exactly the pixels the cleaning removed.
inline MetricsReport evaluate_removed(const Depthmap& raw, const Depthmap& cleaned, const Depthmap& gt,
                                      const EvalOptions& opt = {}) {
  if (!raw.same_shape(cleaned) || !raw.same_shape(gt)) throw Error("depthmaps differ in shape");
  if (!is_pixelwise_subset(cleaned, raw)) throw Error("cleaned depthmap is not a subset of raw");
  std::vector<std::size_t> pixels;
  bool removed_any = false;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!raw.valid(i) || cleaned.valid(i)) continue;
    removed_any = true;
    if (detail::gt_in_range(gt[i], opt)) pixels.push_back(i);
  }
  if (!removed_any) throw Error("nothing removed");
  return detail::compute_metrics(raw, gt, pixels);
}

/// Unit image direction of the epipolar line through a pixel; absent where
/// undefined (epipole).
using DirectionField = std::function<std::optional<Vec2>(double u, double v)>;

/// Epipolar lines of the RGB image for a LiDAR center at `lidar_center`
/// (RGB camera frame).
inline DirectionField epipolar_direction_field(const Vec3& lidar_center, const CameraIntrinsics& intr) {
  return [lidar_center, intr](double u, double v) {
    return translation_flow_direction(Vec2(u, v), lidar_center, intr);
  };
}

/// Sorted artifact widths with nearest-rank percentiles.
struct WidthDistribution {
  std::vector<double> widths;

  bool empty() const { return widths.empty(); }

  /// p in [0, 100]; p = 0 gives the minimum.
  double percentile(double p) const {
    if (widths.empty()) throw Error("percentile of an empty width distribution");
    if (!(p >= 0.0 && p <= 100.0)) throw Error("percentile must be in [0, 100]");
    const auto n = static_cast<double>(widths.size());
    const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(p / 100.0 * n)));
    return widths[std::min(widths.size(), rank) - 1];
  }

  /// (percentile, width) rows at the given percentiles.
  std::vector<std::pair<double, double>> table(const std::vector<double>& percentiles) const {
    std::vector<std::pair<double, double>> rows;
    if (widths.empty()) return rows;
    for (double p : percentiles) rows.emplace_back(p, percentile(p));
    return rows;
  }
};

inline std::vector<double> default_percentiles() {
  std::vector<double> ps;
  for (int p = 5; p <= 100; p += 5) ps.push_back(p);
  return ps;
}

/// Empty pixels tolerated inside one run, bridging the gaps between
/// neighboring LiDAR returns.
inline constexpr int kDefaultWidthGap = 3;

/// For every removed pixel (valid in raw, invalid in cleaned), the extent
/// in pixels of its run of removed pixels along the local epipolar line.
/// A run continues through at most `max_gap` consecutive empty pixels and
/// stops at any pixel that is kept.
inline WidthDistribution artifact_width_histogram(const Depthmap& raw, const Depthmap& cleaned,
                                                  const DirectionField& direction,
                                                  int max_gap = kDefaultWidthGap) {
  if (!raw.same_shape(cleaned)) throw Error("depthmaps differ in shape");
  if (!is_pixelwise_subset(cleaned, raw)) throw Error("cleaned depthmap is not a subset of raw");
  if (max_gap < 0) throw Error("max gap must be non-negative");

  const auto removed = [&](int u, int v) { return raw.valid(u, v) && !cleaned.valid(u, v); };
  // Farthest removed pixel reached along +dir (in steps of one pixel).
  const auto reach = [&](int u0, int v0, const Vec2& dir) {
    int last = 0;
    int gap = 0;
    for (int k = 1;; ++k) {
      const int u = rasterize(u0 + k * dir.x());
      const int v = rasterize(v0 + k * dir.y());
      if (!raw.in_bounds(u, v)) break;
      if (removed(u, v)) {
        last = k;
        gap = 0;
      } else if (!raw.valid(u, v) && ++gap <= max_gap) {
        continue;
      } else {
        break;
      }
    }
    return last;
  };

  WidthDistribution out;
  for (int v = 0; v < raw.height(); ++v) {
    for (int u = 0; u < raw.width(); ++u) {
      if (!removed(u, v)) continue;
      const auto dir = direction(u, v);
      if (!dir) {
        out.widths.push_back(1.0);
        continue;
      }
      out.widths.push_back(static_cast<double>(reach(u, v, *dir) + reach(u, v, -*dir) + 1));
    }
  }
  std::sort(out.widths.begin(), out.widths.end());
  return out;
}

}  // namespace depthclean
