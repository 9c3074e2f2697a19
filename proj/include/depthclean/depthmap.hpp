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
#include <cstddef>
#include <span>
#include <vector>

#include "depthclean/geometry.hpp"

namespace depthclean {

/// Row-major depth grid in meters. Entries <= 0 or non-finite are invalid.
class Depthmap {
 public:
  static constexpr double kInvalid = 0.0;

  Depthmap() = default;
  Depthmap(int width, int height) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw Error("depthmap dimensions must be non-negative");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), kInvalid);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(u);
  }

  bool in_bounds(int u, int v) const { return u >= 0 && v >= 0 && u < width_ && v < height_; }

  double at(int u, int v) const { return data_[index(u, v)]; }
  double& at(int u, int v) { return data_[index(u, v)]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  static bool is_valid(double d) { return d > 0.0 && std::isfinite(d); }
  bool valid(int u, int v) const { return is_valid(at(u, v)); }
  bool valid(std::size_t i) const { return is_valid(data_[i]); }

  std::size_t valid_count() const {
    std::size_t n = 0;
    for (double d : data_) n += is_valid(d) ? 1 : 0;
    return n;
  }

  bool same_shape(const Depthmap& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  bool operator==(const Depthmap&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Every valid pixel of `subset` is valid in `superset` with the same value.
inline bool is_pixelwise_subset(const Depthmap& subset, const Depthmap& superset) {
  if (!subset.same_shape(superset)) return false;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    if (subset.valid(i) && (!superset.valid(i) || superset[i] != subset[i])) return false;
  }
  return true;
}

}  // namespace depthclean
