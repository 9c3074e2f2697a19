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
#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include "depthclean/geometry.hpp"

namespace depthclean {

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();  // unit length

  Vec3 at(double t) const { return origin + t * direction; }
};

/// Axis-aligned box, hit from outside or inside.
struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Ones();
};

/// Planar rectangle. Infinite half extents give an unbounded plane.
struct Rectangle {
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitY();
  Vec3 u_axis = Vec3::UnitX();  // in-plane, orthogonal to normal
  double half_u = 1.0;
  double half_v = 1.0;

  Vec3 v_axis() const { return normal.cross(u_axis); }
};

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
};

using Primitive = std::variant<Box, Rectangle, Sphere>;

/// Smallest ray parameter t > t_min at which the ray meets the surface.
inline std::optional<double> intersect(const Ray& ray, const Box& box, double t_min) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double o = ray.origin[a];
    const double d = ray.direction[a];
    if (d == 0.0) {
      if (o < box.min[a] || o > box.max[a]) return std::nullopt;
      continue;
    }
    double t0 = (box.min[a] - o) / d;
    double t1 = (box.max[a] - o) / d;
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return std::nullopt;
  }
  if (t_near > t_min) return t_near;
  if (t_far > t_min) return t_far;
  return std::nullopt;
}

inline std::optional<double> intersect(const Ray& ray, const Rectangle& rect, double t_min) {
  const double denom = ray.direction.dot(rect.normal);
  if (std::abs(denom) < 1e-15) return std::nullopt;
  const double t = (rect.center - ray.origin).dot(rect.normal) / denom;
  if (!(t > t_min)) return std::nullopt;
  const Vec3 rel = ray.at(t) - rect.center;
  if (std::abs(rel.dot(rect.u_axis)) > rect.half_u) return std::nullopt;
  if (std::abs(rel.dot(rect.v_axis())) > rect.half_v) return std::nullopt;
  return t;
}

inline std::optional<double> intersect(const Ray& ray, const Sphere& sphere, double t_min) {
  const Vec3 oc = ray.origin - sphere.center;
  const double b = oc.dot(ray.direction);
  const double c = oc.squaredNorm() - sphere.radius * sphere.radius;
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  const double t0 = -b - root;
  if (t0 > t_min) return t0;
  const double t1 = -b + root;
  if (t1 > t_min) return t1;
  return std::nullopt;
}

inline std::optional<double> intersect(const Ray& ray, const Primitive& prim, double t_min) {
  return std::visit([&](const auto& p) { return intersect(ray, p, t_min); }, prim);
}

inline bool has_positive_extent(const Primitive& prim) {
  return std::visit(
      [](const auto& p) -> bool {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Box>) {
          return (p.max - p.min).minCoeff() > 0.0;
        } else if constexpr (std::is_same_v<T, Rectangle>) {
          return p.half_u > 0.0 && p.half_v > 0.0 && std::abs(p.normal.norm() - 1.0) < 1e-9 &&
                 std::abs(p.u_axis.norm() - 1.0) < 1e-9 && std::abs(p.normal.dot(p.u_axis)) < 1e-9;
        } else {
          return p.radius > 0.0;
        }
      },
      prim);
}

struct Hit {
  double t = 0.0;
  std::size_t primitive = 0;
};

struct Scene {
  std::vector<Primitive> primitives;

  /// Nearest intersection with t in (t_min, t_max).
  std::optional<Hit> first_hit(const Ray& ray, double t_min = 0.0,
                               double t_max = std::numeric_limits<double>::infinity()) const {
    std::optional<Hit> best;
    for (std::size_t i = 0; i < primitives.size(); ++i) {
      const auto t = intersect(ray, primitives[i], t_min);
      if (t && *t < t_max && (!best || *t < best->t)) best = Hit{*t, i};
    }
    return best;
  }

  void validate() const {
    if (primitives.empty()) throw Error("scene has no primitives");
    for (const auto& p : primitives) {
      if (!has_positive_extent(p)) throw Error("scene primitive has non-positive extent");
    }
  }
};

}  // namespace depthclean
