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
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>

namespace depthclean {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Points with camera-frame z at or below this value are behind the camera.
inline constexpr double kMinVisibleDepth = 1e-6;

/// Rasterization operator: round half up, pixel centers at integers.
inline int rasterize(double coordinate) {
  return static_cast<int>(std::floor(coordinate + 0.5));
}

/// Pinhole camera. Pixel centers sit at integer (u, v), origin top-left.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && width >= 1 && height >= 1 && std::isfinite(fx) &&
           std::isfinite(fy) && std::isfinite(cx) && std::isfinite(cy);
  }

  void validate() const {
    if (!valid()) throw Error("invalid camera intrinsics: need fx, fy > 0 and a non-empty image");
  }

  Mat3 matrix() const {
    Mat3 k;
    k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return k;
  }

  Mat3 inverse_matrix() const {
    Mat3 k;
    k << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
    return k;
  }

  /// True when the rasterized pixel of (u, v) lies inside the image.
  bool contains(double u, double v) const {
    const int iu = rasterize(u);
    const int iv = rasterize(v);
    return iu >= 0 && iv >= 0 && iu < width && iv < height;
  }

  bool operator==(const CameraIntrinsics&) const = default;
};

inline bool is_rotation(const Mat3& r, double tol = 1e-9) {
  if (!r.allFinite()) return false;
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

/// Rigid transform x -> R x + t (the extrinsic P = [R t]).
struct RigidPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidPose identity() { return {}; }

  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }

  RigidPose inverse() const {
    RigidPose inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    return inv;
  }

  Eigen::Matrix<double, 3, 4> matrix() const {
    Eigen::Matrix<double, 3, 4> m;
    m.leftCols<3>() = rotation;
    m.col(3) = translation;
    return m;
  }

  void validate(double tol = 1e-9) const {
    if (!is_rotation(rotation, tol)) throw Error("pose rotation is not a valid rotation matrix");
    if (!translation.allFinite()) throw Error("pose translation is not finite");
  }
};

/// outer ∘ inner: applies `inner` first.
inline RigidPose compose(const RigidPose& outer, const RigidPose& inner) {
  RigidPose out;
  out.rotation = outer.rotation * inner.rotation;
  out.translation = outer.rotation * inner.translation + outer.translation;
  return out;
}

/// Ordered 3D points in the sensor frame plus an optional per-point scalar.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<float> payload;  // empty, or one entry per point

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  bool finite() const {
    for (const auto& p : points) {
      if (!p.allFinite()) return false;
    }
    return true;
  }
};

/// Continuous pixel location plus camera-frame depth.
struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;

  Vec2 uv() const { return {u, v}; }
};

/// Projects a point already expressed in the camera frame.
inline std::optional<PixelPoint> project(const Vec3& camera_point, const CameraIntrinsics& intr) {
  const double z = camera_point.z();
  if (!(z > kMinVisibleDepth)) return std::nullopt;
  return PixelPoint{intr.fx * camera_point.x() / z + intr.cx,
                    intr.fy * camera_point.y() / z + intr.cy, z};
}

/// pi(R x + t | K). No bounds clipping; callers clip.
inline std::optional<PixelPoint> project(const Vec3& point, const RigidPose& pose,
                                         const CameraIntrinsics& intr) {
  return project(pose.apply(point), intr);
}

inline Vec3 back_project(double u, double v, double depth, const CameraIntrinsics& intr) {
  return {(u - intr.cx) / intr.fx * depth, (v - intr.cy) / intr.fy * depth, depth};
}

inline Vec3 back_project(const PixelPoint& p, const CameraIntrinsics& intr) {
  return back_project(p.u, p.v, p.depth, intr);
}

struct PoseDecomposition {
  RigidPose rotation_only;     // [R 0]
  RigidPose translation_only;  // [I t]
};

/// P = P2 P1 with P1 = [R 0] and P2 = [I t].
inline PoseDecomposition decompose_pose(const RigidPose& pose) {
  PoseDecomposition d;
  d.rotation_only.rotation = pose.rotation;
  d.translation_only.translation = pose.translation;
  return d;
}

struct EpipolarMotion {
  Vec2 direction;   // unit, from p toward q
  double distance;  // t = n^T (q - p) = |q - p|
};

/// Direction of the epipolar motion p -> q. Absent when p == q (no motion).
inline std::optional<EpipolarMotion> epipolar_direction(const Vec2& p, const Vec2& q) {
  const Vec2 d = q - p;
  const double len = d.norm();
  if (!(len > 1e-12)) return std::nullopt;
  return EpipolarMotion{d / len, len};
}

inline Mat3 cross_matrix(const Vec3& t) {
  Mat3 m;
  m << 0.0, -t.z(), t.y(), t.z(), 0.0, -t.x(), -t.y(), t.x(), 0.0;
  return m;
}

/// Homogeneous line a u + b v + c = 0 with (a, b) unit length.
using Line2 = Eigen::Vector3d;

/// Epipolar line in the right image of left pixel p: K_r^-T [t]x R K_l^-1 p.
/// Absent for a zero translation, where no epipolar constraint exists.
inline std::optional<Line2> epipolar_line(const Vec2& p, const RigidPose& pose,
                                          const CameraIntrinsics& intr_l,
                                          const CameraIntrinsics& intr_r) {
  if (!(pose.translation.norm() > 0.0)) return std::nullopt;
  const Mat3 f = intr_r.inverse_matrix().transpose() * cross_matrix(pose.translation) *
                 pose.rotation * intr_l.inverse_matrix();
  Line2 l = f * Vec3(p.x(), p.y(), 1.0);
  const double scale = l.head<2>().norm();
  if (!(scale > 0.0)) return std::nullopt;
  return Line2(l / scale);
}

/// 2D affine map between pixel conventions of two pinhole cameras.
struct AffineRemap {
  Mat3 matrix = Mat3::Identity();

  Vec2 apply(const Vec2& uv) const {
    const Vec3 h = matrix * Vec3(uv.x(), uv.y(), 1.0);
    return h.head<2>() / h.z();
  }

  bool is_identity(double tol = 0.0) const {
    return (matrix - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol;
  }
};

/// A = K_l K_r^-1: right-camera pixels into the left-camera convention.
inline AffineRemap unify_intrinsics(const CameraIntrinsics& intr_l, const CameraIntrinsics& intr_r) {
  intr_l.validate();
  intr_r.validate();
  return AffineRemap{intr_l.matrix() * intr_r.inverse_matrix()};
}

/// Image-space direction in which a pixel moves under the pure translation
/// x -> x + t. Every such motion lies on a line through the epipole K t.
/// Absent at the epipole itself and for t = 0.
inline std::optional<Vec2> translation_flow_direction(const Vec2& pixel, const Vec3& t,
                                                      const CameraIntrinsics& intr) {
  Vec2 dir;
  if (std::abs(t.z()) <= 1e-12) {
    dir = Vec2(intr.fx * t.x(), intr.fy * t.y());
  } else {
    const Vec2 epipole(intr.fx * t.x() / t.z() + intr.cx, intr.fy * t.y() / t.z() + intr.cy);
    dir = (epipole - pixel) * (t.z() > 0.0 ? 1.0 : -1.0);
  }
  const double len = dir.norm();
  if (!(len > 1e-12)) return std::nullopt;
  return Vec2(dir / len);
}

}  // namespace depthclean
