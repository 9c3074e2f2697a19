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

// JSON interchange: synthetic scene descriptions (input) and reports
// (output). Every emitted document carries "schema_version".

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "depthclean/autocalib.hpp"
#include "depthclean/geometry.hpp"
#include "depthclean/metrics.hpp"
#include "depthclean/occlusion.hpp"
#include "depthclean/raycast.hpp"
#include "depthclean/synth.hpp"

namespace depthclean {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Scene file violation, located by the JSON pointer of the offending field.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& pointer, const std::string& what)
      : Error(pointer + ": " + what), pointer_(pointer) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

namespace detail {

inline std::string child_pointer(const std::string& parent, const std::string& key) {
  std::string token;
  for (char c : key) {
    if (c == '~') {
      token += "~0";
    } else if (c == '/') {
      token += "~1";
    } else {
      token += c;
    }
  }
  return parent + "/" + token;
}

inline std::string child_pointer(const std::string& parent, std::size_t index) {
  return parent + "/" + std::to_string(index);
}

class SceneReader {
 public:
  static const Json& member(const Json& obj, const std::string& ptr, const std::string& key) {
    if (!obj.is_object()) throw SchemaError(ptr.empty() ? "/" : ptr, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(child_pointer(ptr, key), "required field is missing");
    return *it;
  }

  static double number(const Json& j, const std::string& ptr) {
    if (!j.is_number()) throw SchemaError(ptr, "expected a number");
    const double x = j.get<double>();
    if (!std::isfinite(x)) throw SchemaError(ptr, "expected a finite number");
    return x;
  }

  static double positive(const Json& j, const std::string& ptr) {
    const double x = number(j, ptr);
    if (!(x > 0.0)) throw SchemaError(ptr, "expected a positive number");
    return x;
  }

  static int integer(const Json& j, const std::string& ptr) {
    if (!j.is_number_integer()) throw SchemaError(ptr, "expected an integer");
    return j.get<int>();
  }

  static Vec3 vec3(const Json& j, const std::string& ptr) {
    if (!j.is_array() || j.size() != 3) throw SchemaError(ptr, "expected an array of 3 numbers");
    return {number(j[0], child_pointer(ptr, 0)), number(j[1], child_pointer(ptr, 1)),
            number(j[2], child_pointer(ptr, 2))};
  }

  static Vec3 unit(const Json& j, const std::string& ptr) {
    const Vec3 v = vec3(j, ptr);
    if (!(v.norm() > 1e-12)) throw SchemaError(ptr, "expected a non-zero vector");
    return v.normalized();
  }

  static Mat3 rotation(const Json& j, const std::string& ptr) {
    if (!j.is_array() || j.size() != 3) throw SchemaError(ptr, "expected a 3x3 array");
    Mat3 r;
    for (std::size_t i = 0; i < 3; ++i) r.row(static_cast<int>(i)) = vec3(j[i], child_pointer(ptr, i)).transpose();
    if (!is_rotation(r, 1e-6)) throw SchemaError(ptr, "matrix is not a rotation");
    return r;
  }

  static Primitive primitive(const Json& j, const std::string& ptr) {
    const Json& type = member(j, ptr, "type");
    if (!type.is_string()) throw SchemaError(child_pointer(ptr, "type"), "expected a string");
    const auto t = type.get<std::string>();
    const auto at = [&](const char* key) { return child_pointer(ptr, key); };
    if (t == "box") {
      Box b{vec3(member(j, ptr, "min"), at("min")), vec3(member(j, ptr, "max"), at("max"))};
      if (!((b.max - b.min).minCoeff() > 0.0)) throw SchemaError(at("max"), "box max must exceed min on every axis");
      return b;
    }
    if (t == "rectangle") {
      Rectangle r;
      r.center = vec3(member(j, ptr, "center"), at("center"));
      r.normal = unit(member(j, ptr, "normal"), at("normal"));
      r.u_axis = unit(member(j, ptr, "u_axis"), at("u_axis"));
      if (std::abs(r.normal.dot(r.u_axis)) > 1e-9) throw SchemaError(at("u_axis"), "must be orthogonal to normal");
      r.half_u = positive(member(j, ptr, "half_u"), at("half_u"));
      r.half_v = positive(member(j, ptr, "half_v"), at("half_v"));
      return r;
    }
    if (t == "sphere") {
      return Sphere{vec3(member(j, ptr, "center"), at("center")), positive(member(j, ptr, "radius"), at("radius"))};
    }
    throw SchemaError(at("type"), "unknown primitive type '" + t + "'");
  }

  static CameraIntrinsics camera(const Json& j, const std::string& ptr) {
    const auto at = [&](const char* key) { return child_pointer(ptr, key); };
    CameraIntrinsics c;
    c.fx = positive(member(j, ptr, "fx"), at("fx"));
    c.fy = positive(member(j, ptr, "fy"), at("fy"));
    c.cx = number(member(j, ptr, "cx"), at("cx"));
    c.cy = number(member(j, ptr, "cy"), at("cy"));
    c.width = integer(member(j, ptr, "width"), at("width"));
    c.height = integer(member(j, ptr, "height"), at("height"));
    if (c.width <= 0) throw SchemaError(at("width"), "expected a positive integer");
    if (c.height <= 0) throw SchemaError(at("height"), "expected a positive integer");
    return c;
  }

  // [min, max, step] in degrees.
  static void angle_range(const Json& j, const std::string& ptr, double& lo, double& hi, double& step) {
    if (!j.is_array() || j.size() != 3) throw SchemaError(ptr, "expected [min, max, step] in degrees");
    lo = deg_to_rad(number(j[0], child_pointer(ptr, 0)));
    hi = deg_to_rad(number(j[1], child_pointer(ptr, 1)));
    step = deg_to_rad(positive(j[2], child_pointer(ptr, 2)));
    if (!(hi >= lo)) throw SchemaError(child_pointer(ptr, 1), "max must not be below min");
  }

  static BeamSpec beams(const Json& j, const std::string& ptr, BeamSpec b) {
    if (!j.is_object()) throw SchemaError(ptr, "expected an object");
    const auto at = [&](const char* key) { return child_pointer(ptr, key); };
    if (j.contains("azimuth_deg")) angle_range(j["azimuth_deg"], at("azimuth_deg"), b.azimuth_min, b.azimuth_max, b.azimuth_step);
    if (j.contains("elevation_deg")) {
      angle_range(j["elevation_deg"], at("elevation_deg"), b.elevation_min, b.elevation_max, b.elevation_step);
    }
    if (j.contains("max_range")) b.max_range = positive(j["max_range"], at("max_range"));
    if (j.contains("jitter")) {
      b.jitter = number(j["jitter"], at("jitter"));
      if (!(b.jitter >= 0.0 && b.jitter < 1.0)) throw SchemaError(at("jitter"), "expected a value in [0, 1)");
    }
    if (j.contains("seed")) {
      if (!j["seed"].is_number_unsigned()) throw SchemaError(at("seed"), "expected a non-negative integer");
      b.seed = j["seed"].get<std::uint64_t>();
    }
    return b;
  }
};

}  // namespace detail

/// Parses a scene document. Either "street" (generated layout) or
/// "primitives" (explicit) must be present; "camera", "lidar" and
/// "rgb_origin" override the defaults.
inline SyntheticFrame parse_scene(const Json& doc) {
  using R = detail::SceneReader;
  if (!doc.is_object()) throw SchemaError("/", "expected an object");
  if (doc.contains("schema_version")) {
    if (R::integer(doc["schema_version"], "/schema_version") != kSchemaVersion) {
      throw SchemaError("/schema_version", "unsupported schema version");
    }
  }

  SyntheticFrame f;
  const bool street = doc.contains("street");
  const bool explicit_prims = doc.contains("primitives");
  if (street == explicit_prims) throw SchemaError("/", "exactly one of 'street' or 'primitives' is required");

  if (street) {
    const Json& s = doc["street"];
    if (!s.is_object()) throw SchemaError("/street", "expected an object");
    std::uint64_t seed = 0;
    if (s.contains("seed")) {
      if (!s["seed"].is_number_unsigned()) throw SchemaError("/street/seed", "expected a non-negative integer");
      seed = s["seed"].get<std::uint64_t>();
    }
    double baseline = 0.4;
    if (s.contains("baseline")) baseline = R::number(s["baseline"], "/street/baseline");
    if (!(baseline >= 0.0)) throw SchemaError("/street/baseline", "expected a non-negative number");
    StreetSceneSpec spec;
    if (s.contains("facade")) {
      if (!s["facade"].is_boolean()) throw SchemaError("/street/facade", "expected a boolean");
      spec.facade = s["facade"].get<bool>();
    }
    f = make_street_scene(seed, default_lidar_offset(baseline), spec);
  } else {
    const Json& prims = doc["primitives"];
    if (!prims.is_array() || prims.empty()) throw SchemaError("/primitives", "expected a non-empty array");
    f.camera = kitti_like_camera();
    f.lidar.rotation = lidar_axes_in_camera();
    for (std::size_t i = 0; i < prims.size(); ++i) {
      f.scene.primitives.push_back(R::primitive(prims[i], detail::child_pointer("/primitives", i)));
    }
  }

  if (doc.contains("camera")) f.camera = R::camera(doc["camera"], "/camera");
  if (doc.contains("rgb_origin")) f.rgb_origin = R::vec3(doc["rgb_origin"], "/rgb_origin");
  if (doc.contains("lidar")) {
    const Json& l = doc["lidar"];
    if (!l.is_object()) throw SchemaError("/lidar", "expected an object");
    if (l.contains("origin")) f.lidar.origin = R::vec3(l["origin"], "/lidar/origin");
    if (l.contains("rotation")) f.lidar.rotation = R::rotation(l["rotation"], "/lidar/rotation");
    if (l.contains("beams")) f.beams = R::beams(l["beams"], "/lidar/beams", f.beams);
  }
  return f;
}

inline SyntheticFrame load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw SchemaError("/", std::string("invalid JSON: ") + e.what());
  }
  return parse_scene(doc);
}

// ---------------------------------------------------------------------------
// Reports

inline Json vec3_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline Json to_json(const CalibResult& c) {
  return Json{{"offset", vec3_json(c.offset)},
              {"initial_loss", c.initial_loss},
              {"final_loss", c.final_loss},
              {"iterations", c.iterations},
              {"converged", c.converged},
              {"final_step", c.final_step},
              {"loss_trajectory", c.loss_trajectory}};
}

inline Json to_json(const MetricsReport& m) {
  return Json{{"schema_version", kSchemaVersion},
              {"delta_0.5", m.delta_05},
              {"delta_1", m.delta_1},
              {"delta_2", m.delta_2},
              {"delta_3", m.delta_3},
              {"rms", m.rms},
              {"rms_log", m.rms_log},
              {"abs_rel", m.abs_rel},
              {"sq_rel", m.sq_rel},
              {"log10", m.log10},
              {"silog", m.silog},
              {"n_pixels", m.n_pixels}};
}

inline Json to_json(const CameraIntrinsics& c) {
  return Json{{"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy}, {"width", c.width}, {"height", c.height}};
}

/// Column order of the aligned metrics table.
inline std::string metrics_table(const MetricsReport& m) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%8s %8s %8s %8s %8s %8s %8s %8s %8s %10s\n"
                "%8.4f %8.4f %8.4f %8.3f %8.4f %8.4f %8.4f %8.4f %8.3f %10zu\n",
                "d0.5", "d1", "d2", "RMS", "RMSlog", "ARel", "SRel", "log10", "SIlog", "pixels",
                m.delta_05, m.delta_1, m.delta_2, m.rms, m.rms_log, m.abs_rel, m.sq_rel, m.log10, m.silog,
                m.n_pixels);
  return buf;
}

/// Per-point diagnostics of one frame: status, epipolar displacement t and
/// the smallest gap seen, plus the origin correction.
inline Json diagnostics_json(const OcclusionResult& r) {
  Json points = Json::array();
  for (std::size_t i = 0; i < r.status.size(); ++i) {
    Json p{{"index", i},
           {"status", r.status[i] == PointStatus::kOccluded ? "occluded"
                      : r.status[i] == PointStatus::kKept   ? "kept"
                                                            : "out_of_view"}};
    if (i < r.diagnostics.size()) {
      const auto& d = r.diagnostics[i];
      p["t"] = std::isfinite(d.t) ? Json(d.t) : Json(nullptr);
      p["min_gap"] = std::isfinite(d.min_gap) ? Json(d.min_gap) : Json(nullptr);
      p["steps"] = d.steps;
    }
    points.push_back(std::move(p));
  }
  Json doc{{"schema_version", kSchemaVersion},
           {"origin_offset", vec3_json(r.origin_offset)},
           {"virtual_camera", to_json(r.virtual_camera)},
           {"occluded", r.occluded.size()},
           {"kept", r.kept.size()},
           {"points", std::move(points)}};
  if (r.calibration) doc["autocalib"] = to_json(*r.calibration);
  return doc;
}

inline void write_json(const Json& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace depthclean
