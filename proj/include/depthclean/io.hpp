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

// KITTI-style file formats: velodyne .bin clouds, calibration text files,
// 16-bit depth PNGs (value = depth * 256, 0 = invalid) and 8-bit masks.

#include <png.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "depthclean/depthmap.hpp"
#include "depthclean/geometry.hpp"

namespace depthclean {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Velodyne binary clouds

namespace detail {

inline std::uint32_t load_le32(const unsigned char* b) {
  return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
         (std::uint32_t{b[3]} << 24);
}

inline void store_le32(std::uint32_t x, unsigned char* b) {
  b[0] = static_cast<unsigned char>(x);
  b[1] = static_cast<unsigned char>(x >> 8);
  b[2] = static_cast<unsigned char>(x >> 16);
  b[3] = static_cast<unsigned char>(x >> 24);
}

inline std::vector<unsigned char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

inline constexpr std::size_t kVelodyneRecordBytes = 16;

/// Little-endian float32 quadruplets (x, y, z, reflectance). Points with a
/// NaN coordinate are dropped; their number is stored in `dropped_nan`.
inline PointCloud read_velodyne_bin(const fs::path& path, std::size_t* dropped_nan = nullptr) {
  const auto bytes = detail::read_file(path);
  if (bytes.size() % kVelodyneRecordBytes != 0) {
    const std::size_t offset = bytes.size() - bytes.size() % kVelodyneRecordBytes;
    throw Error(path.string() + ": truncated record at byte offset " + std::to_string(offset));
  }
  PointCloud cloud;
  const std::size_t n = bytes.size() / kVelodyneRecordBytes;
  cloud.points.reserve(n);
  cloud.payload.reserve(n);
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    float f[4];
    for (int k = 0; k < 4; ++k) {
      f[k] = std::bit_cast<float>(detail::load_le32(bytes.data() + i * kVelodyneRecordBytes + 4 * k));
    }
    if (std::isnan(f[0]) || std::isnan(f[1]) || std::isnan(f[2])) {
      ++dropped;
      continue;
    }
    cloud.points.emplace_back(f[0], f[1], f[2]);
    cloud.payload.push_back(f[3]);
  }
  if (dropped_nan) *dropped_nan = dropped;
  return cloud;
}

/// Coordinates are narrowed to float32; a missing payload is written as 0.
inline void write_velodyne_bin(const PointCloud& cloud, const fs::path& path) {
  if (!cloud.payload.empty() && cloud.payload.size() != cloud.size()) {
    throw Error("payload size does not match point count");
  }
  std::vector<unsigned char> bytes(cloud.size() * kVelodyneRecordBytes);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const float f[4] = {static_cast<float>(cloud.points[i].x()), static_cast<float>(cloud.points[i].y()),
                        static_cast<float>(cloud.points[i].z()),
                        cloud.payload.empty() ? 0.0f : cloud.payload[i]};
    for (int k = 0; k < 4; ++k) {
      detail::store_le32(std::bit_cast<std::uint32_t>(f[k]), bytes.data() + i * kVelodyneRecordBytes + 4 * k);
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Calibration text

/// "key: v1 v2 ..." entries of one or more calibration files. Values are
/// parsed lazily so unrelated entries (e.g. calib_time) never fail.
class CalibFile {
 public:
  CalibFile() = default;

  static CalibFile parse(std::istream& in, const std::string& source) {
    CalibFile file;
    file.add(in, source);
    return file;
  }

  static CalibFile load(const std::vector<fs::path>& paths) {
    CalibFile file;
    for (const auto& p : paths) {
      std::ifstream in(p);
      if (!in) throw Error("cannot open " + p.string());
      file.add(in, p.string());
    }
    return file;
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  /// Exactly `count` floats of `key`.
  std::vector<double> values(const std::string& key, std::size_t count) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw Error("calibration: missing key " + key);
    const Entry& e = it->second;
    const std::string where = e.source + ":" + std::to_string(e.line);
    std::vector<double> out;
    std::istringstream tokens(e.text);
    std::string tok;
    while (tokens >> tok) {
      double x = 0.0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
      if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(x)) {
        throw Error(where + ": malformed number '" + tok + "' in " + key);
      }
      out.push_back(x);
    }
    if (out.size() != count) {
      throw Error(where + ": " + key + " has " + std::to_string(out.size()) + " values, expected " +
                  std::to_string(count));
    }
    return out;
  }

 private:
  struct Entry {
    std::string text;
    std::string source;
    int line = 0;
  };

  void add(std::istream& in, const std::string& source) {
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
      ++number;
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      std::string key = line.substr(0, colon);
      key.erase(0, key.find_first_not_of(" \t"));
      key.erase(key.find_last_not_of(" \t\r") + 1);
      if (key.empty()) continue;
      entries_[key] = Entry{line.substr(colon + 1), source, number};
    }
  }

  std::map<std::string, Entry> entries_;
};

inline constexpr double kCalibOrthonormalTolerance = 1e-4;

/// Nearest rotation in the Frobenius sense (polar factor with det = +1).
inline Mat3 nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

inline Mat3 checked_rotation(const std::vector<double>& v, const std::string& key) {
  Mat3 r;
  r << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
  const double err = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(err <= kCalibOrthonormalTolerance) || r.determinant() <= 0.0) {
    throw Error("calibration: " + key + " is not a rotation (orthonormality error " + std::to_string(err) + ")");
  }
  return nearest_rotation(r);
}

struct Calibration {
  RigidPose lidar_to_camera;
  CameraIntrinsics intrinsics;
};

/// Camera index selects P_rect_0c / S_rect_0c (raw) or Pc (odometry).
struct CalibOptions {
  int camera = 2;
};

/// Pose: Tr_velo_to_cam or Tr (3x4), else R (3x3) and T (3). An optional
/// rectifying rotation (R_rect_00 or R0_rect) is applied on the left.
/// Intrinsics: P_rect_0c or Pc (3x4; its fourth column is folded into the
/// pose as K^-1 p4), else K (3x3). Image size: S_rect_0c or S (2).
inline Calibration read_calib(const CalibFile& file, const CalibOptions& opt = {}) {
  const std::string cam = std::to_string(opt.camera);
  Mat3 r;
  Vec3 t;
  if (const char* key = file.has("Tr_velo_to_cam") ? "Tr_velo_to_cam" : file.has("Tr") ? "Tr" : nullptr) {
    const auto v = file.values(key, 12);
    r = checked_rotation({v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10]}, key);
    t = Vec3(v[3], v[7], v[11]);
  } else {
    r = checked_rotation(file.values("R", 9), "R");
    const auto tv = file.values("T", 3);
    t = Vec3(tv[0], tv[1], tv[2]);
  }

  for (const char* key : {"R_rect_00", "R0_rect"}) {
    if (!file.has(key)) continue;
    const Mat3 rect = checked_rotation(file.values(key, 9), key);
    r = rect * r;
    t = rect * t;
    break;
  }

  Calibration out;
  const std::string p_rect = "P_rect_0" + cam;
  const std::string p_odo = "P" + cam;
  Mat3 k;
  if (file.has(p_rect) || file.has(p_odo)) {
    const std::string key = file.has(p_rect) ? p_rect : p_odo;
    const auto v = file.values(key, 12);
    k << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    t += k.inverse() * Vec3(v[3], v[7], v[11]);
  } else if (file.has("K")) {
    const auto v = file.values("K", 9);
    k << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
  } else {
    throw Error("calibration: missing key " + p_rect + " (or " + p_odo + ", K)");
  }
  if (std::abs(k(0, 1)) > 1e-9 || std::abs(k(1, 0)) > 1e-9 || std::abs(k(2, 0)) > 1e-9 ||
      std::abs(k(2, 1)) > 1e-9 || std::abs(k(2, 2) - 1.0) > 1e-9) {
    throw Error("calibration: intrinsic matrix has skew or is not normalized");
  }

  const std::string s_rect = "S_rect_0" + cam;
  const std::string s_key = file.has(s_rect) ? s_rect : "S";
  if (!file.has(s_key)) throw Error("calibration: missing key " + s_rect + " (or S)");
  const auto s = file.values(s_key, 2);
  if (s[0] != std::floor(s[0]) || s[1] != std::floor(s[1])) {
    throw Error("calibration: image size " + s_key + " is not integral");
  }

  out.intrinsics = CameraIntrinsics{k(0, 0), k(1, 1), k(0, 2), k(1, 2), static_cast<int>(s[0]),
                                    static_cast<int>(s[1])};
  out.intrinsics.validate();
  out.lidar_to_camera = RigidPose{nearest_rotation(r), t};
  return out;
}

inline Calibration read_calib(const std::vector<fs::path>& paths, const CalibOptions& opt = {}) {
  return read_calib(CalibFile::load(paths), opt);
}

inline Calibration read_calib(const fs::path& path, const CalibOptions& opt = {}) {
  return read_calib(std::vector<fs::path>{path}, opt);
}

/// Writes R, T, K and S so that read_calib recovers the same calibration.
inline void write_calib(const Calibration& calib, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  const Mat3& r = calib.lidar_to_camera.rotation;
  const Vec3& t = calib.lidar_to_camera.translation;
  const Mat3 k = calib.intrinsics.matrix();
  out << "R:";
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out << ' ' << r(i, j);
  out << "\nT: " << t.x() << ' ' << t.y() << ' ' << t.z() << "\nK:";
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out << ' ' << k(i, j);
  out << "\nS: " << calib.intrinsics.width << ' ' << calib.intrinsics.height << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// PNG

inline constexpr double kDepthPngScale = 256.0;

namespace detail {

struct PngError {
  std::jmp_buf jump;
  char message[256] = {};
};

inline void png_error_handler(png_structp png, png_const_charp msg) {
  auto* err = static_cast<PngError*>(png_get_error_ptr(png));
  std::snprintf(err->message, sizeof(err->message), "%s", msg);
  std::longjmp(err->jump, 1);
}

inline void png_warning_handler(png_structp, png_const_charp) {}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Gray image rows, 1 or 2 bytes per sample, big-endian for 16 bit.
inline void write_gray_png(const fs::path& path, int width, int height, int bit_depth,
                           const std::vector<unsigned char>& data) {
  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw Error("cannot write " + path.string());
  PngError err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_handler, png_warning_handler);
  if (!png) throw Error("png: out of memory");
  png_infop info = png_create_info_struct(png);
  const std::size_t stride = static_cast<std::size_t>(width) * (bit_depth / 8);
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  if (setjmp(err.jump)) {
    png_destroy_write_struct(&png, &info);
    throw Error(path.string() + ": png write failed: " + err.message);
  }
  if (!info) png_error(png, "out of memory");
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  for (int v = 0; v < height; ++v) {
    rows[static_cast<std::size_t>(v)] = const_cast<png_bytep>(data.data() + v * stride);
  }
  png_set_rows(png, info, rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
}

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> data;
};

inline GrayImage read_gray_png(const fs::path& path, int expected_bit_depth) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw Error("cannot open " + path.string());
  unsigned char sig[8] = {};
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error(path.string() + ": not a PNG file");
  }
  PngError err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_handler, png_warning_handler);
  if (!png) throw Error("png: out of memory");
  png_infop info = png_create_info_struct(png);
  GrayImage img;
  std::vector<png_bytep> rows;
  int bit_depth = 0;
  int color_type = 0;
  bool format_ok = true;
  if (setjmp(err.jump)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(path.string() + ": png read failed: " + err.message);
  }
  if (!info) png_error(png, "out of memory");
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  bit_depth = png_get_bit_depth(png, info);
  color_type = png_get_color_type(png, info);
  format_ok = bit_depth == expected_bit_depth && color_type == PNG_COLOR_TYPE_GRAY;
  if (format_ok) {
    png_set_interlace_handling(png);
    png_read_update_info(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    img.data.resize(stride * static_cast<std::size_t>(img.height));
    rows.resize(static_cast<std::size_t>(img.height));
    for (int v = 0; v < img.height; ++v) rows[static_cast<std::size_t>(v)] = img.data.data() + v * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (!format_ok) {
    throw Error(path.string() + ": expected a " + std::to_string(expected_bit_depth) +
                "-bit single-channel PNG, got bit depth " + std::to_string(bit_depth) + ", color type " +
                std::to_string(color_type));
  }
  return img;
}

}  // namespace detail

inline constexpr double kMaxPngDepth = 256.0;

namespace detail {

// Stored 16-bit level of a valid depth below kMaxPngDepth. Depths just
// under 256 m saturate at 65535.
inline double quantized_level(double depth) {
  return std::clamp(std::round(depth * kDepthPngScale), 1.0, 65535.0);
}

}  // namespace detail

/// 16-bit PNG, stored value round(depth * 256), 0 for invalid pixels.
/// Positive depths below half a quantization step are stored as 1.
/// Depths of 256 m or more are rejected.
inline void write_depth_png(const Depthmap& map, const fs::path& path) {
  std::vector<unsigned char> data(map.size() * 2, 0);
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (!map.valid(i)) continue;
    if (map[i] >= kMaxPngDepth) {
      throw Error("depth " + std::to_string(map[i]) + " m at pixel " + std::to_string(i) +
                  " exceeds the 16-bit PNG range (< 256 m)");
    }
    const auto stored = static_cast<std::uint16_t>(detail::quantized_level(map[i]));
    data[2 * i] = static_cast<unsigned char>(stored >> 8);
    data[2 * i + 1] = static_cast<unsigned char>(stored & 0xff);
  }
  detail::write_gray_png(path, map.width(), map.height(), 16, data);
}

inline Depthmap read_depth_png(const fs::path& path) {
  const auto img = detail::read_gray_png(path, 16);
  Depthmap map(img.width, img.height);
  for (std::size_t i = 0; i < map.size(); ++i) {
    const unsigned stored = (unsigned{img.data[2 * i]} << 8) | img.data[2 * i + 1];
    map[i] = stored == 0 ? Depthmap::kInvalid : stored / kDepthPngScale;
  }
  return map;
}

/// Depth after a PNG round trip.
inline Depthmap quantize_depth(const Depthmap& map) {
  Depthmap out = map;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!out.valid(i)) {
      out[i] = Depthmap::kInvalid;
      continue;
    }
    out[i] = detail::quantized_level(out[i]) / kDepthPngScale;
  }
  return out;
}

/// 8-bit PNG, 255 where mask is nonzero.
inline void write_mask_png(const std::vector<std::uint8_t>& mask, int width, int height, const fs::path& path) {
  if (mask.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error("mask size does not match its dimensions");
  }
  std::vector<unsigned char> data(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) data[i] = mask[i] ? 255 : 0;
  detail::write_gray_png(path, width, height, 8, data);
}

struct MaskImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;  // raw 8-bit samples
};

inline MaskImage read_mask_png(const fs::path& path) {
  auto img = detail::read_gray_png(path, 8);
  return MaskImage{img.width, img.height, std::move(img.data)};
}

}  // namespace depthclean
