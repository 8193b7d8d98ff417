#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "polartof/brdf/tempol_brdf.hpp"
#include "polartof/error.hpp"

namespace polartof {

inline constexpr double kSpeedOfLight = 299792458.0;

struct SensorConfig {
  double bin_width = 25e-12;
  int num_bins = 512;
  double noise_sigma = 1e-4;
  double irf_sigma = 0.0;
  static constexpr double c = kSpeedOfLight;

  double bin_center(int k) const { return (k + 0.5) * bin_width; }
  double window() const { return num_bins * bin_width; }

  void validate() const {
    if (!(bin_width > 0.0)) throw Error(ErrorCode::InvalidParam, "bin_width must be positive");
    if (num_bins < 1) throw Error(ErrorCode::InvalidParam, "num_bins must be >= 1");
    if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::InvalidParam, "noise_sigma must be >= 0");
    if (!(irf_sigma >= 0.0)) throw Error(ErrorCode::InvalidParam, "irf_sigma must be >= 0");
  }
};

/// Pinhole at the origin looking down +z, image x to the right and y up.
/// `fov` is the full horizontal field of view in radians; pixels are square.
struct Camera {
  int width = 1;
  int height = 1;
  double fov = 0.2;
  Vec3d up{0.0, 1.0, 0.0};

  Vec3d ray(int row, int col) const {
    const double t = std::tan(0.5 * fov);
    const double x = ((col + 0.5) / width * 2.0 - 1.0) * t;
    const double y = (1.0 - (row + 0.5) / height * 2.0) * t * height / width;
    return normalized(Vec3d{x, y, 1.0});
  }
};

/// Geometry and materials per pixel. `view_dirs` point from the camera into
/// the scene; a scene point is depth * view_dir. Front-facing means
/// dot(n, -view_dir) > 0.
struct Scene {
  int width = 0;
  int height = 0;
  Camera camera;
  std::vector<double> depth;
  std::vector<Vec3d> normals;
  std::vector<int> cluster_id;
  std::vector<Material> materials;
  std::vector<Vec3d> view_dirs;
  // Optional per-pixel validity (empty = all valid). Invalid pixels render as zero.
  std::vector<std::uint8_t> valid;

  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
  bool is_valid(std::size_t p) const { return valid.empty() || valid[p] != 0; }

  void validate() const {
    const std::size_t n = pixels();
    if (depth.size() != n || normals.size() != n || cluster_id.size() != n || view_dirs.size() != n)
      throw Error(ErrorCode::ShapeMismatch, "scene arrays do not match width*height");
    if (!valid.empty() && valid.size() != n) throw Error(ErrorCode::ShapeMismatch, "scene mask does not match width*height");
    for (std::size_t p = 0; p < n; ++p) {
      if (!is_valid(p)) continue;
      if (!(depth[p] > 0.0)) throw Error(ErrorCode::InvalidParam, "depth must be positive");
      if (std::fabs(norm(normals[p]) - 1.0) > 1e-9) throw Error(ErrorCode::InvalidParam, "normals must be unit length");
      if (cluster_id[p] < 0 || static_cast<std::size_t>(cluster_id[p]) >= materials.size())
        throw Error(ErrorCode::InvalidParam, "cluster id out of range");
      if (!(dot(normals[p], view_dirs[p]) < 0.0)) throw Error(ErrorCode::InvalidParam, "surface is back-facing");
    }
    for (const auto& m : materials) polartof::validate(m);
  }
};

/// Mueller matrix per pixel and time bin, layout [height][width][bins][4][4].
struct TransientMuellerCube {
  int height = 0;
  int width = 0;
  int num_bins = 0;
  double bin_width = 25e-12;
  std::vector<double> data;

  TransientMuellerCube() = default;
  TransientMuellerCube(int h, int w, int t, double bw)
      : height(h), width(w), num_bins(t), bin_width(bw), data(static_cast<std::size_t>(h) * w * t * 16, 0.0) {}

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
  std::size_t pixel_stride() const { return static_cast<std::size_t>(num_bins) * 16; }
  double* pixel(std::size_t p) { return data.data() + p * pixel_stride(); }
  const double* pixel(std::size_t p) const { return data.data() + p * pixel_stride(); }
  double& at(std::size_t p, int bin, int r, int c) { return data[p * pixel_stride() + bin * 16 + r * 4 + c]; }
  double at(std::size_t p, int bin, int r, int c) const { return data[p * pixel_stride() + bin * 16 + r * 4 + c]; }
};

/// Intensities per schedule entry, layout [n][height][width][bins].
struct CaptureStack {
  int n = 0;
  int height = 0;
  int width = 0;
  int num_bins = 0;
  double bin_width = 25e-12;
  std::string schedule_ref;
  std::vector<double> data;

  CaptureStack() = default;
  CaptureStack(int n_, int h, int w, int t, double bw)
      : n(n_), height(h), width(w), num_bins(t), bin_width(bw),
        data(static_cast<std::size_t>(n_) * h * w * t, 0.0) {}

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
  double& at(int i, std::size_t p, int bin) {
    return data[(static_cast<std::size_t>(i) * pixels() + p) * num_bins + bin];
  }
  double at(int i, std::size_t p, int bin) const {
    return data[(static_cast<std::size_t>(i) * pixels() + p) * num_bins + bin];
  }
};

}  // namespace polartof
