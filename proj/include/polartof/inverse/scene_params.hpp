#pragma once

// Scene parameters in two forms: unconstrained optimizer coordinates (`raw`)
// and the physical values they map to.
//
// Raw layout: per pixel [softplus^-1(d), nx, ny, nz], then per cluster 26
// values [eta, m, surface a0..a3, mu0..mu3, sigma0..sigma3, sub-surface same].
//   d      = softplus(raw)
//   n      = raw / |raw|
//   eta    = 1 + 2 sigmoid(raw)
//   m      = clamp(sigmoid(raw), 1e-3, 1)
//   a0     = softplus(raw), a_i = a0 sigmoid(raw_i) for i >= 1
//   mu     = T_max sigmoid(raw)
//   sigma  = sigma_min + (sigma_max - sigma_min) sigmoid(raw)
// with T_max the capture window, sigma_min = bin_width / 2, sigma_max = T_max / 4.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "polartof/brdf/tempol_brdf.hpp"
#include "polartof/error.hpp"
#include "polartof/numerics/dual.hpp"
#include "polartof/render/types.hpp"

namespace polartof {

inline constexpr std::size_t kPixelParams = 4;
inline constexpr std::size_t kClusterParams = 26;
inline constexpr double kMinRoughness = 1e-3;

struct ParamBounds {
  double t_max = 0.0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;

  static ParamBounds from(const SensorConfig& sensor) {
    const double t = sensor.window();
    return {t, 0.5 * sensor.bin_width, 0.25 * t};
  }
};

struct SceneParams {
  int width = 0;
  int height = 0;
  Camera camera;
  SensorConfig sensor;
  std::vector<Vec3d> view_dirs;
  std::vector<std::uint8_t> valid;
  std::vector<double> depth;
  std::vector<Vec3d> normals;
  std::vector<int> cluster_id;
  std::vector<Material> materials;
  std::vector<double> raw;

  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
  std::size_t clusters() const { return materials.size(); }
  std::size_t raw_size() const { return pixels() * kPixelParams + clusters() * kClusterParams; }
  std::size_t pixel_offset(std::size_t p) const { return p * kPixelParams; }
  std::size_t cluster_offset(std::size_t k) const { return pixels() * kPixelParams + k * kClusterParams; }
  bool is_valid(std::size_t p) const { return valid.empty() || valid[p] != 0; }
  ParamBounds bounds() const { return ParamBounds::from(sensor); }
};

/// Physical material from 26 raw coordinates; T = Dual<26> yields the Jacobian.
template <typename T>
MaterialT<T> constrain_material(const T* raw, const ParamBounds& b) {
  MaterialT<T> mat;
  mat.eta = 1.0 + 2.0 * sigmoid(raw[0]);
  mat.m = sigmoid(raw[1]);
  if (value_of(mat.m) < kMinRoughness) mat.m = T(kMinRoughness);
  auto bank = [&](const T* r, TimeGaussBankT<T>& out) {
    out.a[0] = softplus(r[0]);
    for (std::size_t i = 1; i < 4; ++i) out.a[i] = out.a[0] * sigmoid(r[i]);
    for (std::size_t i = 0; i < 4; ++i) out.mu[i] = b.t_max * sigmoid(r[4 + i]);
    for (std::size_t i = 0; i < 4; ++i) out.sigma[i] = b.sigma_min + (b.sigma_max - b.sigma_min) * sigmoid(r[8 + i]);
  };
  bank(raw + 2, mat.surface);
  bank(raw + 14, mat.subsurface);
  return mat;
}

namespace detail {
inline constexpr double kRatioClamp = 1e-12;
inline double clamped_logit(double p) { return logit(std::clamp(p, kRatioClamp, 1.0 - kRatioClamp)); }
}  // namespace detail

/// Inverse of constrain_material. Values on or beyond a range boundary are
/// pulled inside by 1e-12 (relative), which the round trip reproduces.
inline std::array<double, kClusterParams> unconstrain_material(const Material& mat, const ParamBounds& b) {
  std::array<double, kClusterParams> raw{};
  raw[0] = detail::clamped_logit((mat.eta - 1.0) / 2.0);
  raw[1] = detail::clamped_logit(mat.m);
  auto bank = [&](const TimeGaussBank& in, double* r) {
    const double a0 = std::max(in.a[0], 1e-30);
    r[0] = softplus_inverse(a0);
    for (std::size_t i = 1; i < 4; ++i) r[i] = detail::clamped_logit(in.a[i] / a0);
    for (std::size_t i = 0; i < 4; ++i) r[4 + i] = detail::clamped_logit(in.mu[i] / b.t_max);
    for (std::size_t i = 0; i < 4; ++i)
      r[8 + i] = detail::clamped_logit((in.sigma[i] - b.sigma_min) / (b.sigma_max - b.sigma_min));
  };
  bank(mat.surface, raw.data() + 2);
  bank(mat.subsurface, raw.data() + 14);
  return raw;
}

/// Recomputes the physical values of `theta` from theta.raw. Invalid pixels
/// get NaN depth and normals.
inline void constrain(SceneParams& theta) {
  if (theta.raw.size() != theta.raw_size()) throw Error(ErrorCode::ShapeMismatch, "raw parameter vector has the wrong size");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::size_t n = theta.pixels();
  theta.depth.resize(n);
  theta.normals.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    const double* r = theta.raw.data() + theta.pixel_offset(p);
    if (!theta.is_valid(p)) {
      theta.depth[p] = nan;
      theta.normals[p] = {nan, nan, nan};
      continue;
    }
    theta.depth[p] = softplus(r[0]);
    theta.normals[p] = normalized(Vec3d{r[1], r[2], r[3]});
  }
  const ParamBounds b = theta.bounds();
  for (std::size_t k = 0; k < theta.clusters(); ++k)
    theta.materials[k] = constrain_material<double>(theta.raw.data() + theta.cluster_offset(k), b);
}

/// Recomputes theta.raw from the physical values.
inline void unconstrain(SceneParams& theta) {
  const std::size_t n = theta.pixels();
  if (theta.depth.size() != n || theta.normals.size() != n || theta.cluster_id.size() != n)
    throw Error(ErrorCode::ShapeMismatch, "scene parameter maps do not match width*height");
  theta.raw.assign(theta.raw_size(), 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    if (!theta.is_valid(p)) continue;
    double* r = theta.raw.data() + theta.pixel_offset(p);
    r[0] = softplus_inverse(std::max(theta.depth[p], 1e-300));
    r[1] = theta.normals[p].x;
    r[2] = theta.normals[p].y;
    r[3] = theta.normals[p].z;
  }
  const ParamBounds b = theta.bounds();
  for (std::size_t k = 0; k < theta.clusters(); ++k) {
    const auto r = unconstrain_material(theta.materials[k], b);
    std::copy(r.begin(), r.end(), theta.raw.begin() + static_cast<std::ptrdiff_t>(theta.cluster_offset(k)));
  }
}

/// Parameters describing an existing scene (e.g. the generator of a synthetic capture).
inline SceneParams params_from_scene(const Scene& scene, const SensorConfig& sensor) {
  SceneParams theta;
  theta.width = scene.width;
  theta.height = scene.height;
  theta.camera = scene.camera;
  theta.sensor = sensor;
  theta.view_dirs = scene.view_dirs;
  theta.valid = scene.valid;
  theta.depth = scene.depth;
  theta.normals = scene.normals;
  theta.cluster_id = scene.cluster_id;
  theta.materials = scene.materials;
  unconstrain(theta);
  return theta;
}

/// Renderable scene from parameters; invalid pixels keep their mask.
inline Scene scene_from_params(const SceneParams& theta) {
  Scene scene;
  scene.width = theta.width;
  scene.height = theta.height;
  scene.camera = theta.camera;
  scene.view_dirs = theta.view_dirs;
  scene.valid = theta.valid;
  scene.depth = theta.depth;
  scene.normals = theta.normals;
  scene.cluster_id = theta.cluster_id;
  scene.materials = theta.materials;
  return scene;
}

}  // namespace polartof
