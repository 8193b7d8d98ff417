#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "polartof/error.hpp"
#include "polartof/render/types.hpp"

namespace polartof {

enum class SceneKind { Plane, Sphere, TwoMaterialBlobs };

/// Parameters for analytic test scenes.
///   Plane / TwoMaterialBlobs: plane through (0, 0, distance), tilted by `tilt`
///     radians about the camera x axis (0 = fronto-parallel).
///   Sphere: center (0, 0, distance), `radius`; every pixel ray must hit it.
///   TwoMaterialBlobs: materials[0] is the background, every further material
///     is one disc of `blob_radius` (fraction of image width).
struct SyntheticSceneParams {
  int width = 32;
  int height = 32;
  double fov = 0.5;
  double distance = 0.5;
  double tilt = 0.0;
  double radius = 0.1;
  double blob_radius = 0.18;
  std::vector<Material> materials{Material{}};
};

inline Scene make_synthetic_scene(SceneKind kind, const SyntheticSceneParams& params) {
  if (params.width < 1 || params.height < 1) throw Error(ErrorCode::InvalidParam, "scene needs at least one pixel");
  if (!(params.fov > 0.0 && params.fov < std::numbers::pi * 0.9)) throw Error(ErrorCode::InvalidParam, "fov out of range");
  if (!(params.distance > 0.0)) throw Error(ErrorCode::InvalidParam, "distance must be positive");
  if (params.materials.empty()) throw Error(ErrorCode::InvalidParam, "at least one material is required");
  if (kind != SceneKind::TwoMaterialBlobs && params.materials.size() != 1)
    throw Error(ErrorCode::InvalidParam, "plane and sphere scenes take exactly one material");

  Scene scene;
  scene.width = params.width;
  scene.height = params.height;
  scene.camera = Camera{params.width, params.height, params.fov, {0.0, 1.0, 0.0}};
  scene.materials = params.materials;
  const std::size_t n = scene.pixels();
  scene.depth.resize(n);
  scene.normals.resize(n);
  scene.cluster_id.assign(n, 0);
  scene.view_dirs.resize(n);

  for (int r = 0; r < params.height; ++r)
    for (int c = 0; c < params.width; ++c) {
      const std::size_t p = static_cast<std::size_t>(r) * params.width + c;
      const Vec3d w = scene.camera.ray(r, c);
      scene.view_dirs[p] = w;
      if (kind == SceneKind::Sphere) {
        if (!(params.radius > 0.0 && params.radius < params.distance))
          throw Error(ErrorCode::InvalidParam, "sphere radius must be in (0, distance)");
        const Vec3d center{0.0, 0.0, params.distance};
        const double b = dot(w, center);
        const double disc = b * b - (dot(center, center) - params.radius * params.radius);
        if (disc <= 0.0) throw Error(ErrorCode::InvalidParam, "sphere does not cover the field of view");
        const double t = b - std::sqrt(disc);
        scene.depth[p] = t;
        scene.normals[p] = normalized(w * t - center);
      } else {
        const Vec3d normal{0.0, std::sin(params.tilt), -std::cos(params.tilt)};
        const Vec3d origin{0.0, 0.0, params.distance};
        const double denom = dot(w, normal);
        if (!(denom < -1e-6)) throw Error(ErrorCode::InvalidParam, "plane is not visible from every pixel");
        const double t = dot(origin, normal) / denom;
        if (!(t > 0.0)) throw Error(ErrorCode::InvalidParam, "plane lies behind the camera");
        scene.depth[p] = t;
        scene.normals[p] = normal;
      }
    }

  if (kind == SceneKind::TwoMaterialBlobs) {
    const std::size_t k = params.materials.size();
    for (std::size_t b = 1; b < k; ++b) {
      // Blob centers on a circle around the image center.
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(b - 1) / static_cast<double>(k - 1);
      const double ring = k > 2 ? 0.25 : 0.0;
      const double cx = (0.5 + ring * std::cos(angle)) * params.width;
      const double cy = (0.5 + ring * std::sin(angle)) * params.height;
      const double rad = params.blob_radius * params.width;
      bool used = false;
      for (int r = 0; r < params.height; ++r)
        for (int c = 0; c < params.width; ++c) {
          const double dx = c + 0.5 - cx;
          const double dy = r + 0.5 - cy;
          if (dx * dx + dy * dy <= rad * rad) {
            scene.cluster_id[static_cast<std::size_t>(r) * params.width + c] = static_cast<int>(b);
            used = true;
          }
        }
      if (!used) throw Error(ErrorCode::InvalidParam, "blob too small for the image resolution");
    }
  }
  scene.validate();
  return scene;
}

}  // namespace polartof
