#pragma once

// Conventional first-photon estimates used to initialize scene reconstruction:
// histogram peak finding, normals from the unprojected depth map, and k-means
// material clustering of mean intensities.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "polartof/error.hpp"
#include "polartof/log.hpp"
#include "polartof/numerics/rng.hpp"
#include "polartof/render/types.hpp"

namespace polartof {

namespace detail {
inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}
}  // namespace detail

/// 3x the MAD-based standard deviation of the last quarter of the histogram.
inline double noise_floor(std::span<const double> histogram) {
  const std::size_t n = histogram.size();
  const std::size_t start = n - std::max<std::size_t>(1, n / 4);
  std::vector<double> tail(histogram.begin() + static_cast<std::ptrdiff_t>(start), histogram.end());
  const double med = detail::median_of(tail);
  for (auto& v : tail) v = std::fabs(v - med);
  return 3.0 * 1.4826 * detail::median_of(tail);
}

/// Travel distance d = c t_peak / 2, with t_peak the parabolic refinement of
/// the earliest maximum bin center. nullopt when no bin exceeds the noise floor.
inline std::optional<double> try_peak_find(std::span<const double> histogram, const SensorConfig& sensor) {
  if (histogram.empty()) return std::nullopt;
  const double floor = noise_floor(histogram);
  std::size_t best = 0;
  for (std::size_t k = 1; k < histogram.size(); ++k)
    if (histogram[k] > histogram[best]) best = k;
  if (!(histogram[best] > floor)) return std::nullopt;
  double offset = 0.0;
  if (best > 0 && best + 1 < histogram.size()) {
    const double y0 = histogram[best - 1];
    const double y1 = histogram[best];
    const double y2 = histogram[best + 1];
    const double denom = y0 - 2.0 * y1 + y2;
    if (denom < 0.0) offset = std::clamp(0.5 * (y0 - y2) / denom, -0.5, 0.5);
  }
  const double t_peak = (static_cast<double>(best) + 0.5 + offset) * sensor.bin_width;
  return kSpeedOfLight * t_peak / 2.0;
}

inline double peak_find(std::span<const double> histogram, const SensorConfig& sensor) {
  const auto d = try_peak_find(histogram, sensor);
  if (!d) throw Error(ErrorCode::NoPeak, "no histogram bin exceeds the noise floor");
  return *d;
}

/// Per-pixel normals from a depth map (travel distance along each camera ray;
/// NaN marks invalid pixels). Uses central differences of the unprojected
/// points, one-sided at borders or next to invalid pixels, and orients the
/// result toward the camera. Pixels without usable neighbors get NaN normals.
inline std::vector<Vec3d> normals_from_depth(std::span<const double> depth, const Camera& camera) {
  const int w = camera.width;
  const int h = camera.height;
  if (depth.size() != static_cast<std::size_t>(w) * h)
    throw Error(ErrorCode::ShapeMismatch, "depth map does not match camera resolution");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto ok = [&](int r, int c) {
    return r >= 0 && r < h && c >= 0 && c < w && std::isfinite(depth[static_cast<std::size_t>(r) * w + c]);
  };
  auto point = [&](int r, int c) { return camera.ray(r, c) * depth[static_cast<std::size_t>(r) * w + c]; };
  auto tangent = [&](int r, int c, int dr, int dc, Vec3d& out) {
    const bool fwd = ok(r + dr, c + dc);
    const bool bwd = ok(r - dr, c - dc);
    if (fwd && bwd) out = (point(r + dr, c + dc) - point(r - dr, c - dc)) * 0.5;
    else if (fwd) out = point(r + dr, c + dc) - point(r, c);
    else if (bwd) out = point(r, c) - point(r - dr, c - dc);
    else return false;
    return true;
  };
  std::vector<Vec3d> normals(depth.size(), Vec3d{nan, nan, nan});
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      if (!ok(r, c)) continue;
      Vec3d tx;
      Vec3d ty;
      if (!tangent(r, c, 0, 1, tx) || !tangent(r, c, 1, 0, ty)) continue;
      Vec3d n = cross(tx, ty);
      const double len = norm(n);
      if (!(len > 0.0)) continue;
      n = n / len;
      if (dot(n, camera.ray(r, c)) > 0.0) n = -n;
      normals[static_cast<std::size_t>(r) * w + c] = n;
    }
  return normals;
}

struct ClusterMap {
  int k = 1;
  std::vector<int> labels;
};

/// 1-D k-means (k-means++ seeding, Lloyd iterations until assignments settle
/// or 100 iterations). Labels are renumbered by increasing centroid. When
/// there are fewer distinct values than k, k is reduced.
inline ClusterMap kmeans_cluster(std::span<const double> values, int k, std::uint64_t seed) {
  if (k < 1) throw Error(ErrorCode::InvalidParam, "k must be >= 1");
  if (values.empty()) throw Error(ErrorCode::InvalidParam, "k-means needs at least one value");
  for (double v : values)
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidParam, "k-means input must be finite");
  std::vector<double> distinct(values.begin(), values.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (static_cast<int>(distinct.size()) < k) {
    log().warn("kmeans_cluster: only {} distinct values, reducing k from {}", distinct.size(), k);
    k = static_cast<int>(distinct.size());
  }
  const std::size_t n = values.size();
  Rng rng(seed);
  std::vector<double> centers;
  centers.push_back(values[static_cast<std::size_t>(rng.bits() % n)]);
  std::vector<double> d2(n);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (double c : centers) best = std::min(best, (values[i] - c) * (values[i] - c));
      d2[i] = best;
      total += best;
    }
    double pick = rng.uniform() * total;
    std::size_t chosen = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      pick -= d2[i];
      if (pick <= 0.0 && d2[i] > 0.0) {
        chosen = i;
        break;
      }
    }
    if (d2[chosen] == 0.0)
      chosen = static_cast<std::size_t>(std::max_element(d2.begin(), d2.end()) - d2.begin());
    centers.push_back(values[chosen]);
  }

  std::vector<int> labels(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      for (int c = 1; c < k; ++c)
        if (std::fabs(values[i] - centers[c]) < std::fabs(values[i] - centers[best])) best = c;
      if (labels[i] != best) {
        labels[i] = best;
        changed = true;
      }
    }
    std::vector<double> sum(k, 0.0);
    std::vector<int> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[labels[i]] += values[i];
      ++count[labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (count[c] > 0) {
        centers[c] = sum[c] / count[c];
        continue;
      }
      // Empty cluster: move it to the point farthest from its centroid.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = std::fabs(values[i] - centers[labels[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      centers[c] = values[far];
      labels[far] = c;
      changed = true;
    }
    if (!changed) break;
  }

  std::vector<int> order(k);
  for (int c = 0; c < k; ++c) order[c] = c;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return centers[a] < centers[b]; });
  std::vector<int> rank(k);
  for (int r = 0; r < k; ++r) rank[order[r]] = r;
  ClusterMap map;
  map.k = k;
  map.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) map.labels[i] = rank[labels[i]];
  return map;
}

}  // namespace polartof
