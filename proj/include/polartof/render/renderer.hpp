#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <vector>

#include "polartof/brdf/tempol_brdf.hpp"
#include "polartof/ellipsometry/schedule.hpp"
#include "polartof/log.hpp"
#include "polartof/numerics/parallel.hpp"
#include "polartof/numerics/rng.hpp"
#include "polartof/render/types.hpp"

namespace polartof {

enum class RenderPart { All, Surface, Subsurface };

/// Round-trip delay 2d/c expressed in bins.
inline double tof_shift_bins(double depth, double bin_width) { return 2.0 * depth / (kSpeedOfLight * bin_width); }

/// Moves a delay-domain series (num_bins blocks of `block` values) to absolute
/// time by `shift_bins` with two-tap linear interpolation:
///   dst[t] = (1 - f) src[k] + f src[k + 1],  k = floor(t - shift), f = frac(t - shift).
/// Samples outside [0, num_bins) read as zero. Returns true when nonzero
/// signal falls past the last bin.
inline bool shift_to_absolute(const double* src, double* dst, int num_bins, int block, double shift_bins) {
  for (int t = 0; t < num_bins; ++t) {
    const double u = t - shift_bins;
    const double kf = std::floor(u);
    const double f = u - kf;
    const long k = static_cast<long>(kf);
    double* out = dst + static_cast<std::size_t>(t) * block;
    for (int e = 0; e < block; ++e) out[e] = 0.0;
    if (k >= 0 && k < num_bins) {
      const double* a = src + static_cast<std::size_t>(k) * block;
      for (int e = 0; e < block; ++e) out[e] += (1.0 - f) * a[e];
    }
    if (k + 1 >= 0 && k + 1 < num_bins) {
      const double* b = src + static_cast<std::size_t>(k + 1) * block;
      for (int e = 0; e < block; ++e) out[e] += f * b[e];
    }
  }
  // Delay bin k lands in absolute bins floor(k + shift) and floor(k + shift) + 1.
  const double first_lost = std::floor(num_bins - 1 - shift_bins) + 1.0;
  for (long k = std::max(0L, static_cast<long>(first_lost)); k < num_bins; ++k) {
    const double* a = src + static_cast<std::size_t>(k) * block;
    for (int e = 0; e < block; ++e)
      if (a[e] != 0.0) return true;
  }
  return false;
}

/// Normalized Gaussian instrument response sampled at bin offsets, +-4 sigma.
inline std::vector<double> irf_kernel(const SensorConfig& sensor) {
  if (sensor.irf_sigma <= 0.0) return {1.0};
  const double s = sensor.irf_sigma / sensor.bin_width;
  const int half = std::max(1, static_cast<int>(std::ceil(4.0 * s)));
  std::vector<double> k(2 * half + 1);
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) {
    k[i + half] = std::exp(-0.5 * (i / s) * (i / s));
    sum += k[i + half];
  }
  for (auto& v : k) v /= sum;
  return k;
}

inline void convolve_time(std::vector<double>& series, const std::vector<double>& kernel) {
  if (kernel.size() == 1) return;
  const int half = static_cast<int>(kernel.size() / 2);
  const int n = static_cast<int>(series.size());
  std::vector<double> out(series.size(), 0.0);
  for (int t = 0; t < n; ++t) {
    double acc = 0.0;
    for (int j = -half; j <= half; ++j) {
      const int s = t - j;
      if (s >= 0 && s < n) acc += kernel[j + half] * series[s];
    }
    out[t] = acc;
  }
  series.swap(out);
}

/// Renders the coaxial transient Mueller cube in delay coordinates:
/// bin k holds cosine_scaled at tau_k = (k + 0.5) * bin_width.
inline TransientMuellerCube render_transient(const Scene& scene, const SensorConfig& sensor,
                                             RenderPart part = RenderPart::All) {
  scene.validate();
  sensor.validate();
  TransientMuellerCube cube(scene.height, scene.width, sensor.num_bins, sensor.bin_width);
  std::atomic<int> grazing{0};
  const std::size_t pixels = scene.pixels();
  const int c_begin = part == RenderPart::Subsurface ? 4 : 0;
  const int c_end = part == RenderPart::Surface ? 4 : 8;
  parallel_for(pixels, [&](std::size_t p) {
    if (!scene.is_valid(p)) return;
    const Material& mat = scene.materials[static_cast<std::size_t>(scene.cluster_id[p])];
    const auto geom = coaxial_geometry<double>(-scene.view_dirs[p], scene.normals[p], scene.camera.up);
    BrdfBasis<double> basis;
    try {
      basis = brdf_basis<double>(geom, mat.eta, mat.m);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::GrazingAngle) throw;
      ++grazing;
      return;
    }
    double* out = cube.pixel(p);
    for (int k = 0; k < sensor.num_bins; ++k) {
      const double tau = sensor.bin_center(k);
      double* h = out + static_cast<std::size_t>(k) * 16;
      for (int c = c_begin; c < c_end; ++c) {
        const TimeGaussBank& bank = c < 4 ? mat.surface : mat.subsurface;
        const double g = bank.channel(static_cast<std::size_t>(c % 4), tau);
        if (g == 0.0) continue;
        for (int e = 0; e < 16; ++e) h[e] += g * basis[c].m[e];
      }
    }
  });
  if (grazing > 0) log().warn("render_transient: {} grazing pixel(s) rendered as zero", grazing.load());
  return cube;
}

/// Rotating-ellipsometry capture: per entry i, pixel and absolute bin t,
/// I = r_i . vec(H(t - 2d/c)), then IRF convolution, then additive Gaussian
/// noise from a counter-based generator keyed by (seed, pixel).
inline CaptureStack simulate_capture(const TransientMuellerCube& cube, const Scene& scene,
                                     const PolarimetricSchedule& schedule, const SensorConfig& sensor,
                                     std::uint64_t seed) {
  if (schedule.size() < 1) throw Error(ErrorCode::InvalidParam, "schedule must have at least one entry");
  if (cube.height != scene.height || cube.width != scene.width)
    throw Error(ErrorCode::ShapeMismatch, "cube and scene dimensions differ");
  const int n = static_cast<int>(schedule.size());
  const int bins = cube.num_bins;
  CaptureStack stack(n, cube.height, cube.width, bins, cube.bin_width);
  stack.schedule_ref = schedule.id;
  std::vector<std::array<double, 16>> rows;
  rows.reserve(schedule.size());
  for (const auto& e : schedule.entries) rows.push_back(measurement_row<double>(e, kLaserStokes));
  const std::vector<double> kernel = irf_kernel(sensor);
  std::atomic<int> truncated{0};
  parallel_for(cube.pixels(), [&](std::size_t p) {
    std::vector<double> shifted(static_cast<std::size_t>(bins) * 16, 0.0);
    if (scene.is_valid(p) &&
        shift_to_absolute(cube.pixel(p), shifted.data(), bins, 16, tof_shift_bins(scene.depth[p], cube.bin_width)))
      ++truncated;
    const CounterRng rng(seed, p);
    std::vector<double> series(static_cast<std::size_t>(bins));
    for (int i = 0; i < n; ++i) {
      const auto& r = rows[static_cast<std::size_t>(i)];
      for (int t = 0; t < bins; ++t) {
        const double* h = shifted.data() + static_cast<std::size_t>(t) * 16;
        double acc = 0.0;
        for (int e = 0; e < 16; ++e) acc += r[e] * h[e];
        series[t] = acc;
      }
      convolve_time(series, kernel);
      for (int t = 0; t < bins; ++t) {
        double v = series[t];
        if (sensor.noise_sigma > 0.0)
          v += sensor.noise_sigma * rng.normal(static_cast<std::uint64_t>(i) * bins + static_cast<std::uint64_t>(t));
        stack.at(i, p, t) = v;
      }
    }
  });
  if (truncated > 0) log().warn("simulate_capture: signal of {} pixel(s) truncated at the end of the window", truncated.load());
  return stack;
}

/// Shifts every pixel of a delay-domain cube to absolute time using the scene
/// depths (the noiseless, IRF-free Mueller cube a perfect capture would see).
inline TransientMuellerCube shift_cube(const TransientMuellerCube& cube, const std::vector<double>& depth) {
  TransientMuellerCube out(cube.height, cube.width, cube.num_bins, cube.bin_width);
  parallel_for(cube.pixels(), [&](std::size_t p) {
    shift_to_absolute(cube.pixel(p), out.pixel(p), cube.num_bins, 16, tof_shift_bins(depth[p], cube.bin_width));
  });
  return out;
}

}  // namespace polartof
