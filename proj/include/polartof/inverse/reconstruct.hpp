#pragma once

// All-photon scene reconstruction from a measured transient Mueller cube:
// first-photon initialization followed by Adam on the raw coordinates, and
// material editing of the recovered parameters.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "polartof/error.hpp"
#include "polartof/inverse/initialization.hpp"
#include "polartof/inverse/objective.hpp"
#include "polartof/inverse/scene_params.hpp"
#include "polartof/log.hpp"
#include "polartof/numerics/adam.hpp"
#include "polartof/numerics/least_squares.hpp"

namespace polartof {

struct ReconstructConfig {
  int k = 3;
  int iters = 2000;
  double lr = 5e-3;
  // Multiplier on lr for the depth coordinates.
  double depth_lr_scale = 1.0;
  // Scales lr on each a0 coordinate by max(1, initial a0). softplus is linear
  // for large amplitudes, so without this a0 moves at most ~lr per step.
  bool relative_amplitude_lr = true;
  // lr decays geometrically to lr * final_lr_fraction over the run.
  double final_lr_fraction = 1.0;
  WeightConfig weights;
  std::uint64_t seed = 0;
  bool freeze_depth = false;
  // Leading iterations that update only the material parameters.
  int material_warmup = 0;
  double init_eta = 1.5;
  double init_m = 0.3;
};

struct ReconstructRecord {
  int iter = 0;
  double loss = 0.0;
  double best = 0.0;
};

struct ReconstructResult {
  SceneParams params;
  double initial_loss = 0.0;
  double best_loss = 0.0;
  int masked_pixels = 0;
  std::vector<ReconstructRecord> curve;
};

namespace detail {

// Energy-weighted mean and spread of a non-negative series on bin centers.
inline std::pair<double, double> centroid(const std::vector<double>& series, double bw) {
  double sum = 0.0;
  double first = 0.0;
  for (std::size_t j = 0; j < series.size(); ++j) {
    sum += series[j];
    first += series[j] * (j + 0.5) * bw;
  }
  if (!(sum > 0.0)) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
  const double mean = first / sum;
  double second = 0.0;
  for (std::size_t j = 0; j < series.size(); ++j) second += series[j] * square((j + 0.5) * bw - mean);
  return {mean, std::sqrt(second / sum)};
}

// Bank amplitudes by linear least squares on all 16 entries given the
// current geometry, eta, m and Gaussian shapes (amplitudes set to 1).
inline void fit_amplitudes(SceneParams& theta, const TransientMuellerCube& h_meas, const WeightConfig& w) {
  const int bins = theta.sensor.num_bins;
  const std::size_t clusters = theta.clusters();
  std::vector<Eigen::Matrix<double, 8, 8>> ata(clusters, Eigen::Matrix<double, 8, 8>::Zero());
  std::vector<Eigen::Matrix<double, 8, 1>> atb(clusters, Eigen::Matrix<double, 8, 1>::Zero());
  std::vector<Material> unit = theta.materials;
  for (auto& m : unit)
    for (std::size_t i = 0; i < 4; ++i) m.surface.a[i] = m.subsurface.a[i] = 1.0;
  std::vector<double> delay(static_cast<std::size_t>(bins) * 16);
  std::vector<double> absolute(delay.size());
  std::vector<std::vector<double>> cols(8, std::vector<double>(delay.size()));
  for (std::size_t p = 0; p < theta.pixels(); ++p) {
    if (!theta.is_valid(p)) continue;
    const auto k = static_cast<std::size_t>(theta.cluster_id[p]);
    BrdfBasis<double> basis;
    try {
      basis = brdf_basis<double>(coaxial_geometry<double>(-theta.view_dirs[p], theta.normals[p], theta.camera.up),
                                 unit[k].eta, unit[k].m);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::GrazingAngle) throw;
      continue;
    }
    const double shift = tof_shift_bins(theta.depth[p], theta.sensor.bin_width);
    for (int c = 0; c < 8; ++c) {
      const TimeGaussBank& bank = c < 4 ? unit[k].surface : unit[k].subsurface;
      for (int j = 0; j < bins; ++j) {
        const double g = bank.channel(static_cast<std::size_t>(c % 4), theta.sensor.bin_center(j));
        for (int e = 0; e < 16; ++e) delay[static_cast<std::size_t>(j) * 16 + e] = g * basis[c].m[e];
      }
      shift_to_absolute(delay.data(), cols[c].data(), bins, 16, shift);
    }
    const double* meas = h_meas.pixel(p);
    for (std::size_t i = 0; i < delay.size(); ++i) {
      const double wt = w.entry_weight(static_cast<int>(i % 16));
      Eigen::Matrix<double, 8, 1> row;
      for (int c = 0; c < 8; ++c) row[c] = wt * cols[c][i];
      ata[k] += row * row.transpose();
      atb[k] += row * (wt * meas[i]);
    }
  }
  for (std::size_t k = 0; k < clusters; ++k) {
    const Eigen::VectorXd a = least_squares(Eigen::MatrixXd(ata[k]), Eigen::VectorXd(atb[k]), 1e-10);
    Material& mat = theta.materials[k];
    auto apply = [&](TimeGaussBank& bank, int offset) {
      bank.a[0] = std::max(a[offset], 1e-6);
      for (std::size_t i = 1; i < 4; ++i)
        bank.a[i] = std::clamp(a[offset + static_cast<int>(i)], 1e-3 * bank.a[0], bank.a[0] * (1.0 - 1e-6));
    };
    apply(mat.surface, 0);
    apply(mat.subsurface, 4);
  }
}

}  // namespace detail

/// First-photon initialization: peak-found depth, normals from depth, k-means
/// clusters on mean [H]00, default eta and m, banks placed from the per-cluster
/// residual after the first peak, amplitudes by least squares.
inline SceneParams initialize_scene(const TransientMuellerCube& h_meas, const Camera& camera, const SensorConfig& sensor,
                                    const ReconstructConfig& config) {
  if (camera.width != h_meas.width || camera.height != h_meas.height)
    throw Error(ErrorCode::ShapeMismatch, "camera resolution does not match the cube");
  if (h_meas.num_bins != sensor.num_bins) throw Error(ErrorCode::ShapeMismatch, "cube and sensor bin counts differ");
  for (double v : h_meas.data)
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidParam, "measured cube contains non-finite values");

  SceneParams theta;
  theta.width = h_meas.width;
  theta.height = h_meas.height;
  theta.camera = camera;
  theta.sensor = sensor;
  const std::size_t pixels = theta.pixels();
  const int bins = sensor.num_bins;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  theta.view_dirs.resize(pixels);
  theta.valid.assign(pixels, 1);
  theta.depth.assign(pixels, nan);
  for (int r = 0; r < theta.height; ++r)
    for (int c = 0; c < theta.width; ++c) theta.view_dirs[static_cast<std::size_t>(r) * theta.width + c] = camera.ray(r, c);

  // Surface Gaussians start at one bin of delay; the peak then sits near
  // 2d/c + bw, so the peak-found depth is pulled back by half a bin of range.
  const double mu_surface = sensor.bin_width;
  std::vector<double> h00(static_cast<std::size_t>(bins));
  std::vector<double> mean_intensity;
  std::vector<std::size_t> valid_pixels;
  for (std::size_t p = 0; p < pixels; ++p) {
    for (int t = 0; t < bins; ++t) h00[t] = h_meas.at(p, t, 0, 0);
    const auto d = try_peak_find(h00, sensor);
    if (!d || *d - 0.5 * kSpeedOfLight * mu_surface <= 0.0) {
      theta.valid[p] = 0;
      continue;
    }
    theta.depth[p] = *d - 0.5 * kSpeedOfLight * mu_surface;
    double sum = 0.0;
    for (double v : h00) sum += v;
    mean_intensity.push_back(sum / bins);
    valid_pixels.push_back(p);
  }
  if (valid_pixels.empty()) throw Error(ErrorCode::NoPeak, "no pixel has a detectable peak");

  theta.normals = normals_from_depth(theta.depth, camera);
  for (std::size_t p = 0; p < pixels; ++p) {
    if (!theta.is_valid(p)) continue;
    Vec3d& n = theta.normals[p];
    if (!std::isfinite(n.x)) n = -theta.view_dirs[p];
  }

  const ClusterMap clusters = kmeans_cluster(mean_intensity, config.k, config.seed);
  theta.cluster_id.assign(pixels, 0);
  for (std::size_t i = 0; i < valid_pixels.size(); ++i) theta.cluster_id[valid_pixels[i]] = clusters.labels[i];

  const ParamBounds bounds = ParamBounds::from(sensor);
  theta.materials.assign(static_cast<std::size_t>(clusters.k), Material{});
  for (int k = 0; k < clusters.k; ++k) {
    // Sum of [H]00 aligned at each pixel's peak, then the residual after the peak bins.
    std::vector<double> aligned(static_cast<std::size_t>(bins), 0.0);
    for (std::size_t p : valid_pixels) {
      if (theta.cluster_id[p] != k) continue;
      const int shift = static_cast<int>(std::lround(tof_shift_bins(theta.depth[p], sensor.bin_width)));
      for (int j = 0; j < bins; ++j)
        if (j + shift < bins && j + shift >= 0) aligned[j] += h_meas.at(p, j + shift, 0, 0);
    }
    const int peak = static_cast<int>(std::max_element(aligned.begin(), aligned.end()) - aligned.begin());
    std::vector<double> residual(aligned.size(), 0.0);
    for (int j = peak + 2; j < bins; ++j) residual[j] = std::max(0.0, aligned[j]);
    auto [mu_ss, sigma_ss] = detail::centroid(residual, sensor.bin_width);
    if (!std::isfinite(mu_ss)) {
      mu_ss = (peak + 4.5) * sensor.bin_width;
      sigma_ss = 2.0 * sensor.bin_width;
    }
    const double sig_lo = bounds.sigma_min * 1.01;
    const double sig_hi = bounds.sigma_max * 0.99;
    Material& mat = theta.materials[static_cast<std::size_t>(k)];
    mat.eta = config.init_eta;
    mat.m = config.init_m;
    for (std::size_t i = 0; i < 4; ++i) {
      mat.surface.mu[i] = mu_surface;
      mat.surface.sigma[i] = std::clamp(sensor.bin_width, sig_lo, sig_hi);
      mat.subsurface.mu[i] = std::clamp(mu_ss, 1e-3 * bounds.t_max, 0.999 * bounds.t_max);
      mat.subsurface.sigma[i] = std::clamp(sigma_ss, sig_lo, sig_hi);
    }
  }
  detail::fit_amplitudes(theta, h_meas, config.weights);
  unconstrain(theta);
  constrain(theta);
  return theta;
}

using ReconstructProgress = std::function<void(const ReconstructRecord&)>;

/// Runs `config.iters` Adam steps from `init` and returns the best-loss iterate.
inline ReconstructResult refine_scene(SceneParams init, const TransientMuellerCube& h_meas, const ReconstructConfig& config,
                                      const ReconstructProgress& progress = {}) {
  if (config.iters < 0) throw Error(ErrorCode::InvalidParam, "iteration count must be >= 0");
  if (!(config.lr > 0.0)) throw Error(ErrorCode::InvalidParam, "learning rate must be positive");
  ReconstructResult result;
  const ObjectiveOptions options{config.freeze_depth};
  SceneParams theta = std::move(init);
  AdamState adam = AdamState::zeros(theta.raw_size(), config.lr);
  adam.lr_scale.assign(theta.raw_size(), 1.0);
  for (std::size_t p = 0; p < theta.pixels(); ++p) adam.lr_scale[theta.pixel_offset(p)] = config.depth_lr_scale;
  if (config.relative_amplitude_lr)
    for (std::size_t k = 0; k < theta.clusters(); ++k) {
      const std::size_t off = theta.cluster_offset(k);
      adam.lr_scale[off + 2] = std::max(1.0, theta.materials[k].surface.a[0]);
      adam.lr_scale[off + 14] = std::max(1.0, theta.materials[k].subsurface.a[0]);
    }
  std::vector<double> grad;
  std::vector<double> best_raw = theta.raw;
  double best = std::numeric_limits<double>::infinity();
  const double decay = config.iters > 0 ? std::pow(config.final_lr_fraction, 1.0 / config.iters) : 1.0;
  for (int it = 0; it <= config.iters; ++it) {
    const bool last = it == config.iters;
    const double loss = objective(theta, h_meas, config.weights, last ? nullptr : &grad, options).total();
    if (it == 0) result.initial_loss = loss;
    if (loss < best) {
      best = loss;
      best_raw = theta.raw;
    }
    const ReconstructRecord record{it, loss, best};
    result.curve.push_back(record);
    if (progress) progress(record);
    if (last) break;
    if (it < config.material_warmup)
      std::fill(grad.begin(), grad.begin() + static_cast<std::ptrdiff_t>(theta.pixels() * kPixelParams), 0.0);
    adam_update(adam, theta.raw, grad);
    adam.lr *= decay;
    constrain(theta);
  }
  theta.raw = best_raw;
  constrain(theta);
  result.best_loss = best;
  for (std::size_t p = 0; p < theta.pixels(); ++p) result.masked_pixels += theta.is_valid(p) ? 0 : 1;
  result.params = std::move(theta);
  return result;
}

inline ReconstructResult reconstruct_scene(const TransientMuellerCube& h_meas, const Camera& camera,
                                           const SensorConfig& sensor, const ReconstructConfig& config,
                                           const ReconstructProgress& progress = {}) {
  return refine_scene(initialize_scene(h_meas, camera, sensor, config), h_meas, config, progress);
}

struct BankEdit {
  double scale_a = 1.0;
  std::array<double, 4> shift_mu{1.0, 1.0, 1.0, 1.0};
};

struct MaterialEdit {
  std::optional<int> cluster;  // all clusters when empty
  BankEdit surface;
  BankEdit subsurface;
  std::optional<double> set_m;
};

/// a <- scale_a * a, mu_i <- shift_mu[i] * mu_i, optionally m <- set_m.
/// Values leaving the parameter ranges are clamped with a warning.
inline SceneParams edit_material(SceneParams theta, const MaterialEdit& edit) {
  const ParamBounds bounds = theta.bounds();
  auto check_scale = [](double s) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw Error(ErrorCode::InvalidParam, "edit multipliers must be finite and >= 0");
  };
  check_scale(edit.surface.scale_a);
  check_scale(edit.subsurface.scale_a);
  for (std::size_t i = 0; i < 4; ++i) {
    check_scale(edit.surface.shift_mu[i]);
    check_scale(edit.subsurface.shift_mu[i]);
  }
  if (edit.cluster && (*edit.cluster < 0 || static_cast<std::size_t>(*edit.cluster) >= theta.clusters()))
    throw Error(ErrorCode::InvalidParam, "edited cluster does not exist");
  auto apply = [&](TimeGaussBank& bank, const BankEdit& e) {
    for (std::size_t i = 0; i < 4; ++i) {
      bank.a[i] *= e.scale_a;
      const double mu = bank.mu[i] * e.shift_mu[i];
      bank.mu[i] = std::clamp(mu, 0.0, bounds.t_max);
      if (bank.mu[i] != mu) log().warn("edit_material: mu clamped to the capture window");
    }
  };
  for (std::size_t k = 0; k < theta.clusters(); ++k) {
    if (edit.cluster && static_cast<std::size_t>(*edit.cluster) != k) continue;
    Material& mat = theta.materials[k];
    apply(mat.surface, edit.surface);
    apply(mat.subsurface, edit.subsurface);
    if (edit.set_m) {
      mat.m = std::clamp(*edit.set_m, kMinRoughness, 1.0);
      if (mat.m != *edit.set_m) log().warn("edit_material: roughness clamped to [{}, 1]", kMinRoughness);
    }
  }
  unconstrain(theta);
  return theta;
}

}  // namespace polartof
