#pragma once

// Inverse-rendering loss: weighted L1 distance between the rendered and the
// measured transient Mueller cube, plus an edge-aware L1 penalty on spatial
// normal changes. The gradient with respect to the raw coordinates is exact:
// the time shift and Gaussian banks are differentiated by hand, the Mueller
// basis through dual numbers, and the cluster constraints through a Dual<26>.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "polartof/error.hpp"
#include "polartof/inverse/scene_params.hpp"
#include "polartof/numerics/dual.hpp"
#include "polartof/numerics/parallel.hpp"
#include "polartof/render/renderer.hpp"

namespace polartof {

struct WeightConfig {
  double w_diag = 1.0;
  double w_offdiag = 10.0;
  double edge_threshold = 0.02;  // meters per pixel
  double lambda_reg = 1e-4;

  void validate() const {
    if (!(w_diag >= 0.0 && w_offdiag >= 0.0 && edge_threshold >= 0.0 && lambda_reg >= 0.0))
      throw Error(ErrorCode::InvalidParam, "weights must be non-negative");
  }
  double entry_weight(int e) const { return e / 4 == e % 4 ? w_diag : w_offdiag; }
};

struct ObjectiveTerms {
  double data = 0.0;
  double regularizer = 0.0;
  double total() const { return data + regularizer; }
};

inline constexpr double kL1Smoothing = 1e-8;

/// Smoothed |x|, zero at x = 0.
inline double smooth_abs(double x) { return std::sqrt(x * x + kL1Smoothing * kL1Smoothing) - kL1Smoothing; }
inline double smooth_abs_grad(double x) { return x / std::sqrt(x * x + kL1Smoothing * kL1Smoothing); }

/// W_d: 1 where the forward-difference depth gradient magnitude is at most
/// `edge_threshold` (meters per pixel), else 0. Invalid pixels get 0.
inline std::vector<std::uint8_t> edge_weights(const SceneParams& theta, double edge_threshold) {
  const int w = theta.width;
  const int h = theta.height;
  std::vector<std::uint8_t> weights(theta.pixels(), 0);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const std::size_t p = static_cast<std::size_t>(r) * w + c;
      if (!theta.is_valid(p)) continue;
      double gx = 0.0;
      double gy = 0.0;
      if (c + 1 < w && theta.is_valid(p + 1)) gx = theta.depth[p + 1] - theta.depth[p];
      if (r + 1 < h && theta.is_valid(p + w)) gy = theta.depth[p + w] - theta.depth[p];
      weights[p] = std::sqrt(gx * gx + gy * gy) <= edge_threshold ? 1 : 0;
    }
  return weights;
}

/// lambda * sum_p W_d(p) * sum over right/down neighbors and xyz of |n_q - n_p|.
/// When `grad_n` is given, adds d/dn (physical normals) into it.
inline double normal_regularizer(const SceneParams& theta, const WeightConfig& w, std::vector<Vec3d>* grad_n) {
  if (w.lambda_reg == 0.0) return 0.0;
  const auto weights = edge_weights(theta, w.edge_threshold);
  const int width = theta.width;
  double total = 0.0;
  for (int r = 0; r < theta.height; ++r)
    for (int c = 0; c < width; ++c) {
      const std::size_t p = static_cast<std::size_t>(r) * width + c;
      if (!weights[p]) continue;
      auto pair = [&](std::size_t q) {
        const Vec3d diff = theta.normals[q] - theta.normals[p];
        total += w.lambda_reg * (smooth_abs(diff.x) + smooth_abs(diff.y) + smooth_abs(diff.z));
        if (!grad_n) return;
        const Vec3d g = Vec3d{smooth_abs_grad(diff.x), smooth_abs_grad(diff.y), smooth_abs_grad(diff.z)} * w.lambda_reg;
        (*grad_n)[q] = (*grad_n)[q] + g;
        (*grad_n)[p] = (*grad_n)[p] - g;
      };
      if (c + 1 < width && theta.is_valid(p + 1)) pair(p + 1);
      if (r + 1 < theta.height && theta.is_valid(p + static_cast<std::size_t>(width))) pair(p + width);
    }
  return total;
}

struct ObjectiveOptions {
  bool freeze_depth = false;
};

namespace detail {

// Per-cluster Gaussian samples on delay bin centers, [cluster][channel][bin].
struct BankSamples {
  int bins = 0;
  std::vector<double> g;  // a * e
  std::vector<double> e;  // exp(-z^2 / 2)

  std::size_t index(std::size_t k, int c, int j) const { return (k * 8 + static_cast<std::size_t>(c)) * bins + j; }
};

inline BankSamples sample_banks(const SceneParams& theta) {
  BankSamples s;
  s.bins = theta.sensor.num_bins;
  s.g.resize(theta.clusters() * 8 * static_cast<std::size_t>(s.bins));
  s.e.resize(s.g.size());
  for (std::size_t k = 0; k < theta.clusters(); ++k)
    for (int c = 0; c < 8; ++c) {
      const TimeGaussBank& bank = c < 4 ? theta.materials[k].surface : theta.materials[k].subsurface;
      const std::size_t i = static_cast<std::size_t>(c % 4);
      for (int j = 0; j < s.bins; ++j) {
        const double tau = theta.sensor.bin_center(j);
        // Same arithmetic as TimeGaussBank::channel so the render matches bit for bit.
        const double z = (tau - bank.mu[i]) / bank.sigma[i];
        s.e[s.index(k, c, j)] = std::exp(-0.5 * z * z);
        s.g[s.index(k, c, j)] = bank.channel(i, tau);
      }
    }
  return s;
}

// Accumulators owned by one fixed chunk of pixels.
struct ChunkAccum {
  double data = 0.0;
  std::vector<double> dg;  // dL/dg, same layout as BankSamples
  std::vector<double> deta;
  std::vector<double> dm;
};

}  // namespace detail

/// Loss at the physical values stored in `theta`; when `grad` is non-null it
/// receives dL/d(theta.raw). theta's physical values must equal
/// constrain(theta.raw) for the gradient to be meaningful.
inline ObjectiveTerms objective(const SceneParams& theta, const TransientMuellerCube& h_meas, const WeightConfig& w,
                                std::vector<double>* grad = nullptr, const ObjectiveOptions& options = {}) {
  w.validate();
  const int bins = theta.sensor.num_bins;
  if (h_meas.height != theta.height || h_meas.width != theta.width || h_meas.num_bins != bins)
    throw Error(ErrorCode::ShapeMismatch, "measured cube does not match the scene parameters");
  if (theta.cluster_id.size() != theta.pixels() || theta.view_dirs.size() != theta.pixels())
    throw Error(ErrorCode::ShapeMismatch, "scene parameter maps do not match width*height");
  const std::size_t pixels = theta.pixels();
  const std::size_t clusters = theta.clusters();
  const double bw = theta.sensor.bin_width;
  const detail::BankSamples samples = detail::sample_banks(theta);
  std::array<double, 16> weight{};
  for (int e = 0; e < 16; ++e) weight[e] = w.entry_weight(e);

  if (grad) grad->assign(theta.raw_size(), 0.0);

  constexpr std::size_t kChunk = 16;
  const std::size_t chunks = (pixels + kChunk - 1) / kChunk;
  std::vector<detail::ChunkAccum> accum(chunks);

  parallel_for(chunks, [&](std::size_t chunk) {
    detail::ChunkAccum& acc = accum[chunk];
    if (grad) {
      acc.dg.assign(samples.g.size(), 0.0);
      acc.deta.assign(clusters, 0.0);
      acc.dm.assign(clusters, 0.0);
    }
    std::vector<double> delay(static_cast<std::size_t>(bins) * 16);
    std::vector<double> absolute(delay.size());
    std::vector<double> g_abs(delay.size());
    std::vector<double> g_delay(delay.size());
    const std::size_t end = std::min(pixels, (chunk + 1) * kChunk);
    for (std::size_t p = chunk * kChunk; p < end; ++p) {
      if (!theta.is_valid(p)) continue;
      const auto k = static_cast<std::size_t>(theta.cluster_id[p]);
      const Material& mat = theta.materials[k];
      const Vec3d toward = -theta.view_dirs[p];
      BrdfBasis<double> basis{};
      bool facing = true;
      try {
        basis = brdf_basis<double>(coaxial_geometry<double>(toward, theta.normals[p], theta.camera.up), mat.eta, mat.m);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::GrazingAngle) throw;
        facing = false;
      }

      std::fill(delay.begin(), delay.end(), 0.0);
      if (facing)
        for (int j = 0; j < bins; ++j) {
          double* h = delay.data() + static_cast<std::size_t>(j) * 16;
          for (int c = 0; c < 8; ++c) {
            const double g = samples.g[samples.index(k, c, j)];
            if (g == 0.0) continue;
            for (int e = 0; e < 16; ++e) h[e] += g * basis[c].m[e];
          }
        }
      const double shift = tof_shift_bins(theta.depth[p], bw);
      shift_to_absolute(delay.data(), absolute.data(), bins, 16, shift);

      const double* meas = h_meas.pixel(p);
      for (std::size_t i = 0; i < absolute.size(); ++i) {
        const double r = absolute[i] - meas[i];
        const double wt = weight[i % 16];
        acc.data += wt * smooth_abs(r);
        g_abs[i] = wt * smooth_abs_grad(r);
      }
      if (!grad) continue;

      // Adjoint of the two-tap shift, and its derivative in the shift amount.
      std::fill(g_delay.begin(), g_delay.end(), 0.0);
      double d_shift = 0.0;
      for (int t = 0; t < bins; ++t) {
        const double u = t - shift;
        const double kf = std::floor(u);
        const double f = u - kf;
        const long j = static_cast<long>(kf);
        const double* ga = g_abs.data() + static_cast<std::size_t>(t) * 16;
        if (j >= 0 && j < bins) {
          double* out = g_delay.data() + static_cast<std::size_t>(j) * 16;
          const double* h = delay.data() + static_cast<std::size_t>(j) * 16;
          for (int e = 0; e < 16; ++e) {
            out[e] += (1.0 - f) * ga[e];
            d_shift += ga[e] * h[e];
          }
        }
        if (j + 1 >= 0 && j + 1 < bins) {
          double* out = g_delay.data() + static_cast<std::size_t>(j + 1) * 16;
          const double* h = delay.data() + static_cast<std::size_t>(j + 1) * 16;
          for (int e = 0; e < 16; ++e) {
            out[e] += f * ga[e];
            d_shift -= ga[e] * h[e];
          }
        }
      }
      double* gp = grad->data() + theta.pixel_offset(p);
      if (!options.freeze_depth) {
        const double dd = d_shift * 2.0 / (kSpeedOfLight * bw);
        gp[0] = dd * sigmoid(theta.raw[theta.pixel_offset(p)]);
      }
      if (!facing) continue;

      // dL/dg per channel and bin, and dL/dbasis.
      std::array<std::array<double, 16>, 8> d_basis{};
      for (int j = 0; j < bins; ++j) {
        const double* a = g_delay.data() + static_cast<std::size_t>(j) * 16;
        for (int c = 0; c < 8; ++c) {
          const double g = samples.g[samples.index(k, c, j)];
          double q = 0.0;
          for (int e = 0; e < 16; ++e) {
            q += a[e] * basis[c].m[e];
            d_basis[c][e] += a[e] * g;
          }
          acc.dg[samples.index(k, c, j)] += q;
        }
      }

      // Basis sensitivity to (n, eta, m) at the current physical values.
      using D5 = Dual<5>;
      const Vec3d& n = theta.normals[p];
      const Vec3<D5> n_dual{D5::variable(n.x, 0), D5::variable(n.y, 1), D5::variable(n.z, 2)};
      const auto basis_dual = brdf_basis<D5>(coaxial_geometry<D5>(Vec3<D5>::from(toward), n_dual, theta.camera.up),
                                             D5::variable(mat.eta, 3), D5::variable(mat.m, 4));
      std::array<double, 5> sens{};
      for (int c = 0; c < 8; ++c)
        for (int e = 0; e < 16; ++e)
          for (std::size_t i = 0; i < 5; ++i) sens[i] += d_basis[c][e] * basis_dual[c].m[e].d[i];
      const Vec3d gn{sens[0], sens[1], sens[2]};
      const Vec3d raw_n{theta.raw[theta.pixel_offset(p) + 1], theta.raw[theta.pixel_offset(p) + 2],
                        theta.raw[theta.pixel_offset(p) + 3]};
      // n = raw / |raw|: dn/draw = (I - n n^T) / |raw|.
      const Vec3d g_raw = (gn - n * dot(n, gn)) / norm(raw_n);
      gp[1] = g_raw.x;
      gp[2] = g_raw.y;
      gp[3] = g_raw.z;
      acc.deta[k] += sens[3];
      acc.dm[k] += sens[4];
    }
  });

  ObjectiveTerms terms;
  for (const auto& acc : accum) terms.data += acc.data;

  std::vector<Vec3d> grad_n;
  if (grad) grad_n.assign(pixels, Vec3d{});
  terms.regularizer = normal_regularizer(theta, w, grad ? &grad_n : nullptr);
  if (!grad) return terms;

  for (std::size_t p = 0; p < pixels; ++p) {
    if (!theta.is_valid(p)) continue;
    const Vec3d& n = theta.normals[p];
    const Vec3d gn = grad_n[p];
    double* gp = grad->data() + theta.pixel_offset(p);
    const Vec3d raw_n{theta.raw[theta.pixel_offset(p) + 1], theta.raw[theta.pixel_offset(p) + 2],
                      theta.raw[theta.pixel_offset(p) + 3]};
    const Vec3d g_raw = (gn - n * dot(n, gn)) / norm(raw_n);
    gp[1] += g_raw.x;
    gp[2] += g_raw.y;
    gp[3] += g_raw.z;
  }

  const ParamBounds bounds = theta.bounds();
  for (std::size_t k = 0; k < clusters; ++k) {
    // dL/d(physical material), in the raw ordering.
    std::array<double, kClusterParams> phys{};
    for (const auto& acc : accum) {
      phys[0] += acc.deta[k];
      phys[1] += acc.dm[k];
    }
    for (int c = 0; c < 8; ++c) {
      const TimeGaussBank& bank = c < 4 ? theta.materials[k].surface : theta.materials[k].subsurface;
      const std::size_t i = static_cast<std::size_t>(c % 4);
      const std::size_t base = (c < 4 ? 2 : 14) + i;
      double ga = 0.0;
      double gmu = 0.0;
      double gsig = 0.0;
      for (int j = 0; j < bins; ++j) {
        double dg = 0.0;
        for (const auto& acc : accum) dg += acc.dg[samples.index(k, c, j)];
        if (dg == 0.0) continue;
        const double tau = theta.sensor.bin_center(j);
        const double x = tau - bank.mu[i];
        const double s2 = bank.sigma[i] * bank.sigma[i];
        const double g = samples.g[samples.index(k, c, j)];
        ga += dg * samples.e[samples.index(k, c, j)];
        gmu += dg * g * x / s2;
        gsig += dg * g * x * x / (s2 * bank.sigma[i]);
      }
      phys[base] = ga;
      phys[base + 4] = gmu;
      phys[base + 8] = gsig;
    }
    using D26 = Dual<kClusterParams>;
    std::array<D26, kClusterParams> raw_dual;
    const double* raw = theta.raw.data() + theta.cluster_offset(k);
    for (std::size_t i = 0; i < kClusterParams; ++i) raw_dual[i] = D26::variable(raw[i], i);
    const MaterialT<D26> mat = constrain_material<D26>(raw_dual.data(), bounds);
    std::array<const D26*, kClusterParams> out{};
    out[0] = &mat.eta;
    out[1] = &mat.m;
    for (std::size_t i = 0; i < 4; ++i) {
      out[2 + i] = &mat.surface.a[i];
      out[6 + i] = &mat.surface.mu[i];
      out[10 + i] = &mat.surface.sigma[i];
      out[14 + i] = &mat.subsurface.a[i];
      out[18 + i] = &mat.subsurface.mu[i];
      out[22 + i] = &mat.subsurface.sigma[i];
    }
    double* gk = grad->data() + theta.cluster_offset(k);
    for (std::size_t q = 0; q < kClusterParams; ++q)
      for (std::size_t i = 0; i < kClusterParams; ++i) gk[i] += phys[q] * out[q]->d[i];
  }
  return terms;
}

/// Scalar loss and raw gradient at a raw vector (convenience for checks).
inline double objective_at(SceneParams& theta, std::span<const double> raw, const TransientMuellerCube& h_meas,
                           const WeightConfig& w, std::span<double> grad, const ObjectiveOptions& options = {}) {
  theta.raw.assign(raw.begin(), raw.end());
  constrain(theta);
  if (grad.empty()) return objective(theta, h_meas, w, nullptr, options).total();
  std::vector<double> g;
  const double loss = objective(theta, h_meas, w, &g, options).total();
  std::copy(g.begin(), g.end(), grad.begin());
  return loss;
}

}  // namespace polartof
