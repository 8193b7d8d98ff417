#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "polartof/ellipsometry/schedule.hpp"
#include "polartof/log.hpp"
#include "polartof/numerics/adam.hpp"
#include "polartof/numerics/dual.hpp"
#include "polartof/numerics/least_squares.hpp"
#include "polartof/numerics/parallel.hpp"
#include "polartof/numerics/rng.hpp"
#include "polartof/render/types.hpp"

namespace polartof {

/// N x 16 matrix whose rows are measurement_row of each schedule entry.
inline Eigen::MatrixXd measurement_matrix(const PolarimetricSchedule& schedule,
                                          const StokesVector& s_illum = kLaserStokes) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(schedule.size()), 16);
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const auto r = measurement_row<double>(schedule.entries[i], s_illum);
    for (int c = 0; c < 16; ++c) m(static_cast<Eigen::Index>(i), c) = r[c];
  }
  return m;
}

/// Per-voxel minimum-norm least squares of M vec(H) = I, sharing one
/// pseudo-inverse across all voxels.
inline TransientMuellerCube reconstruct_mueller(const CaptureStack& captures, const PolarimetricSchedule& schedule,
                                                const StokesVector& s_illum = kLaserStokes) {
  if (captures.n != static_cast<int>(schedule.size()))
    throw Error(ErrorCode::ShapeMismatch, "capture count " + std::to_string(captures.n) +
                                              " does not match schedule length " + std::to_string(schedule.size()));
  const PseudoInverse pi = pseudo_inverse(measurement_matrix(schedule, s_illum));
  if (pi.rank < 16) log().warn("reconstruct_mueller: measurement matrix rank {} < 16, returning minimum-norm solution", pi.rank);
  const Eigen::MatrixXd& pinv = pi.pinv;
  TransientMuellerCube cube(captures.height, captures.width, captures.num_bins, captures.bin_width);
  const int n = captures.n;
  parallel_for(captures.pixels(), [&](std::size_t p) {
    Eigen::VectorXd intensities(n);
    for (int t = 0; t < captures.num_bins; ++t) {
      for (int i = 0; i < n; ++i) intensities(i) = captures.at(i, p, t);
      const Eigen::Matrix<double, 16, 1> h = pinv * intensities;
      double* out = cube.pixel(p) + static_cast<std::size_t>(t) * 16;
      for (int e = 0; e < 16; ++e) out[e] = h(e);
    }
  });
  return cube;
}

inline double condition_number(const PolarimetricSchedule& schedule, const StokesVector& s_illum = kLaserStokes) {
  if (schedule.size() < 16) throw Error(ErrorCode::InvalidParam, "condition number needs N >= 16");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(measurement_matrix(schedule, s_illum));
  const auto& s = svd.singularValues();
  const double smax = s(0);
  const double smin = s(s.size() - 1);
  if (smin < 1e-12 * smax) throw Error(ErrorCode::RankDeficient, "measurement matrix is rank deficient");
  return smax / smin;
}

namespace detail {

inline double wrap_pi(double a) {
  a = std::fmod(a, std::numbers::pi);
  return a < 0.0 ? a + std::numbers::pi : a;
}

// (theta1, theta2) with Q(theta2) W(theta1) [1,1,0,0] = target (unit DOP).
inline std::array<double, 2> illumination_angles(const StokesVector& target) {
  const double chi = 0.5 * std::asin(std::clamp(target[3], -1.0, 1.0));
  const double psi = 0.5 * std::atan2(target[2], target[1]);
  return {wrap_pi(0.5 * (psi + chi)), wrap_pi(psi)};
}

// (theta3, theta4) whose analyzer row is proportional to [1, target_1..3].
inline std::array<double, 2> analyzer_angles(const StokesVector& target) {
  const double chi = 0.5 * std::asin(std::clamp(target[3], -1.0, 1.0));
  const double psi = 0.5 * std::atan2(target[2], target[1]);
  return {wrap_pi(psi), wrap_pi(psi - chi)};
}

}  // namespace detail

/// Schedule whose illumination states are the Fibonacci lattice of size N and
/// whose analyzer states are the same lattice visited with a stride. The
/// stride (coprime with N) minimizing the condition number is chosen.
inline PolarimetricSchedule uniform_initial_schedule(std::size_t n) {
  const auto states = poincare_uniform_states(n);
  PolarimetricSchedule best;
  double best_cond = std::numeric_limits<double>::infinity();
  for (std::size_t stride = 1; stride < std::max<std::size_t>(n, 2); ++stride) {
    if (std::gcd(stride, n) != 1 && n > 1) continue;
    PolarimetricSchedule s;
    s.id = "uniform-" + std::to_string(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ill = detail::illumination_angles(states[i]);
      const auto ana = detail::analyzer_angles(states[(i * stride + n / 2) % n]);
      s.entries.push_back({ill[0], ill[1], ana[0], ana[1]});
    }
    double cond = std::numeric_limits<double>::infinity();
    if (n >= 16) {
      try {
        cond = condition_number(s);
      } catch (const Error&) {
      }
    }
    if (best.entries.empty() || cond < best_cond) {
      best = std::move(s);
      best_cond = cond;
    }
  }
  return best;
}

inline PolarimetricSchedule random_schedule(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  PolarimetricSchedule s;
  s.id = "random-" + std::to_string(n) + "-" + std::to_string(seed);
  for (std::size_t i = 0; i < n; ++i)
    s.entries.push_back({rng.uniform(0.0, std::numbers::pi), rng.uniform(0.0, std::numbers::pi),
                         rng.uniform(0.0, std::numbers::pi), rng.uniform(0.0, std::numbers::pi)});
  return s;
}

/// Fixed training data for schedule learning: random physical Mueller
/// matrices and per-capture noise draws.
struct ScheduleTrainingSet {
  Eigen::MatrixXd mueller;  // 16 x K, column k = vec(H_k)
  Eigen::MatrixXd noise;    // N x K
};

inline ScheduleTrainingSet make_training_set(std::size_t n, std::size_t count, double noise_sigma, std::uint64_t seed) {
  Rng rng(seed);
  ScheduleTrainingSet set;
  set.mueller.resize(16, static_cast<Eigen::Index>(count));
  set.noise.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(count));
  for (std::size_t k = 0; k < count; ++k) {
    const MuellerMatrix h = random_physical_mueller(rng);
    for (int e = 0; e < 16; ++e) set.mueller(e, static_cast<Eigen::Index>(k)) = h.m[e];
  }
  for (std::size_t k = 0; k < count; ++k)
    for (std::size_t i = 0; i < n; ++i) set.noise(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = noise_sigma * rng.normal();
  return set;
}

/// Mean squared reconstruction error  E ||pinv(M)(M h + e) - h||^2.
/// When `grad` is non-null it receives d loss / d angles (4 per entry, in
/// entry order), derived for the full-rank case where the loss reduces to
/// ||pinv(M) e||^2.
inline double schedule_loss(const PolarimetricSchedule& schedule, const ScheduleTrainingSet& data,
                            std::vector<double>* grad = nullptr) {
  const Eigen::MatrixXd m = measurement_matrix(schedule);
  const auto k = static_cast<double>(data.mueller.cols());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > kDefaultSvdCutoff * s(0)) inv(i) = 1.0 / s(i);
  const Eigen::MatrixXd pinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  const Eigen::MatrixXd residual = pinv * (m * data.mueller + data.noise) - data.mueller;
  const double loss = residual.squaredNorm() / k;
  if (grad == nullptr) return loss;

  const Eigen::MatrixXd gram_pinv = svd.matrixV() * inv.cwiseAbs2().asDiagonal() * svd.matrixV().transpose();
  const Eigen::MatrixXd x = pinv * data.noise;
  const Eigen::MatrixXd y = gram_pinv * x;
  const Eigen::MatrixXd d_m = (2.0 / k) * ((data.noise - m * x) * y.transpose() - (m * y) * x.transpose());

  grad->assign(schedule.size() * 4, 0.0);
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    std::array<Dual<4>, 4> angles;
    for (std::size_t a = 0; a < 4; ++a) angles[a] = Dual<4>::variable(schedule.entries[i][a], a);
    const auto row = measurement_row<Dual<4>>(angles, kLaserStokes);
    for (int c = 0; c < 16; ++c) {
      const double w = d_m(static_cast<Eigen::Index>(i), c);
      for (std::size_t a = 0; a < 4; ++a) (*grad)[4 * i + a] += w * row[c].d[a];
    }
  }
  return loss;
}

enum class ScheduleInit { Uniform, Zeros, Random };

struct LearnOptions {
  ScheduleInit init = ScheduleInit::Uniform;
  double lr = 1e-2;
  std::size_t training_size = 256;
  double noise_sigma = 1e-4;
};

struct LearnRecord {
  int iter;
  double loss;
  double best;
};

struct LearnResult {
  PolarimetricSchedule schedule;
  double initial_loss = 0.0;
  double best_loss = 0.0;
  std::vector<LearnRecord> curve;
};

/// Adam refinement of all 4N angles on schedule_loss, starting from the chosen
/// initialization. Returns the best iterate. Deterministic given seed.
inline LearnResult learn_schedule(std::size_t n, int iters, std::uint64_t seed, const LearnOptions& options = {}) {
  if (n < 16) throw Error(ErrorCode::InvalidParam, "learn_schedule needs N >= 16");
  if (iters < 1) throw Error(ErrorCode::InvalidParam, "learn_schedule needs iters >= 1");
  PolarimetricSchedule schedule;
  switch (options.init) {
    case ScheduleInit::Uniform: schedule = uniform_initial_schedule(n); break;
    case ScheduleInit::Zeros: schedule.entries.assign(n, ScheduleEntry{0.0, 0.0, 0.0, 0.0}); break;
    case ScheduleInit::Random: schedule = random_schedule(n, seed ^ 0xA5A5A5A5ULL); break;
  }
  schedule.id = "learned-" + std::to_string(n) + "-" + std::to_string(seed);
  const ScheduleTrainingSet data = make_training_set(n, options.training_size, options.noise_sigma, seed);

  std::vector<double> params(4 * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < 4; ++a) params[4 * i + a] = schedule.entries[i][a];
  auto to_schedule = [&](const std::vector<double>& x) {
    PolarimetricSchedule s;
    s.id = schedule.id;
    for (std::size_t i = 0; i < n; ++i)
      s.entries.push_back({detail::wrap_pi(x[4 * i]), detail::wrap_pi(x[4 * i + 1]), detail::wrap_pi(x[4 * i + 2]),
                           detail::wrap_pi(x[4 * i + 3])});
    return s;
  };

  AdamState adam = AdamState::zeros(params.size(), options.lr);
  LearnResult result;
  std::vector<double> grad;
  std::vector<double> best_params = params;
  double best = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= iters; ++it) {
    const double loss = schedule_loss(to_schedule(params), data, &grad);
    if (it == 0) result.initial_loss = loss;
    if (loss < best) {
      best = loss;
      best_params = params;
    }
    result.curve.push_back({it, loss, best});
    if (it == iters) break;
    adam_update(adam, params, grad);
  }
  result.schedule = to_schedule(best_params);
  result.best_loss = best;
  return result;
}

}  // namespace polartof
