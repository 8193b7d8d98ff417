#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "polartof/error.hpp"

namespace polartof {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
  double lr = 5e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Optional per-coordinate multiplier on lr; empty means 1 everywhere.
  std::vector<double> lr_scale;

  static AdamState zeros(std::size_t n, double lr = 5e-3) {
    AdamState s;
    s.m.assign(n, 0.0);
    s.v.assign(n, 0.0);
    s.lr = lr;
    return s;
  }
};

// In-place bias-corrected Adam update.
inline void adam_update(AdamState& state, std::span<double> params, std::span<const double> grad) {
  if (params.size() != grad.size() || state.m.size() != params.size() || state.v.size() != params.size() ||
      (!state.lr_scale.empty() && state.lr_scale.size() != params.size()))
    throw Error(ErrorCode::ShapeMismatch, "adam: parameter, gradient and moment sizes differ");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    const double lr = state.lr_scale.empty() ? state.lr : state.lr * state.lr_scale[i];
    params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

/// Functional form: returns the advanced state and the updated parameters.
inline std::pair<AdamState, std::vector<double>> adam_step(AdamState state, std::vector<double> params,
                                                           std::span<const double> grad) {
  adam_update(state, params, grad);
  return {std::move(state), std::move(params)};
}

}  // namespace polartof
