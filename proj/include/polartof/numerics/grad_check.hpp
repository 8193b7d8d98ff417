#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace polartof {

/// Differentiable evaluation: returns f(x) and writes df/dx into `grad`
/// (same length as x).
using GradProvider = std::function<double(std::span<const double> x, std::span<double> grad)>;

/// Max over coordinates of |g_ad - g_fd| / (|g_ad| + |g_fd| + 1e-12), with
/// central differences at step rel_step * max(|x_i|, 1).
inline double grad_check(const GradProvider& f, std::span<const double> x, double rel_step) {
  std::vector<double> g(x.size());
  f(x, g);
  std::vector<double> xp(x.begin(), x.end());
  std::vector<double> scratch(x.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(std::fabs(x[i]), 1.0);
    xp[i] = x[i] + h;
    const double fp = f(xp, scratch);
    xp[i] = x[i] - h;
    const double fm = f(xp, scratch);
    xp[i] = x[i];
    const double fd = (fp - fm) / (2.0 * h);
    const double err = std::fabs(g[i] - fd) / (std::fabs(g[i]) + std::fabs(fd) + 1e-12);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace polartof
