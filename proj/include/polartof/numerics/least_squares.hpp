#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace polartof {

inline constexpr double kDefaultSvdCutoff = 1e-12;

struct PseudoInverse {
  Eigen::MatrixXd pinv;
  Eigen::VectorXd singular_values;
  int rank = 0;
};

/// Minimum-norm pseudo-inverse from a full SVD; singular values below
/// `cutoff * sigma_max` are treated as zero.
inline PseudoInverse pseudo_inverse(const Eigen::MatrixXd& a, double cutoff = kDefaultSvdCutoff) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  PseudoInverse out;
  out.singular_values = s;
  const double threshold = s.size() > 0 ? cutoff * s(0) : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > threshold && s(i) > 0.0) {
      inv(i) = 1.0 / s(i);
      ++out.rank;
    }
  }
  out.pinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  return out;
}

inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                     double cutoff = kDefaultSvdCutoff) {
  return pseudo_inverse(a, cutoff).pinv * b;
}

}  // namespace polartof
