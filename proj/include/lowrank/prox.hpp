#pragma once

#include <cmath>

#include "lowrank/linalg.hpp"

namespace lowrank {

/// Entrywise max{|s| - gamma, 0} * sign(s).
inline Matrix soft_threshold(const Matrix& s, double gamma) {
  if (!(gamma >= 0.0)) throw InvalidSpecError("soft_threshold: gamma must be nonnegative");
  return s.unaryExpr([gamma](double v) {
    const double mag = std::abs(v) - gamma;
    if (mag <= 0.0) return 0.0;
    return v < 0.0 ? -mag : mag;
  });
}

inline Vector soft_threshold(const Vector& s, double gamma) {
  if (!(gamma >= 0.0)) throw InvalidSpecError("soft_threshold: gamma must be nonnegative");
  return s.unaryExpr([gamma](double v) { return v > gamma ? v - gamma : (v < -gamma ? v + gamma : 0.0); });
}

struct SvtResult {
  Matrix value;
  Index rank = 0;  // number of singular values strictly above gamma
};

/// Singular value thresholding, the proximal map of gamma * ||.||_*.
/// Singular values equal to gamma map to zero.
inline SvtResult svt_with_rank(const Matrix& z, double gamma) {
  if (!(gamma >= 0.0)) throw InvalidSpecError("svt: gamma must be nonnegative");
  const Svd svd = thin_svd(z);
  Index keep = 0;
  while (keep < svd.sigma.size() && svd.sigma(keep) > gamma) ++keep;
  if (keep == 0) return {Matrix::Zero(z.rows(), z.cols()), 0};
  const Vector shrunk = svd.sigma.head(keep).array() - gamma;
  Matrix value = svd.left.leftCols(keep) * shrunk.asDiagonal() * svd.right.leftCols(keep).transpose();
  return {std::move(value), keep};
}

inline Matrix svt(const Matrix& z, double gamma) { return svt_with_rank(z, gamma).value; }

}  // namespace lowrank
