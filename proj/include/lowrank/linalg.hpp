#pragma once

// Dense kernels shared by the solvers: norms, Hadamard products, SPD solves,
// thin SVD, numerical rank and spectral norm. Storage is row-major throughout.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lowrank/error.hpp"

namespace lowrank {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

inline std::string shape_string(const Matrix& a) {
  return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

inline void require_finite(const Matrix& a, const char* what) {
  if (!all_finite(a)) throw NumericalError(std::string(what) + ": non-finite entry");
}

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": shape " + shape_string(a) + " vs " + shape_string(b));
  }
}

/// Builds a validated matrix from row-major data.
inline Matrix make_matrix(Index rows, Index cols, std::span<const double> data) {
  if (rows <= 0 || cols <= 0) throw DimensionError("make_matrix: dimensions must be positive");
  if (static_cast<Index>(data.size()) != rows * cols) {
    throw DimensionError("make_matrix: expected " + std::to_string(rows * cols) + " entries, got " +
                         std::to_string(data.size()));
  }
  Matrix out = Eigen::Map<const Matrix>(data.data(), rows, cols);
  require_finite(out, "make_matrix");
  return out;
}

inline Matrix make_matrix(Index rows, Index cols, std::initializer_list<double> data) {
  return make_matrix(rows, cols, std::span<const double>(data.begin(), data.size()));
}

inline double frobenius_norm(const Matrix& a) { return a.norm(); }

/// Frobenius inner product <A, B>.
inline double inner(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "inner");
  return a.cwiseProduct(b).sum();
}

inline Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  return a.cwiseProduct(b);
}

/// Solves G Y = B for symmetric positive definite G by Cholesky factorization.
inline Matrix spd_solve(const Matrix& g, const Matrix& b) {
  if (g.rows() != g.cols()) throw DimensionError("spd_solve: G must be square, got " + shape_string(g));
  if (b.rows() != g.rows()) {
    throw DimensionError("spd_solve: B has " + std::to_string(b.rows()) + " rows, G is " + shape_string(g));
  }
  Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success) throw DefinitenessError("spd_solve: matrix is not positive definite");
  return llt.solve(b);
}

/// Column-stacking vectorization.
inline Vector vec(const Matrix& x) {
  Vector v(x.size());
  Eigen::Map<Eigen::MatrixXd>(v.data(), x.rows(), x.cols()) = x;
  return v;
}

/// Inverse of vec for an m x n matrix.
inline Matrix unvec(const Vector& v, Index rows, Index cols) {
  if (v.size() != rows * cols) throw DimensionError("unvec: length mismatch");
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

struct Svd {
  Matrix left;    // m x k, orthonormal columns
  Vector sigma;   // k, nonincreasing
  Matrix right;   // n x k, orthonormal columns
};

/// Thin SVD, A = left * diag(sigma) * right^T with k = min(m, n).
inline Svd thin_svd(const Matrix& a) {
  if (a.rows() < 1 || a.cols() < 1) throw DimensionError("thin_svd: empty matrix");
  require_finite(a, "thin_svd");
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw NumericalError("thin_svd: decomposition did not converge for " + shape_string(a) +
                         " input with norm " + std::to_string(a.norm()));
  }
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

inline Vector singular_values(const Matrix& a) {
  if (a.rows() < 1 || a.cols() < 1) throw DimensionError("singular_values: empty matrix");
  require_finite(a, "singular_values");
  Eigen::BDCSVD<Matrix> svd(a);
  if (svd.info() != Eigen::Success) throw NumericalError("singular_values: decomposition did not converge");
  return svd.singularValues();
}

/// Counts sigma_i > rel_tol * sigma_1 in a nonincreasing spectrum.
inline Index rank_from_singular_values(const Vector& sigma, double rel_tol) {
  if (sigma.size() == 0 || sigma(0) <= 0.0) return 0;
  const double cut = rel_tol * sigma(0);
  Index count = 0;
  while (count < sigma.size() && sigma(count) > cut) ++count;
  return count;
}

inline Index numerical_rank(const Matrix& a, double rel_tol = 1e-8) {
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw InvalidSpecError("numerical_rank: rel_tol must lie in (0,1)");
  return rank_from_singular_values(singular_values(a), rel_tol);
}

/// Largest singular value, from Lanczos iteration on the smaller Gram matrix (A A^T or A^T A).
/// The Krylov basis is fully reorthogonalized; the start vector is fixed, so the
/// result is deterministic.
inline double spectral_norm(const Matrix& a) {
  require_finite(a, "spectral_norm");
  if (a.size() == 0) return 0.0;
  const bool wide = a.rows() < a.cols();
  const Index n = wide ? a.rows() : a.cols();
  const auto gram = [&](const Vector& v) -> Vector {
    if (wide) return a * (a.transpose() * v);
    return a.transpose() * (a * v);
  };

  // Fixed start with all components nonzero (SplitMix64 stream).
  Vector q(n);
  std::uint64_t state = 0x9e3779b97f4a7c15ULL;
  for (Index i = 0; i < n; ++i) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    q(i) = 0.5 + static_cast<double>(z >> 11) * 0x1.0p-53;
  }
  q.normalize();

  std::vector<Vector> basis;
  std::vector<double> alpha;
  std::vector<double> beta;
  const Index max_steps = std::min<Index>(n, 600);
  double theta = 0.0;
  double theta_prev = -1.0;
  int stagnant = 0;
  for (Index j = 0; j < max_steps; ++j) {
    basis.push_back(q);
    Vector w = gram(q);
    const double a_j = q.dot(w);
    alpha.push_back(a_j);
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vector& b : basis) w -= b.dot(w) * b;
    }
    const double b_j = w.norm();
    beta.push_back(b_j);

    const Index k = static_cast<Index>(alpha.size());
    const bool breakdown = b_j <= 1e-300 || b_j <= 1e-14 * std::max(theta, a_j);
    const bool check = k <= 64 || k % 4 == 0 || breakdown || k == max_steps;
    if (check) {
      Vector diag = Eigen::Map<const Vector>(alpha.data(), k);
      Vector sub = k > 1 ? Vector(Eigen::Map<const Vector>(beta.data(), k - 1)) : Vector(0);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
      tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      theta = std::max(0.0, tri.eigenvalues()(k - 1));
      const double residual = b_j * std::abs(tri.eigenvectors()(k - 1, k - 1));
      if (theta == 0.0 && b_j == 0.0) return 0.0;
      if (residual <= 1e-12 * theta) break;
      stagnant = (theta_prev >= 0.0 && std::abs(theta - theta_prev) <= 1e-15 * theta) ? stagnant + 1 : 0;
      if (stagnant >= 8) break;
      theta_prev = theta;
    }
    if (breakdown) break;
    q = w / b_j;
  }
  return std::sqrt(theta);
}

}  // namespace lowrank
