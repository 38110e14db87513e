#pragma once

// Independent reference implementations for tests. Everything here is written
// with plain loops and uses Eigen only as storage, so it shares no algorithm
// with the library code under test.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "lowrank/linalg.hpp"
#include "lowrank/operators.hpp"
#include "lowrank/random.hpp"

namespace oracle {

using lowrank::Index;
using lowrank::Matrix;

inline double frobenius(const Matrix& a) {
  double s = 0.0;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

inline Matrix multiply(const Matrix& a, const Matrix& b) {
  Matrix c = Matrix::Zero(a.rows(), b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index k = 0; k < a.cols(); ++k)
      for (Index j = 0; j < b.cols(); ++j) c(i, j) += a(i, k) * b(k, j);
  return c;
}

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

struct Svd {
  Matrix u;                   // m x k
  std::vector<double> sigma;  // descending, k = min(m, n)
  Matrix v;                   // n x k
};

/// One-sided Jacobi (Hestenes) SVD.
inline Svd jacobi_svd(const Matrix& input) {
  const bool flip = input.rows() < input.cols();
  Matrix a = flip ? transpose(input) : input;  // tall: m >= n
  const Index m = a.rows();
  const Index n = a.cols();
  Matrix v = Matrix::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (Index i = 0; i < m; ++i) {
          alpha += a(i, p) * a(i, p);
          beta += a(i, q) * a(i, q);
          gamma += a(i, p) * a(i, q);
        }
        if (gamma == 0.0) continue;
        const double scale = std::sqrt(alpha * beta);
        if (scale == 0.0) continue;
        off = std::max(off, std::abs(gamma) / scale);
        if (std::abs(gamma) <= 1e-15 * scale) continue;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Index i = 0; i < m; ++i) {
          const double ap = a(i, p), aq = a(i, q);
          a(i, p) = c * ap - s * aq;
          a(i, q) = s * ap + c * aq;
        }
        for (Index i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (off <= 1e-15) break;
  }
  std::vector<double> norms(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    double s = 0.0;
    for (Index i = 0; i < m; ++i) s += a(i, j) * a(i, j);
    norms[static_cast<std::size_t>(j)] = std::sqrt(s);
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) {
    return norms[static_cast<std::size_t>(x)] > norms[static_cast<std::size_t>(y)];
  });
  Svd out;
  out.u = Matrix::Zero(m, n);
  out.v = Matrix::Zero(n, n);
  for (Index k = 0; k < n; ++k) {
    const Index j = order[static_cast<std::size_t>(k)];
    const double s = norms[static_cast<std::size_t>(j)];
    out.sigma.push_back(s);
    for (Index i = 0; i < m; ++i) out.u(i, k) = s > 0 ? a(i, j) / s : 0.0;
    for (Index i = 0; i < n; ++i) out.v(i, k) = v(i, j);
  }
  if (flip) std::swap(out.u, out.v);
  return out;
}

inline Matrix svt(const Matrix& z, double threshold) {
  const Svd s = jacobi_svd(z);
  Matrix out = Matrix::Zero(z.rows(), z.cols());
  for (std::size_t k = 0; k < s.sigma.size(); ++k) {
    const double shrunk = s.sigma[k] - threshold;
    if (shrunk <= 0) continue;
    for (Index i = 0; i < z.rows(); ++i)
      for (Index j = 0; j < z.cols(); ++j)
        out(i, j) += shrunk * s.u(i, static_cast<Index>(k)) * s.v(j, static_cast<Index>(k));
  }
  return out;
}

inline double nuclear_norm(const Matrix& a) {
  const Svd s = jacobi_svd(a);
  return std::accumulate(s.sigma.begin(), s.sigma.end(), 0.0);
}

inline Index rank(const Matrix& a, double rel_tol = 1e-8) {
  const Svd s = jacobi_svd(a);
  if (s.sigma.empty() || s.sigma[0] == 0.0) return 0;
  return static_cast<Index>(
      std::count_if(s.sigma.begin(), s.sigma.end(), [&](double x) { return x > rel_tol * s.sigma[0]; }));
}

/// Psi(X) by explicit loops, column-stacked vec for sensing.
inline Matrix apply(const lowrank::ObservationOp& op, const Matrix& x) {
  using Kind = lowrank::ObservationOp::Kind;
  if (op.kind() == Kind::identity) return x;
  if (op.kind() == Kind::entry_mask) {
    Matrix out = x;
    for (Index i = 0; i < x.rows(); ++i)
      for (Index j = 0; j < x.cols(); ++j) out(i, j) = op.mask()(i, j) * x(i, j);
    return out;
  }
  const Matrix& s = op.sensing();
  Matrix out = Matrix::Zero(s.rows(), 1);
  for (Index r = 0; r < s.rows(); ++r)
    for (Index j = 0; j < x.cols(); ++j)
      for (Index i = 0; i < x.rows(); ++i) out(r, 0) += s(r, j * x.rows() + i) * x(i, j);
  return out;
}

inline double loss(const lowrank::Problem& p, const Matrix& x) {
  const Matrix px = oracle::apply(p.op(), x);
  double s = 0.0;
  for (Index i = 0; i < px.rows(); ++i)
    for (Index j = 0; j < px.cols(); ++j) {
      const double r = (px(i, j) - p.observed()(i, j)) * p.weights()(i, j);
      s += r * r;
    }
  return 0.5 * s;
}

inline double objective(const lowrank::Problem& p, const Matrix& x) { return oracle::loss(p, x) + p.tau() * oracle::nuclear_norm(x); }

/// Central differences of f at X with step h.
inline Matrix fd_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x, double h) {
  Matrix g(x.rows(), x.cols());
  Matrix probe = x;
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < x.cols(); ++j) {
      const double orig = probe(i, j);
      probe(i, j) = orig + h;
      const double fp = f(probe);
      probe(i, j) = orig - h;
      const double fm = f(probe);
      probe(i, j) = orig;
      g(i, j) = (fp - fm) / (2.0 * h);
    }
  return g;
}

/// Largest singular value from the Jacobi SVD.
inline double spectral_norm(const Matrix& a) {
  const Svd s = jacobi_svd(a);
  return s.sigma.empty() ? 0.0 : s.sigma[0];
}

inline Matrix random_low_rank(Index m, Index n, Index r, lowrank::Rng& rng) {
  return multiply(rng.normal_matrix(m, r), rng.normal_matrix(r, n));
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::path(LOWRANK_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
