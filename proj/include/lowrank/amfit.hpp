#pragma once

// SVD-free replacement for the singular value thresholding step.
//
// For a fixed Z and mu = tau * gamma, alternately minimize
//   1/2 ||U V - Z||^2 + mu/2 (||U||^2 + ||V||^2)
// over U (m x r) and V (r x n). Each block update is an exact ridge solve on an
// r x r Gram system. When r >= rank(svt(Z, mu)) the minimizers satisfy
// U V = svt(Z, mu).

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>
#include <variant>

#include "lowrank/linalg.hpp"
#include "lowrank/random.hpp"

namespace lowrank {

struct FactorPair {
  Matrix u;  // m x r
  Matrix v;  // r x n

  Index rank_budget() const { return u.cols(); }
  Matrix product() const { return u * v; }
  bool is_zero() const { return u.isZero(0.0) || v.isZero(0.0); }
};

/// Gaussian factors scaled by 1/sqrt(r).
inline FactorPair random_factors(Index rows, Index cols, Index r, Rng& rng) {
  if (r <= 0) throw InvalidSpecError("random_factors: rank budget must be positive");
  const double scale = 1.0 / std::sqrt(static_cast<double>(r));
  FactorPair pair;
  pair.u = rng.normal_matrix(rows, r, scale);
  pair.v = rng.normal_matrix(r, cols, scale);
  return pair;
}

/// Exactly I alternating passes.
struct FixedPasses {
  int passes = 1;
};

/// Stop once ||U'V' - UV|| / max(||UV||, 1) <= eps, or after max_passes.
struct ToleranceStop {
  double eps = 1e-4;
  int max_passes = 20;
};

/// I = start + floor((k - 1) / every) passes at outer iteration k.
struct IncreasingPasses {
  int start = 1;
  int every = 50;
};

using InnerPolicy = std::variant<FixedPasses, ToleranceStop, IncreasingPasses>;

inline void validate(const InnerPolicy& policy) {
  std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, FixedPasses>) {
          if (p.passes < 1) throw InvalidSpecError("inner policy: passes must be >= 1");
        } else if constexpr (std::is_same_v<T, ToleranceStop>) {
          if (!(p.eps >= 0.0)) throw InvalidSpecError("inner policy: eps must be nonnegative");
          if (p.max_passes < 1) throw InvalidSpecError("inner policy: max_passes must be >= 1");
        } else {
          if (p.start < 1 || p.every < 1) throw InvalidSpecError("inner policy: start and every must be >= 1");
        }
      },
      policy);
}

inline void require_factor_shapes(const Matrix& z, const Matrix& factor, bool left, const char* what) {
  const bool ok = left ? factor.cols() == z.cols() : factor.rows() == z.rows();
  if (!ok) throw DimensionError(std::string(what) + ": factor " + shape_string(factor) + " vs Z " + shape_string(z));
}

/// argmin_U  1/2||U V - Z||^2 + mu/2 ||U||^2  =  Z V^T (V V^T + mu I)^{-1}
inline Matrix update_u(const Matrix& z, const Matrix& v, double mu) {
  require_factor_shapes(z, v, true, "update_u");
  if (!(mu > 0.0)) throw InvalidSpecError("update_u: mu must be positive");
  Matrix gram = v * v.transpose();
  gram.diagonal().array() += mu;
  const Matrix rhs = v * z.transpose();
  return spd_solve(gram, rhs).transpose();
}

/// argmin_V  1/2||U V - Z||^2 + mu/2 ||V||^2  =  (U^T U + mu I)^{-1} U^T Z
inline Matrix update_v(const Matrix& z, const Matrix& u, double mu) {
  require_factor_shapes(z, u, false, "update_v");
  if (!(mu > 0.0)) throw InvalidSpecError("update_v: mu must be positive");
  Matrix gram = u.transpose() * u;
  gram.diagonal().array() += mu;
  const Matrix rhs = u.transpose() * z;
  return spd_solve(gram, rhs);
}

inline double inner_objective(const Matrix& z, const FactorPair& f, double mu) {
  return 0.5 * (f.u * f.v - z).squaredNorm() + 0.5 * mu * (f.u.squaredNorm() + f.v.squaredNorm());
}

struct InnerResult {
  FactorPair factors;
  Matrix product;  // factors.u * factors.v
  int iterations = 0;
};

/// Alternating minimization under `policy`; `outer_iteration` (>= 1) drives IncreasingPasses.
inline InnerResult inner_solve(const Matrix& z, double mu, FactorPair start, const InnerPolicy& policy,
                               int outer_iteration = 1) {
  if (!(mu > 0.0)) throw InvalidSpecError("inner_solve: mu must be positive");
  if (start.u.rows() != z.rows() || start.v.cols() != z.cols() || start.u.cols() != start.v.rows()) {
    throw DimensionError("inner_solve: start factors " + shape_string(start.u) + " * " + shape_string(start.v) +
                         " do not match Z " + shape_string(z));
  }
  validate(policy);

  InnerResult out;
  out.factors = std::move(start);

  int max_passes = 1;
  double eps = -1.0;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, FixedPasses>) {
          max_passes = p.passes;
        } else if constexpr (std::is_same_v<T, ToleranceStop>) {
          max_passes = p.max_passes;
          eps = p.eps;
        } else {
          max_passes = p.start + std::max(0, outer_iteration - 1) / p.every;
        }
      },
      policy);

  if (eps < 0.0) {
    for (int i = 0; i < max_passes; ++i) {
      out.factors.u = update_u(z, out.factors.v, mu);
      out.factors.v = update_v(z, out.factors.u, mu);
    }
    out.iterations = max_passes;
    out.product = out.factors.product();
    return out;
  }

  Matrix previous = out.factors.product();
  for (int i = 0; i < max_passes; ++i) {
    out.factors.u = update_u(z, out.factors.v, mu);
    out.factors.v = update_v(z, out.factors.u, mu);
    out.product = out.factors.product();
    out.iterations = i + 1;
    const double change = (out.product - previous).norm() / std::max(previous.norm(), 1.0);
    if (change <= eps) break;
    previous = out.product;
  }
  return out;
}

/// Numerical rank of U V from the singular values of the small core R_U R_V^T.
inline Index product_rank(const Matrix& u, const Matrix& v, double rel_tol) {
  if (u.cols() == 0) return 0;
  Eigen::HouseholderQR<Matrix> qu(u);
  Eigen::HouseholderQR<Matrix> qv(v.transpose());
  const Index ku = std::min(u.rows(), u.cols());
  const Index kv = std::min(v.cols(), v.rows());
  const Matrix ru = qu.matrixQR().topRows(ku).triangularView<Eigen::Upper>();
  const Matrix rv = qv.matrixQR().topRows(kv).triangularView<Eigen::Upper>();
  return numerical_rank(ru * rv.transpose(), rel_tol);
}

}  // namespace lowrank
