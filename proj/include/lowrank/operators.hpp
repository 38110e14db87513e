#pragma once

// Observation operators and the weighted least-squares loss
//   f(X) = 1/2 || (Psi(X) - F) .* W ||^2,   objective = f(X) + tau ||X||_*.

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>

#include "lowrank/linalg.hpp"

namespace lowrank {

class ObservationOp {
 public:
  enum class Kind { identity, entry_mask, dense_sensing };

  static ObservationOp identity(Index rows, Index cols) {
    if (rows <= 0 || cols <= 0) throw DimensionError("identity operator: dimensions must be positive");
    return ObservationOp(rows, cols, Identity{});
  }

  /// Entrywise mask; entries must be exactly 0 or 1.
  static ObservationOp entry_mask(Matrix mask) {
    if (mask.size() == 0) throw DimensionError("entry mask: empty");
    for (Index i = 0; i < mask.size(); ++i) {
      const double v = mask.data()[i];
      if (v != 0.0 && v != 1.0) throw InvalidSpecError("entry mask: entries must be 0 or 1");
    }
    const Index rows = mask.rows();
    const Index cols = mask.cols();
    return ObservationOp(rows, cols, EntryMask{std::make_shared<const Matrix>(std::move(mask))});
  }

  /// Dense sensing d x (rows*cols) acting on the column-stacked vec(X); codomain is d x 1.
  static ObservationOp dense_sensing(Matrix sensing, Index rows, Index cols) {
    if (rows <= 0 || cols <= 0) throw DimensionError("dense sensing: dimensions must be positive");
    if (sensing.rows() < 1 || sensing.cols() != rows * cols) {
      throw DimensionError("dense sensing: matrix is " + shape_string(sensing) + ", expected d x " +
                           std::to_string(rows * cols));
    }
    require_finite(sensing, "dense sensing");
    return ObservationOp(rows, cols, DenseSensing{std::make_shared<const Matrix>(std::move(sensing))});
  }

  Kind kind() const {
    return std::visit(
        [](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, Identity>) return Kind::identity;
          else if constexpr (std::is_same_v<T, EntryMask>) return Kind::entry_mask;
          else return Kind::dense_sensing;
        },
        variant_);
  }

  Index domain_rows() const { return rows_; }
  Index domain_cols() const { return cols_; }
  Index codomain_rows() const {
    if (const auto* s = std::get_if<DenseSensing>(&variant_)) return s->matrix->rows();
    return rows_;
  }
  Index codomain_cols() const { return kind() == Kind::dense_sensing ? 1 : cols_; }

  const Matrix& mask() const { return *std::get<EntryMask>(variant_).matrix; }
  const Matrix& sensing() const { return *std::get<DenseSensing>(variant_).matrix; }

  Matrix apply(const Matrix& x) const {
    if (x.rows() != rows_ || x.cols() != cols_) {
      throw DimensionError("apply: X is " + shape_string(x) + ", domain is " + std::to_string(rows_) + "x" +
                           std::to_string(cols_));
    }
    return std::visit(
        [&](const auto& v) -> Matrix {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, Identity>) return x;
          else if constexpr (std::is_same_v<T, EntryMask>) return v.matrix->cwiseProduct(x);
          else {
            const Vector y = *v.matrix * vec(x);
            return Matrix(Eigen::Map<const Matrix>(y.data(), y.size(), 1));
          }
        },
        variant_);
  }

  Matrix adjoint(const Matrix& r) const {
    if (r.rows() != codomain_rows() || r.cols() != codomain_cols()) {
      throw DimensionError("adjoint: R is " + shape_string(r) + ", codomain is " + std::to_string(codomain_rows()) +
                           "x" + std::to_string(codomain_cols()));
    }
    return std::visit(
        [&](const auto& v) -> Matrix {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, Identity>) return r;
          else if constexpr (std::is_same_v<T, EntryMask>) return v.matrix->cwiseProduct(r);
          else {
            const Vector flat = Eigen::Map<const Vector>(r.data(), r.size());
            return unvec(v.matrix->transpose() * flat, rows_, cols_);
          }
        },
        variant_);
  }

  /// Operator norm ||Psi||; identity and masks are taken as 1.
  double norm() const {
    if (const auto* s = std::get_if<DenseSensing>(&variant_)) return spectral_norm(*s->matrix);
    return 1.0;
  }

 private:
  struct Identity {};
  struct EntryMask {
    std::shared_ptr<const Matrix> matrix;
  };
  struct DenseSensing {
    std::shared_ptr<const Matrix> matrix;
  };
  using Variant = std::variant<Identity, EntryMask, DenseSensing>;

  ObservationOp(Index rows, Index cols, Variant v) : rows_(rows), cols_(cols), variant_(std::move(v)) {}

  Index rows_;
  Index cols_;
  Variant variant_;
};

inline Matrix apply(const ObservationOp& op, const Matrix& x) { return op.apply(x); }
inline Matrix adjoint(const ObservationOp& op, const Matrix& r) { return op.adjoint(r); }

/// One recovery instance (Psi, F, W, tau). W.*W is cached at construction.
class Problem {
 public:
  Problem(ObservationOp op, Matrix observed, Matrix weights, double tau)
      : op_(std::move(op)), observed_(std::move(observed)), weights_(std::move(weights)), tau_(tau) {
    const Index rows = op_.codomain_rows();
    const Index cols = op_.codomain_cols();
    if (observed_.rows() != rows || observed_.cols() != cols) {
      throw DimensionError("problem: F is " + shape_string(observed_) + ", codomain is " + std::to_string(rows) +
                           "x" + std::to_string(cols));
    }
    require_same_shape(weights_, observed_, "problem: W vs F");
    require_finite(observed_, "problem: F");
    require_finite(weights_, "problem: W");
    if ((weights_.array() < 0.0).any()) throw InvalidSpecError("problem: weights must be nonnegative");
    if (!(tau_ > 0.0) || !std::isfinite(tau_)) throw InvalidSpecError("problem: tau must be positive and finite");
    weights_sq_ = weights_.cwiseProduct(weights_);
  }

  const ObservationOp& op() const { return op_; }
  const Matrix& observed() const { return observed_; }
  const Matrix& weights() const { return weights_; }
  const Matrix& weights_sq() const { return weights_sq_; }
  double tau() const { return tau_; }
  Index rows() const { return op_.domain_rows(); }
  Index cols() const { return op_.domain_cols(); }

  Problem with_tau(double tau) const { return Problem(op_, observed_, weights_, tau); }

 private:
  ObservationOp op_;
  Matrix observed_;
  Matrix weights_;
  double tau_;
  Matrix weights_sq_;
};

inline void require_domain(const Problem& p, const Matrix& x, const char* what) {
  if (x.rows() != p.rows() || x.cols() != p.cols()) {
    throw DimensionError(std::string(what) + ": X is " + shape_string(x) + ", domain is " + std::to_string(p.rows()) +
                         "x" + std::to_string(p.cols()));
  }
}

/// adjoint(Psi, (Psi(X) - F) .* W~)
inline Matrix gradient(const Problem& p, const Matrix& x) {
  require_domain(p, x, "gradient");
  Matrix residual = p.op().apply(x) - p.observed();
  residual.array() *= p.weights_sq().array();
  return p.op().adjoint(residual);
}

/// L = ||Psi||^2 * max W~.
inline double lipschitz_bound(const Problem& p) {
  const double max_w = p.weights_sq().maxCoeff();
  if (!(max_w > 0.0)) throw DegenerateProblemError("lipschitz_bound: weight matrix is identically zero");
  const double psi = p.op().norm();
  return psi * psi * max_w;
}

inline double loss(const Problem& p, const Matrix& x) {
  require_domain(p, x, "loss");
  const Matrix residual = p.op().apply(x) - p.observed();
  return 0.5 * (residual.array().square() * p.weights_sq().array()).sum();
}

inline double nuclear_norm(const Matrix& x) { return singular_values(x).sum(); }

/// f(X) + tau ||X||_*; needs an SVD, so it is only used for traces and tests.
inline double objective(const Problem& p, const Matrix& x) { return loss(p, x) + p.tau() * nuclear_norm(x); }

}  // namespace lowrank
