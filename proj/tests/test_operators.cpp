#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "lowrank/operators.hpp"
#include "lowrank/random.hpp"
#include "oracles.hpp"

using namespace lowrank;

namespace {

Matrix random_mask(Index m, Index n, Rng& rng) {
  Matrix mask(m, n);
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
  return mask;
}

/// One random operator of each kind on an m x n domain.
std::vector<ObservationOp> all_variants(Index m, Index n, Rng& rng) {
  const Index d = rng.uniform_int(1, 2 * m * n);
  return {ObservationOp::identity(m, n), ObservationOp::entry_mask(random_mask(m, n, rng)),
          ObservationOp::dense_sensing(rng.normal_matrix(d, m * n, 1.0 / std::sqrt(double(d))), m, n)};
}

Problem random_problem(const ObservationOp& op, Rng& rng) {
  const Index r = op.codomain_rows();
  const Index c = op.codomain_cols();
  Matrix w(r, c);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(0.0, 3.0);
  return Problem(op, rng.normal_matrix(r, c), w, rng.uniform(0.1, 2.0));
}

}  // namespace

TEST(Operators, ApplyBasics) {
  Rng rng(1);
  const Matrix x = rng.normal_matrix(3, 4);
  EXPECT_EQ(apply(ObservationOp::identity(3, 4), x), x);
  EXPECT_EQ(apply(ObservationOp::entry_mask(Matrix::Ones(3, 4)), x), x);
  const ObservationOp s = ObservationOp::dense_sensing(Matrix::Identity(12, 12), 3, 4);
  const Matrix y = apply(s, x);
  ASSERT_EQ(y.rows(), 12);
  ASSERT_EQ(y.cols(), 1);
  EXPECT_EQ(unvec(Eigen::Map<const Vector>(y.data(), 12), 3, 4), x);
  EXPECT_EQ(adjoint(ObservationOp::identity(3, 4), x), x);
  const Matrix mask = random_mask(3, 4, rng);
  EXPECT_EQ(adjoint(ObservationOp::entry_mask(mask), x), mask.cwiseProduct(x));
}

TEST(Operators, ApplyMatchesLoopOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Index m = rng.uniform_int(1, 6), n = rng.uniform_int(1, 6);
    for (const auto& op : all_variants(m, n, rng)) {
      const Matrix x = rng.normal_matrix(m, n);
      EXPECT_LE((apply(op, x) - oracle::apply(op, x)).norm(), 1e-12 * (1 + x.norm()));
    }
  }
}

TEST(Operators, ShapeErrors) {
  const ObservationOp id = ObservationOp::identity(3, 4);
  EXPECT_THROW(apply(id, Matrix::Zero(4, 3)), DimensionError);
  EXPECT_THROW(adjoint(id, Matrix::Zero(4, 3)), DimensionError);
  EXPECT_THROW(ObservationOp::dense_sensing(Matrix::Zero(5, 11), 3, 4), DimensionError);
  EXPECT_THROW(ObservationOp::entry_mask(Matrix::Constant(2, 2, 0.5)), InvalidSpecError);
  const ObservationOp s = ObservationOp::dense_sensing(Matrix::Ones(5, 12), 3, 4);
  EXPECT_THROW(adjoint(s, Matrix::Zero(5, 2)), DimensionError);
}

TEST(Operators, AdjointIdentity) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Index m = rng.uniform_int(1, 8), n = rng.uniform_int(1, 8);
    for (const auto& op : all_variants(m, n, rng)) {
      const Matrix x = rng.normal_matrix(m, n);
      const Matrix r = rng.normal_matrix(op.codomain_rows(), op.codomain_cols());
      const double lhs = inner(apply(op, x), r);
      const double rhs = inner(x, adjoint(op, r));
      EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST(Operators, ProblemValidation) {
  const ObservationOp id = ObservationOp::identity(2, 2);
  EXPECT_THROW(Problem(id, Matrix::Zero(2, 3), Matrix::Ones(2, 3), 1.0), DimensionError);
  EXPECT_THROW(Problem(id, Matrix::Zero(2, 2), Matrix::Ones(2, 3), 1.0), DimensionError);
  EXPECT_THROW(Problem(id, Matrix::Zero(2, 2), -Matrix::Ones(2, 2), 1.0), InvalidSpecError);
  EXPECT_THROW(Problem(id, Matrix::Zero(2, 2), Matrix::Ones(2, 2), 0.0), InvalidSpecError);
  const Problem p(id, Matrix::Zero(2, 2), make_matrix(2, 2, {1, 2, 0, 3}), 1.0);
  EXPECT_EQ(p.weights_sq(), make_matrix(2, 2, {1, 4, 0, 9}));
}

TEST(Operators, GradientSimpleCases) {
  Rng rng(4);
  const Matrix f = rng.normal_matrix(4, 5);
  const Matrix x = rng.normal_matrix(4, 5);
  const Problem p(ObservationOp::identity(4, 5), f, Matrix::Ones(4, 5), 1.0);
  EXPECT_TRUE(gradient(p, x).isApprox(x - f, 1e-15));
  EXPECT_TRUE(gradient(p, f).isZero(0.0));
  EXPECT_THROW(gradient(p, Matrix::Zero(5, 4)), DimensionError);
}

TEST(Operators, GradientMatchesFiniteDifferences) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Index m = rng.uniform_int(2, 6), n = rng.uniform_int(2, 6);
    for (const auto& op : all_variants(m, n, rng)) {
      const Problem p = random_problem(op, rng);
      const Matrix x = rng.normal_matrix(m, n);
      const Matrix fd = oracle::fd_gradient([&](const Matrix& y) { return oracle::loss(p, y); }, x, 1e-6);
      const Matrix g = gradient(p, x);
      EXPECT_LE((g - fd).norm(), 1e-5 * std::max(1.0, fd.norm()));
    }
  }
}

TEST(Operators, LipschitzBound) {
  const Problem mask(ObservationOp::entry_mask(make_matrix(2, 2, {1, 0, 1, 1})), Matrix::Zero(2, 2),
                     Matrix::Ones(2, 2), 1.0);
  EXPECT_DOUBLE_EQ(lipschitz_bound(mask), 1.0);
  const Problem id(ObservationOp::identity(2, 2), Matrix::Zero(2, 2), make_matrix(2, 2, {1, 3, 0, 2}), 1.0);
  EXPECT_DOUBLE_EQ(lipschitz_bound(id), 9.0);
  const Problem zero(ObservationOp::identity(2, 2), Matrix::Zero(2, 2), Matrix::Zero(2, 2), 1.0);
  EXPECT_THROW(lipschitz_bound(zero), DegenerateProblemError);
}

TEST(Operators, LipschitzInequalitySampled) {
  Rng rng(6);
  for (int inst = 0; inst < 5; ++inst) {
    const Index m = rng.uniform_int(2, 7), n = rng.uniform_int(2, 7);
    for (const auto& op : all_variants(m, n, rng)) {
      const Problem p = random_problem(op, rng);
      const double l = lipschitz_bound(p);
      for (int pair = 0; pair < 100; ++pair) {
        const Matrix x = rng.normal_matrix(m, n);
        const Matrix y = rng.normal_matrix(m, n);
        EXPECT_LE((gradient(p, x) - gradient(p, y)).norm(), l * (x - y).norm() * (1 + 1e-12));
      }
    }
  }
}

TEST(Operators, Objective) {
  const Problem zero(ObservationOp::identity(3, 3), Matrix::Zero(3, 3), Matrix::Ones(3, 3), 0.7);
  EXPECT_EQ(objective(zero, Matrix::Zero(3, 3)), 0.0);
  Matrix f = Matrix::Zero(3, 3);
  f(0, 0) = 2.0;
  const Problem p(ObservationOp::identity(3, 3), f, Matrix::Ones(3, 3), 0.7);
  EXPECT_NEAR(objective(p, f), 1.4, 1e-14);

  Rng rng(7);
  for (const auto& op : all_variants(4, 5, rng)) {
    const Problem q = random_problem(op, rng);
    const Matrix x = rng.normal_matrix(4, 5);
    EXPECT_NEAR(objective(q, x), oracle::objective(q, x), 1e-10 * oracle::objective(q, x));
    EXPECT_NEAR(loss(q, x), oracle::loss(q, x), 1e-10 * oracle::loss(q, x));
  }
}

TEST(Operators, ObjectiveInvariantUnderSingularPairSignFlip) {
  Rng rng(8);
  const Problem p = random_problem(ObservationOp::identity(5, 4), rng);
  const Matrix x = rng.normal_matrix(5, 4);
  const Svd s = thin_svd(x);
  Matrix left = s.left, right = s.right;
  left.col(1) *= -1.0;
  right.col(1) *= -1.0;
  const Matrix same = left * s.sigma.asDiagonal() * right.transpose();
  EXPECT_NEAR(objective(p, same), objective(p, x), 1e-10 * objective(p, x));
}
